#include "ssrgan/json_io.hpp"

#include <algorithm>
#include <fstream>

namespace ssrgan {

void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view context) {
    if (!j.is_object()) throw ConfigError("config", std::string(context) + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError("config", std::string(context) + ": unknown key '" + item.key() + "'");
        }
    }
}

void to_json(Json& j, const ConvSpec& v) {
    j = Json{{"in_channels", v.in_channels},
             {"out_channels", v.out_channels},
             {"kernel_size", v.kernel_size},
             {"stride", v.stride},
             {"padding", v.padding}};
}

void from_json(const Json& j, ConvSpec& v) {
    constexpr std::string_view ctx = "conv";
    reject_unknown_keys(j, {"in_channels", "out_channels", "kernel_size", "stride", "padding"}, ctx);
    read_key(j, "in_channels", v.in_channels, ctx);
    read_key(j, "out_channels", v.out_channels, ctx);
    read_key(j, "kernel_size", v.kernel_size, ctx);
    read_key(j, "stride", v.stride, ctx);
    read_key(j, "padding", v.padding, ctx);
}

void to_json(Json& j, const ModelConfig& v) {
    j = Json{{"window_length", v.window_length},
             {"data_channels", v.data_channels},
             {"blocks", v.blocks},
             {"discriminator", v.discriminator},
             {"activation_slope", v.activation_slope},
             {"init_std", v.init_std},
             {"sharing_enabled", v.sharing_enabled}};
}

void from_json(const Json& j, ModelConfig& v) {
    constexpr std::string_view ctx = "model";
    reject_unknown_keys(j,
                        {"window_length", "data_channels", "blocks", "discriminator", "activation_slope", "init_std",
                         "sharing_enabled"},
                        ctx);
    read_key(j, "window_length", v.window_length, ctx);
    read_key(j, "data_channels", v.data_channels, ctx);
    read_key(j, "blocks", v.blocks, ctx);
    read_key(j, "discriminator", v.discriminator, ctx);
    read_key(j, "activation_slope", v.activation_slope, ctx);
    read_key(j, "init_std", v.init_std, ctx);
    read_key(j, "sharing_enabled", v.sharing_enabled, ctx);
}

void to_json(Json& j, const LossWeights& v) {
    j = Json{{"lambda_cyc", v.lambda_cyc},         {"lambda_gan", v.lambda_gan},
             {"lambda_ae", v.lambda_ae},           {"lambda_mid_mse", v.lambda_mid_mse},
             {"lambda_mid_mmd", v.lambda_mid_mmd}, {"forward_emphasis", v.forward_emphasis}};
}

void from_json(const Json& j, LossWeights& v) {
    constexpr std::string_view ctx = "weights";
    reject_unknown_keys(
        j, {"lambda_cyc", "lambda_gan", "lambda_ae", "lambda_mid_mse", "lambda_mid_mmd", "forward_emphasis"}, ctx);
    read_key(j, "lambda_cyc", v.lambda_cyc, ctx);
    read_key(j, "lambda_gan", v.lambda_gan, ctx);
    read_key(j, "lambda_ae", v.lambda_ae, ctx);
    read_key(j, "lambda_mid_mse", v.lambda_mid_mse, ctx);
    read_key(j, "lambda_mid_mmd", v.lambda_mid_mmd, ctx);
    read_key(j, "forward_emphasis", v.forward_emphasis, ctx);
}

void to_json(Json& j, const MmdConfig& v) {
    j = Json{{"multipliers", v.multipliers}};
    j["fixed_bandwidth"] = v.fixed_bandwidth ? Json(*v.fixed_bandwidth) : Json(nullptr);
}

void from_json(const Json& j, MmdConfig& v) {
    constexpr std::string_view ctx = "mmd";
    reject_unknown_keys(j, {"multipliers", "fixed_bandwidth"}, ctx);
    read_key(j, "multipliers", v.multipliers, ctx);
    if (auto it = j.find("fixed_bandwidth"); it != j.end()) {
        if (it->is_null()) {
            v.fixed_bandwidth.reset();
        } else {
            double bw = 0.0;
            read_key(j, "fixed_bandwidth", bw, ctx);
            v.fixed_bandwidth = bw;
        }
    }
}

void to_json(Json& j, const AdamConfig& v) {
    j = Json{{"lr", v.lr}, {"beta1", v.beta1}, {"beta2", v.beta2}, {"epsilon", v.epsilon}};
}

void from_json(const Json& j, AdamConfig& v) {
    constexpr std::string_view ctx = "adam";
    reject_unknown_keys(j, {"lr", "beta1", "beta2", "epsilon"}, ctx);
    read_key(j, "lr", v.lr, ctx);
    read_key(j, "beta1", v.beta1, ctx);
    read_key(j, "beta2", v.beta2, ctx);
    read_key(j, "epsilon", v.epsilon, ctx);
}

void to_json(Json& j, const TrainConfig& v) {
    j = Json{{"iterations", v.iterations},
             {"batch_size", v.batch_size},
             {"g_steps_per_d_step", v.g_steps_per_d_step},
             {"final_g_only_iters", v.final_g_only_iters},
             {"seed", v.seed},
             {"adam", v.adam},
             {"sn2_enabled", v.sn2_enabled},
             {"sn3_enabled", v.sn3_enabled},
             {"sharing_enabled", v.sharing_enabled},
             {"weights", v.weights},
             {"mmd", v.mmd},
             {"clip_norm", v.clip_norm}};
}

void from_json(const Json& j, TrainConfig& v) {
    constexpr std::string_view ctx = "train";
    reject_unknown_keys(j,
                        {"iterations", "batch_size", "g_steps_per_d_step", "final_g_only_iters", "seed", "adam",
                         "sn2_enabled", "sn3_enabled", "sharing_enabled", "weights", "mmd", "clip_norm"},
                        ctx);
    read_key(j, "iterations", v.iterations, ctx);
    read_key(j, "batch_size", v.batch_size, ctx);
    read_key(j, "g_steps_per_d_step", v.g_steps_per_d_step, ctx);
    read_key(j, "final_g_only_iters", v.final_g_only_iters, ctx);
    read_key(j, "seed", v.seed, ctx);
    read_key(j, "adam", v.adam, ctx);
    read_key(j, "sn2_enabled", v.sn2_enabled, ctx);
    read_key(j, "sn3_enabled", v.sn3_enabled, ctx);
    read_key(j, "sharing_enabled", v.sharing_enabled, ctx);
    read_key(j, "weights", v.weights, ctx);
    read_key(j, "mmd", v.mmd, ctx);
    read_key(j, "clip_norm", v.clip_norm, ctx);
}

void to_json(Json& j, const AasConfig& v) {
    j = Json{{"min_period_s", v.min_period_s},       {"max_period_s", v.max_period_s},
             {"epochs", v.epochs},                   {"onset_tolerance_s", v.onset_tolerance_s},
             {"detection_lo_hz", v.detection_lo_hz}, {"detection_hi_hz", v.detection_hi_hz},
             {"min_peak_correlation", v.min_peak_correlation}};
}

void from_json(const Json& j, AasConfig& v) {
    constexpr std::string_view ctx = "aas";
    reject_unknown_keys(
        j, {"min_period_s", "max_period_s", "epochs", "onset_tolerance_s", "detection_lo_hz", "detection_hi_hz",
            "min_peak_correlation"}, ctx);
    read_key(j, "min_period_s", v.min_period_s, ctx);
    read_key(j, "max_period_s", v.max_period_s, ctx);
    read_key(j, "epochs", v.epochs, ctx);
    read_key(j, "onset_tolerance_s", v.onset_tolerance_s, ctx);
    read_key(j, "detection_lo_hz", v.detection_lo_hz, ctx);
    read_key(j, "detection_hi_hz", v.detection_hi_hz, ctx);
    read_key(j, "min_peak_correlation", v.min_peak_correlation, ctx);
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", path + ": " + e.what());
    }
}

void write_json_file(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("config", "cannot write " + path);
    out << j.dump(2) << '\n';
}

} // namespace ssrgan
