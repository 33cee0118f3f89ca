#include "run_config.hpp"

#include <algorithm>

namespace ssrgan::cli {

void to_json(Json& j, const DataSizes& v) {
    j = Json{{"n_train_a", v.n_train_a}, {"n_train_b", v.n_train_b}, {"n_eval", v.n_eval}};
}

void from_json(const Json& j, DataSizes& v) {
    reject_unknown_keys(j, {"n_train_a", "n_train_b", "n_eval"}, "data");
    read_key(j, "n_train_a", v.n_train_a, "data");
    read_key(j, "n_train_b", v.n_train_b, "data");
    read_key(j, "n_eval", v.n_eval, "data");
}

void to_json(Json& j, const PreprocessConfig& v) {
    j = Json{{"band_lo_hz", v.band_lo_hz},
             {"band_hi_hz", v.band_hi_hz},
             {"target_rate_hz", v.target_rate_hz},
             {"window_s", v.window_s}};
}

void from_json(const Json& j, PreprocessConfig& v) {
    reject_unknown_keys(j, {"band_lo_hz", "band_hi_hz", "target_rate_hz", "window_s"}, "preprocess");
    read_key(j, "band_lo_hz", v.band_lo_hz, "preprocess");
    read_key(j, "band_hi_hz", v.band_hi_hz, "preprocess");
    read_key(j, "target_rate_hz", v.target_rate_hz, "preprocess");
    read_key(j, "window_s", v.window_s, "preprocess");
}

void to_json(Json& j, const GradcheckConfig& v) {
    j = Json{{"seeds", v.seeds},
             {"eps", v.eps},
             {"tolerance", v.tolerance},
             {"default_model_coords", v.default_model_coords},
             {"adjoint_tolerance", v.adjoint_tolerance}};
}

void from_json(const Json& j, GradcheckConfig& v) {
    constexpr std::string_view ctx = "gradcheck";
    reject_unknown_keys(j, {"seeds", "eps", "tolerance", "default_model_coords", "adjoint_tolerance"}, ctx);
    read_key(j, "seeds", v.seeds, ctx);
    read_key(j, "eps", v.eps, ctx);
    read_key(j, "tolerance", v.tolerance, ctx);
    read_key(j, "default_model_coords", v.default_model_coords, ctx);
    read_key(j, "adjoint_tolerance", v.adjoint_tolerance, ctx);
}

std::string RunConfig::path(const std::string& key) const {
    auto it = paths.find(key);
    if (it == paths.end() || it->second.empty()) {
        throw ConfigError("cli", "missing path '" + key + "' (pass --" + key + ")");
    }
    return it->second;
}

void RunConfig::validate() const {
    synth.validate();
    model.validate();
    train.validate();
    if (model.sharing_enabled != train.sharing_enabled) {
        throw ConfigError("cli", "model.sharing_enabled and train.sharing_enabled disagree");
    }
    if (preset) ablation_preset(*preset);
    if (baseline && *baseline != "aas") throw ConfigError("cli", "unknown baseline '" + *baseline + "' (expected aas)");
    if (data.n_train_a == 0 || data.n_train_b == 0 || data.n_eval == 0) {
        throw ConfigError("cli", "data.n_train_a, data.n_train_b and data.n_eval must be >= 1");
    }
    if (!(preprocess.window_s > 0.0)) throw ConfigError("cli", "preprocess.window_s must be positive");
    if (!(preprocess.target_rate_hz > 0.0)) throw ConfigError("cli", "preprocess.target_rate_hz must be positive");
    if (gradcheck.seeds.empty()) throw ConfigError("cli", "gradcheck.seeds must not be empty");
    for (const auto& [k, _] : paths) {
        if (std::find(path_keys().begin(), path_keys().end(), k) == path_keys().end()) {
            throw ConfigError("cli", "paths: unknown key '" + k + "'");
        }
    }
}

void to_json(Json& j, const RunConfig& v) {
    j = Json{{"synth", v.synth},           {"data", v.data},   {"model", v.model},
             {"train", v.train},           {"preset", nullptr}, {"preprocess", v.preprocess},
             {"aas", v.aas},               {"gradcheck", v.gradcheck}, {"paths", v.paths}};
    if (v.preset) j["preset"] = *v.preset;
    j["baseline"] = v.baseline ? Json(*v.baseline) : Json(nullptr);
}

void from_json(const Json& j, RunConfig& v) {
    if (!j.is_object()) throw ConfigError("cli", "config must be a JSON object");
    reject_unknown_keys(j, {"synth", "data", "model", "train", "preset", "preprocess", "aas", "gradcheck", "paths", "baseline"},
                        "config");
    auto section = [&](const char* key, auto& out) {
        auto it = j.find(key);
        if (it == j.end()) return;
        if (!it->is_object()) throw ConfigError("cli", std::string(key) + " must be an object");
        from_json(*it, out);
    };
    auto it = j.find("synth");
    if (it != j.end()) {
        if (!it->is_object()) throw ConfigError("cli", "synth must be an object");
        ssrgan::from_json(*it, v.synth);
    }
    section("data", v.data);
    it = j.find("model");
    if (it != j.end()) ssrgan::from_json(*it, v.model);
    it = j.find("train");
    if (it != j.end()) ssrgan::from_json(*it, v.train);
    it = j.find("aas");
    if (it != j.end()) ssrgan::from_json(*it, v.aas);
    section("preprocess", v.preprocess);
    section("gradcheck", v.gradcheck);
    it = j.find("preset");
    if (it != j.end()) {
        if (it->is_null()) {
            v.preset.reset();
        } else if (it->is_string()) {
            v.preset = it->get<std::string>();
        } else {
            throw ConfigError("cli", "preset must be a string or null");
        }
    }
    it = j.find("baseline");
    if (it != j.end()) {
        if (it->is_null()) {
            v.baseline.reset();
        } else if (it->is_string()) {
            v.baseline = it->get<std::string>();
        } else {
            throw ConfigError("cli", "baseline must be a string or null");
        }
    }
    it = j.find("paths");
    if (it != j.end()) {
        if (!it->is_object()) throw ConfigError("cli", "paths must be an object");
        for (const auto& [k, val] : it->items()) {
            if (!val.is_string()) throw ConfigError("cli", "paths." + k + " must be a string");
            v.paths[k] = val.get<std::string>();
        }
    }
}

namespace {

std::string kebab(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

void collect(const Json& node, const Json::json_pointer& where, const std::string& flag, std::vector<FlagSpec>& out) {
    if (node.is_object()) {
        for (const auto& [k, v] : node.items()) collect(v, where / k, flag.empty() ? kebab(k) : flag + "-" + kebab(k), out);
        return;
    }
    std::string help = "override " + where.to_string();
    if (node.is_array() || node.is_null()) help += " (JSON value)";
    out.push_back({flag, where, help});
}

} // namespace

std::vector<FlagSpec> override_flags() {
    Json defaults = RunConfig{};
    defaults.erase("paths");
    defaults.erase("preset");
    defaults.erase("baseline");
    std::vector<FlagSpec> out;
    collect(defaults, Json::json_pointer(), "", out);
    return out;
}

void apply_override(Json& config, const FlagSpec& spec, const std::string& text) {
    const Json& current = config.contains(spec.where) ? config.at(spec.where) : Json();
    Json value;
    if (current.is_string()) {
        value = text;
    } else if (current.is_boolean() && (text == "true" || text == "false" || text == "1" || text == "0")) {
        value = text == "true" || text == "1";
    } else {
        try {
            value = Json::parse(text);
        } catch (const Json::parse_error&) {
            throw ConfigError("cli", "--" + spec.flag + ": cannot parse '" + text + "'");
        }
        const bool ok = current.is_null() || (current.is_number() && value.is_number()) ||
                        (current.is_array() && value.is_array()) || (current.is_boolean() && value.is_boolean());
        if (!ok) throw ConfigError("cli", "--" + spec.flag + ": expected a value like " + current.dump());
        if (current.is_number_unsigned() && !(value.is_number_unsigned() || (value.is_number_integer() && value.get<long long>() >= 0))) {
            throw ConfigError("cli", "--" + spec.flag + ": expected a non-negative integer, got '" + text + "'");
        }
    }
    config[spec.where] = value;
}

void apply_preset(RunConfig& cfg, const std::string& name) {
    const TrainConfig p = ablation_preset(name);
    cfg.train.sn2_enabled = p.sn2_enabled;
    cfg.train.sn3_enabled = p.sn3_enabled;
    cfg.train.sharing_enabled = p.sharing_enabled;
    cfg.train.weights.forward_emphasis = p.weights.forward_emphasis;
    cfg.model.sharing_enabled = p.sharing_enabled;
    cfg.preset = name;
}

} // namespace ssrgan::cli
