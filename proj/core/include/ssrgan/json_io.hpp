#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ssrgan/conv.hpp"
#include "ssrgan/losses.hpp"
#include "ssrgan/metrics.hpp"
#include "ssrgan/model.hpp"
#include "ssrgan/optim.hpp"
#include "ssrgan/trainer.hpp"

namespace ssrgan {

using Json = nlohmann::json;

/// Throws ConfigError("<context>: unknown key '<k>'") for any key outside `allowed`.
void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view context);

/// Reads j[key] into out when present; type mismatches become ConfigError naming the key.
template <typename V>
void read_key(const Json& j, std::string_view key, V& out, std::string_view context) {
    auto it = j.find(std::string(key));
    if (it == j.end()) return;
    try {
        out = it->template get<V>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config", std::string(context) + "." + std::string(key) + ": " + e.what());
    }
}

// Missing keys keep their defaults; unknown keys are rejected.
void to_json(Json& j, const ConvSpec& v);
void from_json(const Json& j, ConvSpec& v);
void to_json(Json& j, const ModelConfig& v);
void from_json(const Json& j, ModelConfig& v);
void to_json(Json& j, const LossWeights& v);
void from_json(const Json& j, LossWeights& v);
void to_json(Json& j, const MmdConfig& v);
void from_json(const Json& j, MmdConfig& v);
void to_json(Json& j, const AdamConfig& v);
void from_json(const Json& j, AdamConfig& v);
void to_json(Json& j, const AasConfig& v);
void from_json(const Json& j, AasConfig& v);
void to_json(Json& j, const TrainConfig& v);
void from_json(const Json& j, TrainConfig& v);

Json read_json_file(const std::string& path);
void write_json_file(const Json& j, const std::string& path);

} // namespace ssrgan
