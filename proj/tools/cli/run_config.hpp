#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssrgan/json_io.hpp"
#include "ssrgan/metrics.hpp"
#include "ssrgan/synth.hpp"
#include "ssrgan/trainer.hpp"

namespace ssrgan::cli {

struct DataSizes {
    std::size_t n_train_a = 512;
    std::size_t n_train_b = 512;
    std::size_t n_eval = 60;
    bool operator==(const DataSizes&) const = default;
};

struct PreprocessConfig {
    double band_lo_hz = 0.1;
    double band_hi_hz = 70.0;
    double target_rate_hz = 250.0;
    double window_s = 1.0;
    bool operator==(const PreprocessConfig&) const = default;
};

struct GradcheckConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    double eps = 1e-5;
    double tolerance = 1e-4;
    std::size_t default_model_coords = 12;
    double adjoint_tolerance = 1e-10;
    bool operator==(const GradcheckConfig&) const = default;
};

/// Everything a run needs; echoed to <out>/config.json.
struct RunConfig {
    SynthConfig synth;
    DataSizes data;
    ModelConfig model;
    TrainConfig train;
    std::optional<std::string> preset;
    PreprocessConfig preprocess;
    AasConfig aas;
    GradcheckConfig gradcheck;
    /// eval only: score this baseline instead of a model ("aas").
    std::optional<std::string> baseline;
    /// out, data, checkpoint, input, before, after, clean
    std::map<std::string, std::string> paths;

    std::string path(const std::string& key) const;
    bool has_path(const std::string& key) const { return paths.count(key) > 0; }
    /// Cross-field checks (sharing toggle agreement, preset name); ConfigError on failure.
    void validate() const;
};

inline const std::vector<std::string>& path_keys() {
    static const std::vector<std::string> keys{"out", "data", "checkpoint", "input", "before", "after", "clean"};
    return keys;
}

void to_json(Json& j, const RunConfig& v);
void from_json(const Json& j, RunConfig& v);

/// Leaf of the config tree that can be set from the command line.
struct FlagSpec {
    std::string flag;          // e.g. "train-adam-lr"
    Json::json_pointer where;  // e.g. /train/adam/lr
    std::string help;
};

/// One flag per leaf of the default config (arrays and nullable values count as leaves).
std::vector<FlagSpec> override_flags();

/// Parses a textual flag value against the type of the current value at `where`.
void apply_override(Json& config, const FlagSpec& spec, const std::string& text);

/// Applies the ablation toggles of a preset (sn2/sn3/sharing/forward emphasis) to cfg.
void apply_preset(RunConfig& cfg, const std::string& name);

} // namespace ssrgan::cli
