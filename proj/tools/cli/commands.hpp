#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace ssrgan::cli {

/// Exit codes: 0 ok, 1 usage/config, 2 runtime/numerical.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

int cmd_synth(const RunConfig& cfg, std::ostream& log);
int cmd_preprocess(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_denoise(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& log);
int cmd_features(const RunConfig& cfg, std::ostream& log);

/// Parses argv, runs the subcommand and maps errors to exit codes.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ssrgan::cli
