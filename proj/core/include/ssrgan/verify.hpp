#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssrgan/model.hpp"

namespace ssrgan {

struct CheckOutcome {
    std::string name;
    bool passed = false;
    /// Measured error (or count for structural checks) and its bound.
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct SuiteReport {
    std::vector<CheckOutcome> checks;

    bool passed() const;
    std::size_t failures() const;
    double worst(const std::string& name_prefix = "") const;
};

using CheckListener = std::function<void(const CheckOutcome&)>;

struct GradientSuiteOptions {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    double eps = 1e-5;
    double tolerance = 1e-4;
    /// Coordinates sampled per parameter tensor for default-size model checks.
    std::size_t default_model_coords = 12;
    bool include_default_model = true;
};

/// Finite-difference checks (64-bit) for every differentiable op, every block of
/// the default model in both modes, and the composed losses: cycle + adversarial,
/// autoencoder, middle content, and the weighted total.
SuiteReport gradient_suite(const GradientSuiteOptions& opts = {}, const CheckListener& listener = {});

/// Adjoint identities on random specs and on every block of the default model,
/// plus the parameter-sharing invariants.
SuiteReport reversibility_suite(std::uint64_t seed = 1, double tolerance = 1e-10,
                                const CheckListener& listener = {});

/// A small but complete configuration (window 16) used for full-coordinate checks.
ModelConfig tiny_model_config();

} // namespace ssrgan
