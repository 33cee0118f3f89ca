#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "ssrgan/autodiff.hpp"

namespace ssrgan {

struct GradCheckResult {
    /// max over checked coordinates of |g_ad - g_fd| / max(1, |g_fd|)
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    /// Coordinates whose +/-eps evaluations took a different branch of a
    /// non-smooth op than the base point; central differences are not a
    /// derivative estimate there, so they are reported instead of compared.
    std::size_t skipped_nonsmooth = 0;
    /// Same error measure over the skipped coordinates (informational).
    double max_rel_error_nonsmooth = 0.0;
};

template <typename T>
using ScalarFn = std::function<Var<T>(Tape<T>&, Var<T>)>;

template <typename T>
using LossFn = std::function<Var<T>(Tape<T>&)>;

/// Compares the reverse-mode gradient of f at x with central differences.
/// max_coords == 0 checks every coordinate; otherwise a seeded random subset.
template <typename T>
GradCheckResult finite_diff_check(const ScalarFn<T>& f, const Tensor<T>& x, double eps,
                                  std::size_t max_coords = 0, std::uint64_t seed = 0);

/// Same, with respect to parameters bound inside f (via Tape::parameter).
/// Parameter values and grads are restored afterwards.
template <typename T>
GradCheckResult finite_diff_check_params(const LossFn<T>& f, std::span<Parameter<T>* const> params, double eps,
                                         std::size_t max_coords_per_param = 0, std::uint64_t seed = 0);

} // namespace ssrgan
