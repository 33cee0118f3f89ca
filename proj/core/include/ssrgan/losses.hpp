#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssrgan/autodiff.hpp"

namespace ssrgan {

/// Per-term weights of the total objective. A disabled subnet has its
/// weights forced to exactly 0 (see TrainConfig::effective_weights).
struct LossWeights {
    double lambda_cyc = 10.0;
    double lambda_gan = 1.0;
    double lambda_ae = 1.0;
    double lambda_mid_mse = 1.0;
    double lambda_mid_mmd = 0.5;
    /// Extra factor on the denoising direction (A -> B) cycle and adversarial terms.
    double forward_emphasis = 1.0;

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

/// Gaussian kernels k(x,y) = exp(-|x-y|^2 / (2 sigma^2)) with sigma = multiplier * base.
/// base is the median pairwise distance of the pooled samples unless fixed_bandwidth is set.
struct MmdConfig {
    std::vector<double> multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
    std::optional<double> fixed_bandwidth;

    void validate() const;
    bool operator==(const MmdConfig&) const = default;
};

enum class GanRole { discriminator, generator };

/// mean|a_rec - a| + mean|b_rec - b|
template <typename T>
Var<T> cycle_loss(Var<T> a, Var<T> a_rec, Var<T> b, Var<T> b_rec);

/// discriminator: mean((real-1)^2) + mean(fake^2); generator: mean((fake-1)^2) (real is ignored).
template <typename T>
Var<T> lsgan_loss(std::optional<Var<T>> scores_real, Var<T> scores_fake, GanRole role);

/// MSE(ae_a, a) + MSE(ae_b, b)
template <typename T>
Var<T> ae_loss(Var<T> ae_a, Var<T> a, Var<T> ae_b, Var<T> b);

/// Biased (V-statistic) multi-kernel MMD^2 between the item sets of X and Y
/// (each item flattened over channels x length). Differentiable, including
/// through the median-heuristic bandwidth.
template <typename T>
Var<T> mk_mmd(Var<T> x, Var<T> y, const MmdConfig& cfg);

template <typename T>
T mk_mmd_value(const Tensor<T>& x, const Tensor<T>& y, const MmdConfig& cfg);

template <typename T>
struct MiddleContentTerms {
    Var<T> mse;
    Var<T> mmd;
};

/// Both sides of the middle-content objective:
///   mse = MSE(phi1(a), phi2(G_f a)) + MSE(phi2(b), phi1(G_r b))
///   mmd = mk_mmd({phi1(a)}, {phi2(b)}) + mk_mmd({phi2(b)}, {phi1(a)})
template <typename T>
MiddleContentTerms<T> middle_content_loss(Var<T> phi1_a, Var<T> phi2_fa, Var<T> phi2_b, Var<T> phi1_rb,
                                          const MmdConfig& cfg);

/// One side only: MSE(own, translated) + (separately) mk_mmd(own, other).
template <typename T>
MiddleContentTerms<T> middle_content_side(Var<T> phi_own, Var<T> phi_translated, Var<T> phi_other,
                                          const MmdConfig& cfg);

/// Scalar loss parts. `ae`, `mid_*` are 0 when the subnet is disabled.
struct LossParts {
    double cycle_a = 0.0;
    double cycle_b = 0.0;
    double gan_f = 0.0;
    double gan_r = 0.0;
    double ae = 0.0;
    double mid_mse = 0.0;
    double mid_mmd = 0.0;

    double cycle() const { return cycle_a + cycle_b; }
    double gan() const { return gan_f + gan_r; }
};

/// lambda_cyc*(e*cycle_a + cycle_b) + lambda_gan*(e*gan_f + gan_r) + lambda_ae*ae
///   + lambda_mid_mse*mid_mse + lambda_mid_mmd*mid_mmd,   e = forward_emphasis.
/// Throws NumericalError naming the first non-finite part.
double total_loss(const LossParts& parts, const LossWeights& w);

/// Graph version of total_loss; absent terms contribute nothing.
template <typename T>
struct LossTerms {
    Var<T> cycle_a;
    Var<T> cycle_b;
    Var<T> gan_f;
    Var<T> gan_r;
    std::optional<Var<T>> ae;
    std::optional<Var<T>> mid_mse;
    std::optional<Var<T>> mid_mmd;

    LossParts values() const;
};

template <typename T>
Var<T> total_loss(const LossTerms<T>& terms, const LossWeights& w);

} // namespace ssrgan
