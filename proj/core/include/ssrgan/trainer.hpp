#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ssrgan/losses.hpp"
#include "ssrgan/model.hpp"
#include "ssrgan/optim.hpp"

namespace ssrgan {

struct TrainConfig {
    /// One iteration = g_steps_per_d_step generator updates, then one discriminator update.
    std::size_t iterations = 2000;
    std::size_t batch_size = 16;
    std::size_t g_steps_per_d_step = 2;
    /// Discriminator updates are skipped in this many trailing iterations.
    std::size_t final_g_only_iters = 5;
    std::uint64_t seed = 0;
    AdamConfig adam{};
    bool sn2_enabled = true;
    bool sn3_enabled = true;
    bool sharing_enabled = true;
    LossWeights weights{};
    MmdConfig mmd{};
    /// Global-norm gradient clipping threshold, per optimizer.
    double clip_norm = 10.0;

    void validate() const;
    /// Weights with disabled subnets forced to exactly 0.
    LossWeights effective_weights() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Presets for the six compared variants: model1 (full), model2 (cycle +
/// adversarial only, unshared), model3 (no autoencoders), model4 (no middle
/// content), model5 (unshared), model6 (model1 with denoising direction x2).
TrainConfig ablation_preset(std::string_view name);

struct IterationRecord {
    std::size_t iteration = 0; // 1-based
    double cycle = 0.0;
    double gan_g = 0.0;
    double gan_d = 0.0;
    double ae = 0.0;
    double mid_mse = 0.0;
    double mid_mmd = 0.0;
    double total = 0.0;
    std::size_t g_updates = 0;
    std::size_t d_updates = 0;
};

struct TrainHistory {
    std::vector<IterationRecord> records;

    std::size_t generator_updates() const;
    std::size_t discriminator_updates() const;

    static constexpr std::string_view csv_header = "iter,cycle,gan_g,gan_d,ae,mid_mse,mid_mmd,total";
    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;
};

using TrainHook = std::function<void(const IterationRecord&)>;

/// Generator-side terms of one step on batches a (from A) and b (from B):
/// cycle and adversarial terms always, autoencoder and middle-content terms when
/// the corresponding subnet is enabled in cfg. Discriminators are bound frozen.
template <typename T>
LossTerms<T> generator_loss_terms(Model<T>& model, Tape<T>& tape, Var<T> a, Var<T> b, const TrainConfig& cfg);

/// LSGAN discriminator loss of D_A and D_B with the generator bound frozen.
template <typename T>
Var<T> discriminator_loss(Model<T>& model, Tape<T>& tape, Var<T> a, Var<T> b);

/// Alternating least-squares adversarial training on unpaired window sets
/// (n,1,W). Mutates the model in place. Throws NumericalError with the
/// iteration index on any non-finite loss or gradient.
template <typename T>
TrainHistory train(Model<T>& model, const Tensor<T>& windows_a, const Tensor<T>& windows_b, const TrainConfig& cfg,
                   const TrainHook& hook = {});

/// Mean of a column over the last `tail` records.
double tail_mean(const TrainHistory& h, double IterationRecord::*field, std::size_t tail);

} // namespace ssrgan
