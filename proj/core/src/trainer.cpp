#include "ssrgan/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

namespace ssrgan {
namespace {

template <typename T>
Tensor<T> gather(const Tensor<T>& windows, const std::vector<std::size_t>& idx) {
    const Shape& s = windows.shape();
    const std::size_t stride = s.channels * s.length;
    Tensor<T> out(Shape{idx.size(), s.channels, s.length});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(windows.raw() + idx[i] * stride, stride, out.raw() + i * stride);
    }
    return out;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, population - 1);
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = dist(rng);
    return idx;
}

template <typename T>
struct GeneratorStep {
    LossParts parts;
    double total = 0.0;
};

template <typename T>
GeneratorStep<T> generator_step(Model<T>& model, const Tensor<T>& batch_a, const Tensor<T>& batch_b,
                                const TrainConfig& cfg, const LossWeights& weights, AdamState<T>& opt) {
    auto params = model.generator_parameters();
    zero_grads<T>(params);
    Tape<T> tape;
    LossTerms<T> terms = generator_loss_terms(model, tape, tape.constant(batch_a), tape.constant(batch_b), cfg);
    Var<T> total = total_loss(terms, weights);
    tape.backward(total);
    clip_grad_norm<T>(params, cfg.clip_norm);
    adam_step<T>(params, opt);
    return {terms.values(), static_cast<double>(total.item())};
}

template <typename T>
double discriminator_step(Model<T>& model, const Tensor<T>& batch_a, const Tensor<T>& batch_b,
                          const TrainConfig& cfg, AdamState<T>& opt) {
    auto params = model.discriminator_parameters();
    zero_grads<T>(params);
    Tape<T> tape;
    Var<T> loss = discriminator_loss(model, tape, tape.constant(batch_a), tape.constant(batch_b));
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) throw NumericalError("trainer", "non-finite loss part gan_d");
    tape.backward(loss);
    clip_grad_norm<T>(params, cfg.clip_norm);
    adam_step<T>(params, opt);
    return value;
}

} // namespace

template <typename T>
LossTerms<T> generator_loss_terms(Model<T>& model, Tape<T>& tape, Var<T> a, Var<T> b, const TrainConfig& cfg) {
    GeneratorGraph<T> g(model, tape, Binding::trainable);
    DiscriminatorGraph<T> disc_a(model, Side::A, tape, Binding::frozen);
    DiscriminatorGraph<T> disc_b(model, Side::B, tape, Binding::frozen);

    // a -> phi1(a) -> G_f(a) -> phi2(G_f a) -> G_r(G_f a), and mirrored for b.
    Var<T> phi1_a = g.phi_a(a);
    Var<T> fa = g.finish_forward(phi1_a);
    Var<T> phi2_fa = g.phi_b(fa);
    Var<T> rfa = g.finish_reverse(phi2_fa);
    Var<T> phi2_b = g.phi_b(b);
    Var<T> rb = g.finish_reverse(phi2_b);
    Var<T> phi1_rb = g.phi_a(rb);
    Var<T> frb = g.finish_forward(phi1_rb);

    LossTerms<T> terms{ad::mean_abs_diff(rfa, a),
                       ad::mean_abs_diff(frb, b),
                       lsgan_loss<T>(std::nullopt, disc_b.score(fa), GanRole::generator),
                       lsgan_loss<T>(std::nullopt, disc_a.score(rb), GanRole::generator),
                       std::nullopt,
                       std::nullopt,
                       std::nullopt};
    if (cfg.sn2_enabled) {
        terms.ae = ae_loss(g.autoencode(a, Side::A), a, g.autoencode(b, Side::B), b);
    }
    if (cfg.sn3_enabled) {
        MiddleContentTerms<T> mid = middle_content_loss(phi1_a, phi2_fa, phi2_b, phi1_rb, cfg.mmd);
        terms.mid_mse = mid.mse;
        terms.mid_mmd = mid.mmd;
    }
    return terms;
}

template <typename T>
Var<T> discriminator_loss(Model<T>& model, Tape<T>& tape, Var<T> a, Var<T> b) {
    GeneratorGraph<T> g(model, tape, Binding::frozen);
    DiscriminatorGraph<T> disc_a(model, Side::A, tape, Binding::trainable);
    DiscriminatorGraph<T> disc_b(model, Side::B, tape, Binding::trainable);
    Var<T> fake_b = g.forward(a);
    Var<T> fake_a = g.reverse(b);
    return ad::add(lsgan_loss<T>(disc_b.score(b), disc_b.score(fake_b), GanRole::discriminator),
                   lsgan_loss<T>(disc_a.score(a), disc_a.score(fake_a), GanRole::discriminator));
}

void TrainConfig::validate() const {
    if (iterations > 0 && iterations < final_g_only_iters) {
        throw ConfigError("trainer", "iterations (" + std::to_string(iterations) + ") < final_g_only_iters (" +
                                         std::to_string(final_g_only_iters) + ")");
    }
    if (batch_size < 2) throw ConfigError("trainer", "batch_size must be >= 2, got " + std::to_string(batch_size));
    if (g_steps_per_d_step == 0) throw ConfigError("trainer", "g_steps_per_d_step must be >= 1");
    if (!(adam.lr > 0.0)) throw ConfigError("trainer", "lr must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("trainer", "beta1 must be in [0,1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("trainer", "beta2 must be in [0,1)");
    if (!(clip_norm > 0.0)) throw ConfigError("trainer", "clip_norm must be positive");
    weights.validate();
    mmd.validate();
}

LossWeights TrainConfig::effective_weights() const {
    LossWeights w = weights;
    if (!sn2_enabled) w.lambda_ae = 0.0;
    if (!sn3_enabled) {
        w.lambda_mid_mse = 0.0;
        w.lambda_mid_mmd = 0.0;
    }
    return w;
}

TrainConfig ablation_preset(std::string_view name) {
    TrainConfig c;
    if (name == "model1") return c;
    if (name == "model2") {
        c.sn2_enabled = false;
        c.sn3_enabled = false;
        c.sharing_enabled = false;
        return c;
    }
    if (name == "model3") {
        c.sn2_enabled = false;
        return c;
    }
    if (name == "model4") {
        c.sn3_enabled = false;
        return c;
    }
    if (name == "model5") {
        c.sharing_enabled = false;
        return c;
    }
    if (name == "model6") {
        c.weights.forward_emphasis = 2.0;
        return c;
    }
    throw ConfigError("trainer", "unknown preset '" + std::string(name) + "' (expected model1..model6)");
}

std::size_t TrainHistory::generator_updates() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.g_updates;
    return n;
}

std::size_t TrainHistory::discriminator_updates() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.d_updates;
    return n;
}

void TrainHistory::write_csv(std::ostream& os) const {
    os << csv_header << '\n';
    os << std::setprecision(9);
    for (const auto& r : records) {
        os << r.iteration << ',' << r.cycle << ',' << r.gan_g << ',' << r.gan_d << ',' << r.ae << ',' << r.mid_mse
           << ',' << r.mid_mmd << ',' << r.total << '\n';
    }
}

void TrainHistory::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("trainer", "cannot write " + path);
    write_csv(os);
}

double tail_mean(const TrainHistory& h, double IterationRecord::*field, std::size_t tail) {
    if (h.records.empty()) return 0.0;
    const std::size_t n = std::min(tail, h.records.size());
    double s = 0.0;
    for (std::size_t i = h.records.size() - n; i < h.records.size(); ++i) s += h.records[i].*field;
    return s / static_cast<double>(n);
}

template <typename T>
TrainHistory train(Model<T>& model, const Tensor<T>& windows_a, const Tensor<T>& windows_b, const TrainConfig& cfg,
                   const TrainHook& hook) {
    cfg.validate();
    if (model.config().sharing_enabled != cfg.sharing_enabled) {
        throw ConfigError("trainer", "sharing_enabled differs between model and train config");
    }
    if (windows_a.shape().batch == 0) throw ConfigError("trainer", "dataset A is empty");
    if (windows_b.shape().batch == 0) throw ConfigError("trainer", "dataset B is empty");
    const Shape expected{0, model.config().data_channels, model.config().window_length};
    for (const Tensor<T>* w : {&windows_a, &windows_b}) {
        if (w->shape().channels != expected.channels || w->shape().length != expected.length) {
            throw InvalidArgument("trainer", "window shape " + w->shape().str() + " does not match model windows (n," +
                                                 std::to_string(expected.channels) + "," +
                                                 std::to_string(expected.length) + ")");
        }
    }

    TrainHistory history;
    if (cfg.iterations == 0) return history;

    const LossWeights weights = cfg.effective_weights();
    auto gen_params = model.generator_parameters();
    auto disc_params = model.discriminator_parameters();
    AdamState<T> gen_opt = make_adam_state<T>(gen_params, cfg.adam);
    AdamState<T> disc_opt = make_adam_state<T>(disc_params, cfg.adam);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    history.records.reserve(cfg.iterations);
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        IterationRecord rec;
        rec.iteration = it;
        const Tensor<T> batch_a = gather(windows_a, sample_indices(windows_a.shape().batch, cfg.batch_size, rng));
        const Tensor<T> batch_b = gather(windows_b, sample_indices(windows_b.shape().batch, cfg.batch_size, rng));
        try {
            GeneratorStep<T> step;
            for (std::size_t k = 0; k < cfg.g_steps_per_d_step; ++k) {
                step = generator_step(model, batch_a, batch_b, cfg, weights, gen_opt);
                ++rec.g_updates;
            }
            rec.cycle = step.parts.cycle();
            rec.gan_g = step.parts.gan();
            rec.ae = step.parts.ae;
            rec.mid_mse = step.parts.mid_mse;
            rec.mid_mmd = step.parts.mid_mmd;
            rec.total = step.total;
            const bool g_only = it > cfg.iterations - cfg.final_g_only_iters;
            if (!g_only) {
                rec.gan_d = discriminator_step(model, batch_a, batch_b, cfg, disc_opt);
                ++rec.d_updates;
            }
        } catch (const NumericalError& e) {
            throw NumericalError("trainer", "iteration " + std::to_string(it) + ": " + e.what());
        }
        history.records.push_back(rec);
        if (hook) hook(rec);
    }
    return history;
}

template LossTerms<float> generator_loss_terms(Model<float>&, Tape<float>&, Var<float>, Var<float>,
                                               const TrainConfig&);
template LossTerms<double> generator_loss_terms(Model<double>&, Tape<double>&, Var<double>, Var<double>,
                                                const TrainConfig&);
template Var<float> discriminator_loss(Model<float>&, Tape<float>&, Var<float>, Var<float>);
template Var<double> discriminator_loss(Model<double>&, Tape<double>&, Var<double>, Var<double>);

template TrainHistory train(Model<float>&, const Tensor<float>&, const Tensor<float>&, const TrainConfig&,
                            const TrainHook&);
template TrainHistory train(Model<double>&, const Tensor<double>&, const Tensor<double>&, const TrainConfig&,
                            const TrainHook&);

} // namespace ssrgan
