#include "ssrgan/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "ssrgan/gradcheck.hpp"
#include "ssrgan/losses.hpp"
#include "ssrgan/trainer.hpp"

namespace ssrgan {
namespace {

using D = double;

Tensor<D> random_tensor(Shape shape, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> dist(0.0, sd);
    Tensor<D> t(shape);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

// Fixed pseudo-random target of the given shape; same every call.
Tensor<D> target_for(const Shape& s) {
    std::mt19937_64 rng(0x5eed0000ULL + s.batch * 1000003ULL + s.channels * 1009ULL + s.length);
    return random_tensor(s, rng, 0.5);
}

// Projects a tensor-valued output to a scalar with a non-trivial gradient.
Var<D> project(Tape<D>& tape, Var<D> out) {
    return ad::sum_squares(ad::sub(out, tape.constant(target_for(out.shape()))));
}

class Recorder {
public:
    Recorder(SuiteReport& report, const CheckListener& listener) : report_(report), listener_(listener) {}

    void add(CheckOutcome c) {
        report_.checks.push_back(c);
        if (listener_) listener_(report_.checks.back());
    }

    void grad(const std::string& name, const GradCheckResult& r, double tol) {
        CheckOutcome c;
        c.name = name;
        c.value = r.max_rel_error;
        c.tolerance = tol;
        c.passed = r.checked > 0 && r.max_rel_error <= tol && std::isfinite(r.max_rel_error);
        std::ostringstream os;
        os << r.checked << " coords";
        if (r.skipped_nonsmooth > 0) {
            os << ", " << r.skipped_nonsmooth << " skipped at kinks (err there " << r.max_rel_error_nonsmooth << ")";
        }
        c.detail = os.str();
        add(std::move(c));
    }

private:
    SuiteReport& report_;
    const CheckListener& listener_;
};

void conv_checks(Recorder& rec, std::uint64_t seed, const GradientSuiteOptions& o) {
    const std::vector<ConvSpec> specs{ConvSpec{2, 3, 3, 1, 1}, ConvSpec{2, 3, 5, 2, 2}, ConvSpec{1, 2, 4, 3, 0},
                                      ConvSpec{3, 2, 7, 1, 3}, ConvSpec{2, 2, 2, 2, 1}};
    std::mt19937_64 rng(seed);
    const std::string tag = "/seed" + std::to_string(seed);
    for (const ConvSpec& spec : specs) {
        const std::size_t len = 11;
        const Tensor<D> x = random_tensor({2, spec.in_channels, len}, rng);
        const Tensor<D> w = random_tensor(spec.kernel_shape(), rng, 0.5);
        const Tensor<D> b = random_tensor(spec.bias_shape(), rng, 0.5);
        const std::size_t out_len = spec.output_length(len);
        const Tensor<D> y = random_tensor({2, spec.out_channels, out_len}, rng);
        const std::string s = "[" + spec.str() + "]";

        rec.grad("op/conv1d.input" + s + tag,
                 finite_diff_check<D>(
                     [&](Tape<D>& t, Var<D> v) {
                         return project(t, ad::conv1d(v, t.constant(w), std::optional<Var<D>>(t.constant(b)), spec));
                     },
                     x, o.eps),
                 o.tolerance);
        rec.grad("op/conv1d.weight" + s + tag,
                 finite_diff_check<D>(
                     [&](Tape<D>& t, Var<D> v) {
                         return project(t, ad::conv1d(t.constant(x), v, std::optional<Var<D>>(t.constant(b)), spec));
                     },
                     w, o.eps),
                 o.tolerance);
        rec.grad("op/conv1d.bias" + s + tag,
                 finite_diff_check<D>(
                     [&](Tape<D>& t, Var<D> v) {
                         return project(t, ad::conv1d(t.constant(x), t.constant(w), std::optional<Var<D>>(v), spec));
                     },
                     b, o.eps),
                 o.tolerance);
        rec.grad("op/conv1d_adjoint.input" + s + tag,
                 finite_diff_check<D>(
                     [&](Tape<D>& t, Var<D> v) { return project(t, ad::conv1d_adjoint(v, t.constant(w), spec, len)); },
                     y, o.eps),
                 o.tolerance);
        rec.grad("op/conv1d_adjoint.weight" + s + tag,
                 finite_diff_check<D>(
                     [&](Tape<D>& t, Var<D> v) { return project(t, ad::conv1d_adjoint(t.constant(y), v, spec, len)); },
                     w, o.eps),
                 o.tolerance);
    }
}

void elementwise_checks(Recorder& rec, std::uint64_t seed, const GradientSuiteOptions& o) {
    std::mt19937_64 rng(seed + 100);
    const std::string tag = "/seed" + std::to_string(seed);
    const Tensor<D> x = random_tensor({3, 2, 7}, rng);
    const Tensor<D> other = random_tensor({3, 2, 7}, rng);
    auto c = [&](Tape<D>& t) { return t.constant(other); };

    rec.grad("op/leaky_relu" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return project(t, ad::leaky_relu(v, 0.2)); }, x, o.eps),
             o.tolerance);
    rec.grad("op/add" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return project(t, ad::add(v, c(t))); }, x, o.eps),
             o.tolerance);
    rec.grad("op/sub" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return project(t, ad::sub(c(t), v)); }, x, o.eps),
             o.tolerance);
    rec.grad("op/scale" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return project(t, ad::scale(v, -1.7)); }, x, o.eps),
             o.tolerance);
    rec.grad("op/weighted_sum" + tag,
             finite_diff_check<D>(
                 [&](Tape<D>&, Var<D> v) {
                     const std::vector<Var<D>> parts{ad::sum(v), ad::sum_squares(v), ad::mean(v)};
                     const std::vector<D> w{0.5, 2.0, -1.0};
                     return ad::weighted_sum<D>(parts, w);
                 },
                 x, o.eps),
             o.tolerance);
    rec.grad("op/sum" + tag,
             finite_diff_check<D>([&](Tape<D>&, Var<D> v) { return ad::sum_squares(ad::scale(v, 0.3)); }, x, o.eps),
             o.tolerance);
    rec.grad("op/mean" + tag,
             finite_diff_check<D>(
                 [&](Tape<D>& t, Var<D> v) { return project(t, ad::mean(ad::leaky_relu(v, 0.5))); }, x, o.eps),
             o.tolerance);
    rec.grad("op/mean_abs_diff" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return ad::mean_abs_diff(v, c(t)); }, x, o.eps),
             o.tolerance);
    rec.grad("op/mean_sq_diff" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return ad::mean_sq_diff(c(t), v); }, x, o.eps),
             o.tolerance);
    rec.grad("op/mean_sq_to" + tag,
             finite_diff_check<D>([&](Tape<D>&, Var<D> v) { return ad::mean_sq_to(v, 1.0); }, x, o.eps), o.tolerance);
    rec.grad("op/item_mean" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return project(t, ad::item_mean(v)); }, x, o.eps),
             o.tolerance);

    // MMD: both bandwidth modes, both arguments.
    const Tensor<D> xs = random_tensor({4, 2, 5}, rng);
    const Tensor<D> ys = random_tensor({3, 2, 5}, rng, 1.5);
    MmdConfig median;
    MmdConfig fixed;
    fixed.fixed_bandwidth = 2.0;
    rec.grad("op/mk_mmd.x.median" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return ad::scale(mk_mmd(v, t.constant(ys), median), 10.0); },
                                  xs, o.eps),
             o.tolerance);
    rec.grad("op/mk_mmd.y.median" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return ad::scale(mk_mmd(t.constant(xs), v, median), 10.0); },
                                  ys, o.eps),
             o.tolerance);
    rec.grad("op/mk_mmd.x.fixed" + tag,
             finite_diff_check<D>([&](Tape<D>& t, Var<D> v) { return ad::scale(mk_mmd(v, t.constant(ys), fixed), 10.0); },
                                  xs, o.eps),
             o.tolerance);
}

struct LossCase {
    std::string name;
    bool sn2 = false;
    bool sn3 = false;
    // Which terms enter the objective.
    bool cycle = true;
    bool gan = true;
    bool ae = false;
    bool mid = false;
};

Var<D> objective(Model<D>& model, Tape<D>& tape, const Tensor<D>& a, const Tensor<D>& b, const LossCase& lc) {
    TrainConfig cfg;
    cfg.sn2_enabled = lc.sn2;
    cfg.sn3_enabled = lc.sn3;
    LossTerms<D> terms = generator_loss_terms(model, tape, tape.constant(a), tape.constant(b), cfg);
    LossWeights w;
    w.forward_emphasis = 1.5;
    if (!lc.cycle) w.lambda_cyc = 0.0;
    if (!lc.gan) w.lambda_gan = 0.0;
    if (!lc.ae) w.lambda_ae = 0.0;
    if (!lc.mid) {
        w.lambda_mid_mse = 0.0;
        w.lambda_mid_mmd = 0.0;
    }
    return total_loss(terms, w);
}

void model_loss_checks(Recorder& rec, const ModelConfig& mc, std::uint64_t seed, std::size_t batch,
                       std::size_t coords, const std::string& prefix, const GradientSuiteOptions& o) {
    Model<D> model(mc, seed);
    std::mt19937_64 rng(seed + 7);
    const Tensor<D> a = random_tensor({batch, mc.data_channels, mc.window_length}, rng);
    const Tensor<D> b = random_tensor({batch, mc.data_channels, mc.window_length}, rng, 0.7);
    const std::string tag = "/seed" + std::to_string(seed);

    const std::vector<LossCase> cases{
        {"cycle_gan", false, false, true, true, false, false},
        {"ae", true, false, false, false, true, false},
        {"middle_content", false, true, false, false, false, true},
        {"total", true, true, true, true, true, true},
    };
    auto gen = model.generator_parameters();
    for (const LossCase& lc : cases) {
        rec.grad(prefix + "loss/" + lc.name + tag,
                 finite_diff_check_params<D>([&](Tape<D>& t) { return objective(model, t, a, b, lc); }, gen, o.eps,
                                             coords, seed),
                 o.tolerance);
    }
    auto disc = model.discriminator_parameters();
    rec.grad(prefix + "loss/discriminator" + tag,
             finite_diff_check_params<D>(
                 [&](Tape<D>& t) { return discriminator_loss(model, t, t.constant(a), t.constant(b)); }, disc, o.eps,
                 coords, seed),
             o.tolerance);
}

void block_checks(Recorder& rec, std::uint64_t seed, const GradientSuiteOptions& o) {
    const ModelConfig mc;
    Model<D> model(mc, seed);
    std::mt19937_64 rng(seed + 11);
    const std::string tag = "/seed" + std::to_string(seed);
    for (Block<D>& blk : model.forward_blocks()) {
        const ConvSpec& spec = blk.spec;
        const std::size_t in_len = blk.conv_input_length;
        const std::size_t out_len = spec.output_length(in_len);
        for (ConvMode mode : {ConvMode::conv, ConvMode::adjoint}) {
            const bool conv = mode == ConvMode::conv;
            const Tensor<D> x = conv ? random_tensor({2, spec.in_channels, in_len}, rng)
                                     : random_tensor({2, spec.out_channels, out_len}, rng);
            auto apply = [&](Tape<D>& t, Var<D> in) {
                Var<D> w = t.parameter(blk.weight);
                if (conv) return project(t, ad::conv1d(in, w, std::optional<Var<D>>(t.parameter(blk.bias)), spec));
                return project(t, ad::conv1d_adjoint(in, w, spec, in_len));
            };
            const std::string name = "block/" + block_name(blk.id) + (conv ? ".conv" : ".adjoint");
            rec.grad(name + ".input" + tag, finite_diff_check<D>(apply, x, o.eps, o.default_model_coords, seed),
                     o.tolerance);
            std::vector<Parameter<D>*> params{&blk.weight};
            if (conv) params.push_back(&blk.bias);
            rec.grad(name + ".params" + tag,
                     finite_diff_check_params<D>([&](Tape<D>& t) { return apply(t, t.constant(x)); }, params, o.eps,
                                                 o.default_model_coords, seed),
                     o.tolerance);
        }
    }
}

double relative_gap(double a, double b) {
    const double m = std::max(std::abs(a), std::abs(b));
    return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

CheckOutcome adjoint_identity(const std::string& name, const ConvSpec& spec, std::size_t batch, std::size_t len,
                              const Tensor<D>& w, std::mt19937_64& rng, double tol) {
    const Tensor<D> x = random_tensor({batch, spec.in_channels, len}, rng);
    const Tensor<D> y = random_tensor({batch, spec.out_channels, spec.output_length(len)}, rng);
    const double lhs = dot(conv1d<D>(x, w, nullptr, spec), y);
    const double rhs = dot(x, conv1d_adjoint<D>(y, w, spec, len));
    CheckOutcome c;
    c.name = name;
    c.value = relative_gap(lhs, rhs);
    c.tolerance = tol;
    c.passed = c.value <= tol;
    std::ostringstream os;
    os << spec.str() << " L=" << len << " <Kx,y>=" << lhs << " <x,K'y>=" << rhs;
    c.detail = os.str();
    return c;
}

template <typename Container>
std::set<const void*> addresses(const Container& ps) {
    std::set<const void*> s;
    for (const auto* p : ps) s.insert(p);
    return s;
}

std::set<const void*> block_buffers(const std::array<Block<D>, 5>& blocks) {
    std::set<const void*> s;
    for (const auto& b : blocks) {
        s.insert(&b.weight);
        s.insert(&b.bias);
    }
    return s;
}

std::set<const void*> block_weights(const std::array<Block<D>, 5>& blocks) {
    std::set<const void*> s;
    for (const auto& b : blocks) s.insert(&b.weight);
    return s;
}

// Weight buffers that receive gradient from sum(direction(x)).
std::set<const void*> reached_weights(Model<D>& model, bool forward, std::mt19937_64& rng) {
    const ModelConfig& mc = model.config();
    const Tensor<D> x = random_tensor({2, mc.data_channels, mc.window_length}, rng);
    Tape<D> tape;
    GeneratorGraph<D> g(model, tape, Binding::trainable);
    Var<D> in = tape.constant(x);
    tape.backward(ad::sum_squares(forward ? g.forward(in) : g.reverse(in)));
    // Biases of a block used only as an adjoint are off the path, so compare weights.
    auto candidates = block_weights(model.forward_blocks());
    candidates.merge(block_weights(model.reverse_blocks()));
    std::set<const void*> weights;
    for (const void* p : addresses(tape.reached_parameters())) {
        if (candidates.count(p)) weights.insert(p);
    }
    return weights;
}

std::size_t symmetric_difference_size(const std::set<const void*>& a, const std::set<const void*>& b) {
    std::vector<const void*> out;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out.size();
}

CheckOutcome count_check(const std::string& name, double value, double expected, const std::string& detail) {
    CheckOutcome c;
    c.name = name;
    c.value = value;
    c.tolerance = 0.0;
    c.passed = value == expected;
    c.detail = detail;
    return c;
}

} // namespace

bool SuiteReport::passed() const { return failures() == 0 && !checks.empty(); }

std::size_t SuiteReport::failures() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.passed; }));
}

double SuiteReport::worst(const std::string& name_prefix) const {
    double w = 0.0;
    for (const auto& c : checks) {
        if (c.name.rfind(name_prefix, 0) == 0) w = std::max(w, c.value);
    }
    return w;
}

ModelConfig tiny_model_config() {
    ModelConfig c;
    c.window_length = 16;
    c.blocks = {ConvSpec{1, 4, 5, 2, 2}, ConvSpec::same(4, 6, 3), ConvSpec::same(6, 6, 3), ConvSpec::same(6, 4, 3),
                ConvSpec{1, 4, 5, 2, 2}};
    c.discriminator = {ConvSpec{1, 4, 5, 2, 2}, ConvSpec{4, 4, 3, 2, 1}, ConvSpec::same(4, 1, 3)};
    c.init_std = 0.4;
    return c;
}

SuiteReport gradient_suite(const GradientSuiteOptions& opts, const CheckListener& listener) {
    SuiteReport report;
    Recorder rec(report, listener);
    for (std::uint64_t seed : opts.seeds) {
        conv_checks(rec, seed, opts);
        elementwise_checks(rec, seed, opts);
        model_loss_checks(rec, tiny_model_config(), seed, 3, 0, "tiny/", opts);
        ModelConfig unshared = tiny_model_config();
        unshared.sharing_enabled = false;
        model_loss_checks(rec, unshared, seed, 3, 0, "tiny_unshared/", opts);
    }
    if (opts.include_default_model && !opts.seeds.empty()) {
        const std::uint64_t seed = opts.seeds.front();
        block_checks(rec, seed, opts);
        ModelConfig mc;
        mc.init_std = 0.1;
        model_loss_checks(rec, mc, seed, 2, opts.default_model_coords, "default/", opts);
    }
    return report;
}

SuiteReport reversibility_suite(std::uint64_t seed, double tolerance, const CheckListener& listener) {
    SuiteReport report;
    auto add = [&](CheckOutcome c) {
        report.checks.push_back(std::move(c));
        if (listener) listener(report.checks.back());
    };
    std::mt19937_64 rng(seed);

    // Random geometries, including even kernels, wide padding and large strides.
    std::uniform_int_distribution<std::size_t> ch(1, 4), kk(1, 9), st(1, 3), bt(1, 3), ln(5, 40);
    for (int i = 0; i < 24; ++i) {
        ConvSpec spec;
        spec.in_channels = ch(rng);
        spec.out_channels = ch(rng);
        spec.kernel_size = kk(rng);
        spec.stride = st(rng);
        spec.padding = std::uniform_int_distribution<std::size_t>(0, spec.kernel_size)(rng);
        std::size_t len = std::max(ln(rng), spec.kernel_size);
        const Tensor<D> w = random_tensor(spec.kernel_shape(), rng);
        add(adjoint_identity("adjoint/random" + std::to_string(i), spec, bt(rng), len, w, rng, tolerance));
    }

    Model<D> model(ModelConfig{}, seed);
    for (const Block<D>& blk : model.forward_blocks()) {
        add(adjoint_identity("adjoint/" + block_name(blk.id), blk.spec, 2, blk.conv_input_length, blk.weight.value, rng,
                             tolerance));
    }

    // Sharing on: both directions bind the very same buffers.
    const auto f_buf = block_buffers(model.forward_blocks());
    const auto r_buf = block_buffers(model.reverse_blocks());
    add(count_check("sharing/same_buffers", static_cast<double>(symmetric_difference_size(f_buf, r_buf)), 0.0,
                    std::to_string(f_buf.size()) + " buffers per direction"));
    const auto f_reach = reached_weights(model, true, rng);
    const auto r_reach = reached_weights(model, false, rng);
    add(count_check("sharing/reached_weights_equal", static_cast<double>(symmetric_difference_size(f_reach, r_reach)),
                    0.0, std::to_string(f_reach.size()) + " weights reached by G_f"));
    add(count_check("sharing/all_weights_reached",
                    static_cast<double>(symmetric_difference_size(f_reach, block_weights(model.forward_blocks()))), 0.0,
                    "G_f vs block weights"));
    add(count_check("sharing/parameter_count", static_cast<double>(model.generator_parameter_count()),
                    static_cast<double>(model.block_parameter_count()),
                    std::to_string(model.generator_parameter_count()) + " generator parameters"));

    // Sharing off: disjoint buffers, twice the count.
    ModelConfig off;
    off.sharing_enabled = false;
    Model<D> unshared(off, seed);
    const auto uf = block_buffers(unshared.forward_blocks());
    const auto ur = block_buffers(unshared.reverse_blocks());
    std::vector<const void*> common;
    std::set_intersection(uf.begin(), uf.end(), ur.begin(), ur.end(), std::back_inserter(common));
    add(count_check("unshared/disjoint_buffers", static_cast<double>(common.size()), 0.0,
                    std::to_string(uf.size()) + " buffers per direction"));
    const auto uf_reach = reached_weights(unshared, true, rng);
    const auto ur_reach = reached_weights(unshared, false, rng);
    common.clear();
    std::set_intersection(uf_reach.begin(), uf_reach.end(), ur_reach.begin(), ur_reach.end(),
                          std::back_inserter(common));
    add(count_check("unshared/disjoint_reached_weights", static_cast<double>(common.size()), 0.0,
                    std::to_string(uf_reach.size()) + " + " + std::to_string(ur_reach.size()) + " weights reached"));
    add(count_check("unshared/parameter_count", static_cast<double>(unshared.generator_parameter_count()),
                    2.0 * static_cast<double>(unshared.block_parameter_count()),
                    std::to_string(unshared.generator_parameter_count()) + " generator parameters"));
    return report;
}

} // namespace ssrgan
