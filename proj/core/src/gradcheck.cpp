#include "ssrgan/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ssrgan {
namespace {

std::vector<std::size_t> pick_coords(std::size_t n, std::size_t max_coords, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (max_coords == 0 || max_coords >= n) return idx;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_coords);
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct Probe {
    double value;
    std::uint64_t signature;
};

void score(GradCheckResult& r, double g_ad, const Probe& plus, const Probe& minus, std::uint64_t base_sig,
           double eps) {
    const double g_fd = (plus.value - minus.value) / (2.0 * eps);
    const double err = std::abs(g_ad - g_fd) / std::max(1.0, std::abs(g_fd));
    if (plus.signature != base_sig || minus.signature != base_sig) {
        ++r.skipped_nonsmooth;
        r.max_rel_error_nonsmooth = std::max(r.max_rel_error_nonsmooth, err);
        return;
    }
    r.max_rel_error = std::max(r.max_rel_error, err);
    ++r.checked;
}

} // namespace

template <typename T>
GradCheckResult finite_diff_check(const ScalarFn<T>& f, const Tensor<T>& x, double eps, std::size_t max_coords,
                                  std::uint64_t seed) {
    Tape<T> tape;
    tape.track_branches(true);
    Var<T> xv = tape.input(x);
    Var<T> loss = f(tape, xv);
    tape.backward(loss);
    const Tensor<T> g = tape.grad(xv);
    const std::uint64_t base_sig = tape.branch_signature();

    auto eval = [&f](const Tensor<T>& at) {
        Tape<T> t;
        t.track_branches(true);
        Var<T> out = f(t, t.constant(at));
        return Probe{static_cast<double>(out.item()), t.branch_signature()};
    };

    std::mt19937_64 rng(seed);
    GradCheckResult r;
    Tensor<T> probe = x;
    for (std::size_t i : pick_coords(x.size(), max_coords, rng)) {
        const T orig = probe[i];
        probe[i] = orig + static_cast<T>(eps);
        const Probe plus = eval(probe);
        probe[i] = orig - static_cast<T>(eps);
        const Probe minus = eval(probe);
        probe[i] = orig;
        score(r, static_cast<double>(g[i]), plus, minus, base_sig, eps);
    }
    return r;
}

template <typename T>
GradCheckResult finite_diff_check_params(const LossFn<T>& f, std::span<Parameter<T>* const> params, double eps,
                                         std::size_t max_coords_per_param, std::uint64_t seed) {
    std::vector<Tensor<T>> saved_grads;
    for (auto* p : params) {
        saved_grads.push_back(p->grad);
        p->zero_grad();
    }
    std::uint64_t base_sig = 0;
    {
        Tape<T> tape;
    tape.track_branches(true);
        Var<T> loss = f(tape);
        tape.backward(loss);
        base_sig = tape.branch_signature();
    }
    std::vector<Tensor<T>> grads;
    for (auto* p : params) grads.push_back(p->grad);

    auto eval = [&f]() {
        Tape<T> t;
        t.track_branches(true);
        Var<T> out = f(t);
        return Probe{static_cast<double>(out.item()), t.branch_signature()};
    };

    std::mt19937_64 rng(seed);
    GradCheckResult r;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor<T>& w = params[k]->value;
        for (std::size_t i : pick_coords(w.size(), max_coords_per_param, rng)) {
            const T orig = w[i];
            w[i] = orig + static_cast<T>(eps);
            const Probe plus = eval();
            w[i] = orig - static_cast<T>(eps);
            const Probe minus = eval();
            w[i] = orig;
            score(r, static_cast<double>(grads[k][i]), plus, minus, base_sig, eps);
        }
    }
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = std::move(saved_grads[k]);
    return r;
}

template GradCheckResult finite_diff_check(const ScalarFn<double>&, const Tensor<double>&, double, std::size_t,
                                           std::uint64_t);
template GradCheckResult finite_diff_check(const ScalarFn<float>&, const Tensor<float>&, double, std::size_t,
                                           std::uint64_t);
template GradCheckResult finite_diff_check_params(const LossFn<double>&, std::span<Parameter<double>* const>,
                                                  double, std::size_t, std::uint64_t);
template GradCheckResult finite_diff_check_params(const LossFn<float>&, std::span<Parameter<float>* const>, double,
                                                  std::size_t, std::uint64_t);

} // namespace ssrgan
