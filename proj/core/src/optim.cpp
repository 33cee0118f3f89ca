#include "ssrgan/optim.hpp"

#include <cmath>

namespace ssrgan {

template <typename T>
AdamState<T> make_adam_state(std::span<Parameter<T>* const> params, const AdamConfig& config) {
    if (!(config.lr > 0.0)) throw InvalidArgument("optimizer", "lr must be positive");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0)) throw InvalidArgument("optimizer", "beta1 must be in [0,1)");
    if (!(config.beta2 >= 0.0 && config.beta2 < 1.0)) throw InvalidArgument("optimizer", "beta2 must be in [0,1)");
    AdamState<T> s;
    s.config = config;
    for (const auto* p : params) {
        s.m.emplace_back(p->value.shape());
        s.v.emplace_back(p->value.shape());
    }
    return s;
}

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
    if (params.size() != state.m.size()) {
        throw InvalidArgument("optimizer", "adam_step: " + std::to_string(params.size()) +
                                               " parameters but state holds " + std::to_string(state.m.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Parameter<T>& p = *params[k];
        if (p.grad.shape() != p.value.shape() || state.m[k].shape() != p.value.shape()) {
            throw InvalidArgument("optimizer", "adam_step: shape mismatch for " + p.name);
        }
        for (T g : p.grad.data()) {
            if (!std::isfinite(g)) throw NumericalError("optimizer", "non-finite gradient in " + p.name);
        }
    }
    const AdamConfig& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    const T b1 = static_cast<T>(c.beta1);
    const T b2 = static_cast<T>(c.beta2);
    const T step_size = static_cast<T>(c.lr / bc1);
    const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    const T eps = static_cast<T>(c.epsilon);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter<T>& p = *params[k];
        T* w = p.value.raw();
        const T* g = p.grad.raw();
        T* m = state.m[k].raw();
        T* v = state.v[k].raw();
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            m[i] = b1 * m[i] + (T{1} - b1) * g[i];
            v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
            w[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
        }
    }
}

template <typename T>
double global_grad_norm(std::span<Parameter<T>* const> params) {
    double sq = 0.0;
    for (const auto* p : params) {
        for (T g : p->grad.data()) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sq);
}

template <typename T>
double clip_grad_norm(std::span<Parameter<T>* const> params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (std::isfinite(norm) && norm > max_norm && max_norm > 0.0) {
        const T f = static_cast<T>(max_norm / norm);
        for (auto* p : params) {
            for (auto& g : p->grad.data()) g *= f;
        }
    }
    return norm;
}

template <typename T>
void zero_grads(std::span<Parameter<T>* const> params) {
    for (auto* p : params) p->zero_grad();
}

#define SSRGAN_INSTANTIATE_OPTIM(T)                                                                  \
    template AdamState<T> make_adam_state(std::span<Parameter<T>* const>, const AdamConfig&);        \
    template void adam_step(std::span<Parameter<T>* const>, AdamState<T>&);                          \
    template double global_grad_norm(std::span<Parameter<T>* const>);                                \
    template double clip_grad_norm(std::span<Parameter<T>* const>, double);                          \
    template void zero_grads(std::span<Parameter<T>* const>);

SSRGAN_INSTANTIATE_OPTIM(float)
SSRGAN_INSTANTIATE_OPTIM(double)

} // namespace ssrgan
