#include "ssrgan/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace ssrgan {
namespace {

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
    T* d = dst.raw();
    const T* s = src.raw();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (a != b) throw InvalidArgument("tensor-core", std::string(op) + ": shape " + a.str() + " vs " + b.str());
}

template <typename T>
bool any_grad(Tape<T>& tape, std::initializer_list<Var<T>> vars) {
    for (const auto& v : vars) {
        if (tape.requires_grad(v)) return true;
    }
    return false;
}

// Packs one bit per element and feeds 64-bit words to the tape signature.
class BranchBits {
public:
    template <typename T>
    explicit BranchBits(Tape<T>& tape) : note_([&tape](std::uint64_t w) { tape.note_branch(w); }) {}
    ~BranchBits() { note_(word_ ^ (static_cast<std::uint64_t>(count_) << 58)); }
    BranchBits(const BranchBits&) = delete;
    BranchBits& operator=(const BranchBits&) = delete;

    void push(bool bit) {
        word_ = (word_ << 1) | static_cast<std::uint64_t>(bit);
        if (++count_ == 64) {
            note_(word_);
            word_ = 0;
            count_ = 0;
        }
    }

private:
    std::function<void(std::uint64_t)> note_;
    std::uint64_t word_ = 0;
    unsigned count_ = 0;
};

} // namespace

template <typename T>
Var<T> Tape<T>::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::input(Tensor<T> value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    n.accumulating_leaf = true;
    return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::parameter(Parameter<T>& p) {
    Node n;
    n.external = &p.value;
    n.param = &p;
    n.requires_grad = true;
    return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::frozen(const Parameter<T>& p) {
    Node n;
    n.external = &p.value;
    return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, bool requires_grad, Backprop backprop) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backprop = std::move(backprop);
    return push(std::move(n));
}

template <typename T>
const Tensor<T>& Tape<T>::value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
}

template <typename T>
Tensor<T>& Tape<T>::grad_accumulator(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor<T>(value(id).shape());
    return n.grad;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) return Tensor<T>(value(v.id).shape());
    return n.grad;
}

template <typename T>
void Tape<T>::note_branch(std::uint64_t bits) noexcept {
    // FNV-1a over the 8 bytes of the word.
    for (int i = 0; i < 8; ++i) {
        signature_ ^= (bits >> (8 * i)) & 0xffU;
        signature_ *= 1099511628211ULL;
    }
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
    if (loss.tape != this) throw ContractError("tensor-core", "backward: loss belongs to another tape");
    if (value(loss.id).size() != 1) {
        throw ContractError("tensor-core", "backward: loss must be scalar, got shape " + value(loss.id).shape().str());
    }
    for (auto& n : nodes_) {
        if (!n.accumulating_leaf) n.grad = Tensor<T>();
    }
    if (!nodes_[loss.id].requires_grad) return;
    grad_accumulator(loss.id)[0] += T{1};

    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.empty() || !n.backprop) continue;
        n.backprop(*this, i);
    }
    for (auto& n : nodes_) {
        if (n.param != nullptr && !n.grad.empty()) {
            if (n.param->grad.shape() != n.param->value.shape()) n.param->zero_grad();
            accumulate(n.param->grad, n.grad);
        }
    }
}

template <typename T>
std::vector<Parameter<T>*> Tape<T>::reached_parameters() const {
    std::vector<Parameter<T>*> out;
    for (const auto& n : nodes_) {
        if (n.param != nullptr && !n.grad.empty() && std::find(out.begin(), out.end(), n.param) == out.end()) {
            out.push_back(n.param);
        }
    }
    return out;
}

namespace ad {

template <typename T>
Var<T> conv1d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias, const ConvSpec& spec) {
    Tape<T>& tape = *x.tape;
    Tensor<T> out = ssrgan::conv1d(x.value(), weight.value(), bias ? &bias->value() : nullptr, spec);
    const bool rg = any_grad(tape, {x, weight}) || (bias && tape.requires_grad(*bias));
    const std::size_t in_len = x.shape().length;
    return tape.record(std::move(out), rg, [x, weight, bias, spec, in_len](Tape<T>& t, std::size_t self) {
        const Tensor<T>& dy = t.grad_accumulator(self);
        if (t.requires_grad(x)) {
            accumulate(t.grad_accumulator(x.id), ssrgan::conv1d_adjoint(dy, t.value(weight.id), spec, in_len));
        }
        if (t.requires_grad(weight)) {
            conv1d_accumulate_weight_grad(t.value(x.id), dy, spec, t.grad_accumulator(weight.id));
        }
        if (bias && t.requires_grad(*bias)) conv1d_accumulate_bias_grad(dy, t.grad_accumulator(bias->id));
    });
}

template <typename T>
Var<T> conv1d_adjoint(Var<T> y, Var<T> weight, const ConvSpec& spec, std::size_t input_length) {
    Tape<T>& tape = *y.tape;
    Tensor<T> out = ssrgan::conv1d_adjoint(y.value(), weight.value(), spec, input_length);
    return tape.record(std::move(out), any_grad(tape, {y, weight}), [y, weight, spec](Tape<T>& t, std::size_t self) {
        const Tensor<T>& dz = t.grad_accumulator(self);
        if (t.requires_grad(y)) {
            accumulate(t.grad_accumulator(y.id), ssrgan::conv1d<T>(dz, t.value(weight.id), nullptr, spec));
        }
        if (t.requires_grad(weight)) {
            conv1d_accumulate_weight_grad(dz, t.value(y.id), spec, t.grad_accumulator(weight.id));
        }
    });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope) {
    Tape<T>& tape = *x.tape;
    const Tensor<T>& in = x.value();
    Tensor<T> out(in.shape());
    {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : slope * in[i];
        if (tape.tracks_branches()) {
            BranchBits bits(tape);
            for (std::size_t i = 0; i < in.size(); ++i) bits.push(in[i] > T{0});
        }
    }
    return tape.record(std::move(out), tape.requires_grad(x), [x, slope](Tape<T>& t, std::size_t self) {
        const Tensor<T>& dy = t.grad_accumulator(self);
        const Tensor<T>& in = t.value(x.id);
        Tensor<T>& dx = t.grad_accumulator(x.id);
        for (std::size_t i = 0; i < in.size(); ++i) dx[i] += in[i] > T{0} ? dy[i] : slope * dy[i];
    });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    require_same_shape(a.shape(), b.shape(), "add");
    Tape<T>& tape = *a.tape;
    Tensor<T> out = a.value();
    accumulate(out, b.value());
    return tape.record(std::move(out), any_grad(tape, {a, b}), [a, b](Tape<T>& t, std::size_t self) {
        const Tensor<T>& g = t.grad_accumulator(self);
        if (t.requires_grad(a)) accumulate(t.grad_accumulator(a.id), g);
        if (t.requires_grad(b)) accumulate(t.grad_accumulator(b.id), g);
    });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    require_same_shape(a.shape(), b.shape(), "sub");
    Tape<T>& tape = *a.tape;
    Tensor<T> out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return tape.record(std::move(out), any_grad(tape, {a, b}), [a, b](Tape<T>& t, std::size_t self) {
        const Tensor<T>& g = t.grad_accumulator(self);
        if (t.requires_grad(a)) accumulate(t.grad_accumulator(a.id), g);
        if (t.requires_grad(b)) {
            Tensor<T>& db = t.grad_accumulator(b.id);
            for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
        }
    });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
    Tape<T>& tape = *a.tape;
    Tensor<T> out = a.value();
    for (auto& v : out.data()) v *= factor;
    return tape.record(std::move(out), tape.requires_grad(a), [a, factor](Tape<T>& t, std::size_t self) {
        const Tensor<T>& g = t.grad_accumulator(self);
        Tensor<T>& da = t.grad_accumulator(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += factor * g[i];
    });
}

template <typename T>
Var<T> weighted_sum(std::span<const Var<T>> scalars, std::span<const T> weights) {
    if (scalars.empty() || scalars.size() != weights.size()) {
        throw InvalidArgument("tensor-core", "weighted_sum: " + std::to_string(scalars.size()) + " terms vs " +
                                                 std::to_string(weights.size()) + " weights");
    }
    Tape<T>& tape = *scalars.front().tape;
    T total{0};
    bool rg = false;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        total += weights[i] * scalars[i].item();
        rg = rg || tape.requires_grad(scalars[i]);
    }
    std::vector<Var<T>> s(scalars.begin(), scalars.end());
    std::vector<T> w(weights.begin(), weights.end());
    return tape.record(Tensor<T>::scalar(total), rg, [s, w](Tape<T>& t, std::size_t self) {
        const T g = t.grad_accumulator(self)[0];
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (t.requires_grad(s[i])) t.grad_accumulator(s[i].id)[0] += w[i] * g;
        }
    });
}

template <typename T>
Var<T> sum(Var<T> x) {
    Tape<T>& tape = *x.tape;
    T total{0};
    for (T v : x.value().data()) total += v;
    return tape.record(Tensor<T>::scalar(total), tape.requires_grad(x), [x](Tape<T>& t, std::size_t self) {
        const T g = t.grad_accumulator(self)[0];
        for (auto& d : t.grad_accumulator(x.id).data()) d += g;
    });
}

template <typename T>
Var<T> mean(Var<T> x) {
    return scale(sum(x), T{1} / static_cast<T>(x.value().size()));
}

template <typename T>
Var<T> sum_squares(Var<T> x) {
    Tape<T>& tape = *x.tape;
    T total{0};
    for (T v : x.value().data()) total += v * v;
    return tape.record(Tensor<T>::scalar(total), tape.requires_grad(x), [x](Tape<T>& t, std::size_t self) {
        const T g = t.grad_accumulator(self)[0];
        const Tensor<T>& in = t.value(x.id);
        Tensor<T>& dx = t.grad_accumulator(x.id);
        for (std::size_t i = 0; i < in.size(); ++i) dx[i] += T{2} * in[i] * g;
    });
}

template <typename T>
Var<T> mean_abs_diff(Var<T> a, Var<T> b) {
    require_same_shape(a.shape(), b.shape(), "mean_abs_diff");
    Tape<T>& tape = *a.tape;
    const Tensor<T>& av = a.value();
    const Tensor<T>& bv = b.value();
    T total{0};
    {
        for (std::size_t i = 0; i < av.size(); ++i) total += std::abs(av[i] - bv[i]);
        if (tape.tracks_branches()) {
            BranchBits bits(tape);
            for (std::size_t i = 0; i < av.size(); ++i) {
                const T d = av[i] - bv[i];
                bits.push(d > T{0});
                bits.push(d < T{0});
            }
        }
    }
    const T inv_n = T{1} / static_cast<T>(av.size());
    return tape.record(Tensor<T>::scalar(total * inv_n), any_grad(tape, {a, b}),
                       [a, b, inv_n](Tape<T>& t, std::size_t self) {
                           const T g = t.grad_accumulator(self)[0] * inv_n;
                           const Tensor<T>& av = t.value(a.id);
                           const Tensor<T>& bv = t.value(b.id);
                           Tensor<T>* da = t.requires_grad(a) ? &t.grad_accumulator(a.id) : nullptr;
                           Tensor<T>* db = t.requires_grad(b) ? &t.grad_accumulator(b.id) : nullptr;
                           for (std::size_t i = 0; i < av.size(); ++i) {
                               const T d = av[i] - bv[i];
                               const T s = d > T{0} ? g : (d < T{0} ? -g : T{0});
                               if (da) (*da)[i] += s;
                               if (db) (*db)[i] -= s;
                           }
                       });
}

template <typename T>
Var<T> mean_sq_diff(Var<T> a, Var<T> b) {
    require_same_shape(a.shape(), b.shape(), "mean_sq_diff");
    Tape<T>& tape = *a.tape;
    const Tensor<T>& av = a.value();
    const Tensor<T>& bv = b.value();
    T total{0};
    for (std::size_t i = 0; i < av.size(); ++i) {
        const T d = av[i] - bv[i];
        total += d * d;
    }
    const T inv_n = T{1} / static_cast<T>(av.size());
    return tape.record(Tensor<T>::scalar(total * inv_n), any_grad(tape, {a, b}),
                       [a, b, inv_n](Tape<T>& t, std::size_t self) {
                           const T g = T{2} * t.grad_accumulator(self)[0] * inv_n;
                           const Tensor<T>& av = t.value(a.id);
                           const Tensor<T>& bv = t.value(b.id);
                           Tensor<T>* da = t.requires_grad(a) ? &t.grad_accumulator(a.id) : nullptr;
                           Tensor<T>* db = t.requires_grad(b) ? &t.grad_accumulator(b.id) : nullptr;
                           for (std::size_t i = 0; i < av.size(); ++i) {
                               const T s = g * (av[i] - bv[i]);
                               if (da) (*da)[i] += s;
                               if (db) (*db)[i] -= s;
                           }
                       });
}

template <typename T>
Var<T> mean_sq_to(Var<T> a, T target) {
    Tape<T>& tape = *a.tape;
    const Tensor<T>& av = a.value();
    T total{0};
    for (T v : av.data()) total += (v - target) * (v - target);
    const T inv_n = T{1} / static_cast<T>(av.size());
    return tape.record(Tensor<T>::scalar(total * inv_n), tape.requires_grad(a),
                       [a, target, inv_n](Tape<T>& t, std::size_t self) {
                           const T g = T{2} * t.grad_accumulator(self)[0] * inv_n;
                           const Tensor<T>& av = t.value(a.id);
                           Tensor<T>& da = t.grad_accumulator(a.id);
                           for (std::size_t i = 0; i < av.size(); ++i) da[i] += g * (av[i] - target);
                       });
}

template <typename T>
Var<T> item_mean(Var<T> x) {
    Tape<T>& tape = *x.tape;
    const Shape s = x.shape();
    const std::size_t per = s.channels * s.length;
    Tensor<T> out(Shape{s.batch, 1, 1});
    for (std::size_t n = 0; n < s.batch; ++n) {
        T acc{0};
        for (std::size_t i = 0; i < per; ++i) acc += x.value()[n * per + i];
        out[n] = acc / static_cast<T>(per);
    }
    return tape.record(std::move(out), tape.requires_grad(x), [x, per](Tape<T>& t, std::size_t self) {
        const Tensor<T>& g = t.grad_accumulator(self);
        Tensor<T>& dx = t.grad_accumulator(x.id);
        for (std::size_t n = 0; n < g.size(); ++n) {
            const T v = g[n] / static_cast<T>(per);
            for (std::size_t i = 0; i < per; ++i) dx[n * per + i] += v;
        }
    });
}

#define SSRGAN_INSTANTIATE_AD(T)                                                                      \
    template Var<T> conv1d(Var<T>, Var<T>, std::optional<Var<T>>, const ConvSpec&);                   \
    template Var<T> conv1d_adjoint(Var<T>, Var<T>, const ConvSpec&, std::size_t);                     \
    template Var<T> leaky_relu(Var<T>, T);                                                            \
    template Var<T> add(Var<T>, Var<T>);                                                              \
    template Var<T> sub(Var<T>, Var<T>);                                                              \
    template Var<T> scale(Var<T>, T);                                                                 \
    template Var<T> weighted_sum(std::span<const Var<T>>, std::span<const T>);                        \
    template Var<T> sum(Var<T>);                                                                      \
    template Var<T> mean(Var<T>);                                                                     \
    template Var<T> sum_squares(Var<T>);                                                              \
    template Var<T> mean_abs_diff(Var<T>, Var<T>);                                                    \
    template Var<T> mean_sq_diff(Var<T>, Var<T>);                                                     \
    template Var<T> mean_sq_to(Var<T>, T);                                                            \
    template Var<T> item_mean(Var<T>);

SSRGAN_INSTANTIATE_AD(float)
SSRGAN_INSTANTIATE_AD(double)

} // namespace ad

template class Tape<float>;
template class Tape<double>;

} // namespace ssrgan
