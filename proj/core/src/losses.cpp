#include "ssrgan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

namespace ssrgan {
namespace {

void require_same(const Shape& a, const Shape& b, const char* op) {
    if (a != b) throw InvalidArgument("losses", std::string(op) + ": shape " + a.str() + " vs " + b.str());
}

void check_finite(double v, const char* part) {
    if (!std::isfinite(v)) throw NumericalError("losses", std::string("non-finite loss part ") + part);
}

// Sum of the values after sorting, so the result does not depend on the
// order the pairs were visited in (gives exact X<->Y symmetry).
double ordered_sum(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

constexpr double kDegenerateBandwidth = 1e-12;

} // namespace

void LossWeights::validate() const {
    const std::pair<const char*, double> fields[] = {
        {"lambda_cyc", lambda_cyc},         {"lambda_gan", lambda_gan},         {"lambda_ae", lambda_ae},
        {"lambda_mid_mse", lambda_mid_mse}, {"lambda_mid_mmd", lambda_mid_mmd}, {"forward_emphasis", forward_emphasis}};
    for (const auto& [name, v] : fields) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ConfigError("losses", std::string(name) + " must be finite and >= 0, got " + std::to_string(v));
        }
    }
}

void MmdConfig::validate() const {
    if (multipliers.empty()) throw ConfigError("losses", "mmd needs at least one kernel multiplier");
    for (double m : multipliers) {
        if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("losses", "mmd multipliers must be positive");
    }
    if (fixed_bandwidth && !(*fixed_bandwidth > 0.0)) throw ConfigError("losses", "fixed_bandwidth must be positive");
}

template <typename T>
Var<T> cycle_loss(Var<T> a, Var<T> a_rec, Var<T> b, Var<T> b_rec) {
    require_same(a.shape(), a_rec.shape(), "cycle_loss(a)");
    require_same(b.shape(), b_rec.shape(), "cycle_loss(b)");
    return ad::add(ad::mean_abs_diff(a_rec, a), ad::mean_abs_diff(b_rec, b));
}

template <typename T>
Var<T> lsgan_loss(std::optional<Var<T>> scores_real, Var<T> scores_fake, GanRole role) {
    if (role == GanRole::generator) return ad::mean_sq_to(scores_fake, T{1});
    if (!scores_real) throw InvalidArgument("losses", "lsgan_loss: discriminator role needs real scores");
    return ad::add(ad::mean_sq_to(*scores_real, T{1}), ad::mean_sq_to(scores_fake, T{0}));
}

template <typename T>
Var<T> ae_loss(Var<T> ae_a, Var<T> a, Var<T> ae_b, Var<T> b) {
    require_same(ae_a.shape(), a.shape(), "ae_loss(a)");
    require_same(ae_b.shape(), b.shape(), "ae_loss(b)");
    return ad::add(ad::mean_sq_diff(ae_a, a), ad::mean_sq_diff(ae_b, b));
}

template <typename T>
Var<T> mk_mmd(Var<T> x, Var<T> y, const MmdConfig& cfg) {
    cfg.validate();
    const Shape& xs = x.shape();
    const Shape& ys = y.shape();
    if (xs.batch == 0 || ys.batch == 0) throw InvalidArgument("losses", "mk_mmd: empty sample set");
    const std::size_t dim = xs.channels * xs.length;
    if (ys.channels * ys.length != dim) {
        throw InvalidArgument("losses", "mk_mmd: feature size " + xs.str() + " vs " + ys.str());
    }
    Tape<T>& tape = *x.tape;
    const std::size_t n = xs.batch;
    const std::size_t m = ys.batch;
    const std::size_t total = n + m;
    auto row = [&](std::size_t a) -> const T* {
        return a < n ? x.value().raw() + a * dim : y.value().raw() + (a - n) * dim;
    };

    // Pairwise squared distances of the pooled sample.
    std::vector<double> sq(total * total, 0.0);
    for (std::size_t a = 0; a < total; ++a) {
        for (std::size_t b = a + 1; b < total; ++b) {
            const T* za = row(a);
            const T* zb = row(b);
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = static_cast<double>(za[d]) - static_cast<double>(zb[d]);
                s += diff * diff;
            }
            sq[a * total + b] = s;
            sq[b * total + a] = s;
        }
    }

    // Bandwidth base: fixed, or the median pairwise distance (pairs carrying
    // the median are remembered so the gradient can flow through them).
    struct MedianPair {
        std::size_t a, b;
        double weight;
    };
    std::vector<MedianPair> median_pairs;
    double base = 1.0;
    if (cfg.fixed_bandwidth) {
        base = *cfg.fixed_bandwidth;
    } else {
        std::vector<std::pair<double, std::size_t>> pairs;
        pairs.reserve(total * (total - 1) / 2);
        for (std::size_t a = 0; a < total; ++a) {
            for (std::size_t b = a + 1; b < total; ++b) pairs.emplace_back(std::sqrt(sq[a * total + b]), a * total + b);
        }
        std::sort(pairs.begin(), pairs.end());
        const std::size_t p = pairs.size();
        if (p % 2 == 1) {
            median_pairs.push_back({pairs[p / 2].second / total, pairs[p / 2].second % total, 1.0});
            base = pairs[p / 2].first;
        } else {
            median_pairs.push_back({pairs[p / 2 - 1].second / total, pairs[p / 2 - 1].second % total, 0.5});
            median_pairs.push_back({pairs[p / 2].second / total, pairs[p / 2].second % total, 0.5});
            base = 0.5 * (pairs[p / 2 - 1].first + pairs[p / 2].first);
        }
        for (const auto& mp : median_pairs) tape.note_branch(mp.a * total + mp.b);
        if (!(base > kDegenerateBandwidth)) {
            base = 1.0;
            median_pairs.clear();
        }
    }

    const double cxx = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    const double cyy = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    const double cxy = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
    auto coeff = [n, cxx, cyy, cxy](std::size_t a, std::size_t b) {
        const bool ax = a < n;
        const bool bx = b < n;
        if (ax && bx) return cxx;
        if (!ax && !bx) return cyy;
        return -cxy;
    };

    double value = 0.0;
    std::vector<double> gammas;
    std::vector<double> kxx, kyy, kxy;
    for (double mult : cfg.multipliers) {
        const double sigma = mult * base;
        const double gamma = 1.0 / (2.0 * sigma * sigma);
        gammas.push_back(gamma);
        kxx.clear();
        kyy.clear();
        kxy.clear();
        for (std::size_t a = 0; a < total; ++a) {
            for (std::size_t b = 0; b < total; ++b) {
                const double k = std::exp(-gamma * sq[a * total + b]);
                if (a < n && b < n) {
                    kxx.push_back(k);
                } else if (a >= n && b >= n) {
                    kyy.push_back(k);
                } else if (a < n) {
                    kxy.push_back(k);
                }
            }
        }
        const double axx = ordered_sum(kxx) * cxx;
        const double ayy = ordered_sum(kyy) * cyy;
        const double axy = ordered_sum(kxy) * cxy;
        value += axx + ayy - 2.0 * axy;
    }

    const bool rg = tape.requires_grad(x) || tape.requires_grad(y);
    return tape.record(
        Tensor<T>::scalar(static_cast<T>(value)), rg,
        [x, y, n, m, dim, total, sq = std::move(sq), gammas = std::move(gammas), median_pairs, base,
         coeff](Tape<T>& t, std::size_t self) {
            const double g = static_cast<double>(t.grad_accumulator(self)[0]);
            using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            Mat z(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
            for (std::size_t a = 0; a < total; ++a) {
                const T* src = a < n ? t.value(x.id).raw() + a * dim : t.value(y.id).raw() + (a - n) * dim;
                for (std::size_t d = 0; d < dim; ++d) z(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(d)) = src[d];
            }
            // dL/dz_p = sum_b M_pb (z_p - z_b)
            Mat mw = Mat::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
            double dbase = 0.0;
            for (double gamma : gammas) {
                for (std::size_t a = 0; a < total; ++a) {
                    for (std::size_t b = 0; b < total; ++b) {
                        if (a == b) continue;
                        const double s = sq[a * total + b];
                        const double ck = coeff(a, b) * std::exp(-gamma * s);
                        mw(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += -4.0 * gamma * ck;
                        dbase += 2.0 * gamma / base * ck * s;
                    }
                }
            }
            Mat grad = mw.rowwise().sum().asDiagonal() * z - mw * z;
            for (const auto& mp : median_pairs) {
                const double d = std::sqrt(sq[mp.a * total + mp.b]);
                if (d <= 0.0) continue;
                const double f = dbase * mp.weight / d;
                grad.row(static_cast<Eigen::Index>(mp.a)) += f * (z.row(static_cast<Eigen::Index>(mp.a)) - z.row(static_cast<Eigen::Index>(mp.b)));
                grad.row(static_cast<Eigen::Index>(mp.b)) -= f * (z.row(static_cast<Eigen::Index>(mp.a)) - z.row(static_cast<Eigen::Index>(mp.b)));
            }
            grad *= g;
            if (t.requires_grad(x)) {
                Tensor<T>& dx = t.grad_accumulator(x.id);
                for (std::size_t a = 0; a < n; ++a) {
                    for (std::size_t d = 0; d < dim; ++d) dx[a * dim + d] += static_cast<T>(grad(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(d)));
                }
            }
            if (t.requires_grad(y)) {
                Tensor<T>& dy = t.grad_accumulator(y.id);
                for (std::size_t a = 0; a < m; ++a) {
                    for (std::size_t d = 0; d < dim; ++d) dy[a * dim + d] += static_cast<T>(grad(static_cast<Eigen::Index>(n + a), static_cast<Eigen::Index>(d)));
                }
            }
        });
}

template <typename T>
T mk_mmd_value(const Tensor<T>& x, const Tensor<T>& y, const MmdConfig& cfg) {
    Tape<T> tape;
    return mk_mmd(tape.constant(x), tape.constant(y), cfg).item();
}

template <typename T>
MiddleContentTerms<T> middle_content_side(Var<T> phi_own, Var<T> phi_translated, Var<T> phi_other,
                                          const MmdConfig& cfg) {
    require_same(phi_own.shape(), phi_translated.shape(), "middle_content_loss");
    if (phi_own.shape().channels != phi_other.shape().channels || phi_own.shape().length != phi_other.shape().length) {
        throw InvalidArgument("losses", "middle_content_loss: middle-space shape " + phi_own.shape().str() + " vs " +
                                            phi_other.shape().str());
    }
    return {ad::mean_sq_diff(phi_own, phi_translated), mk_mmd(phi_own, phi_other, cfg)};
}

template <typename T>
MiddleContentTerms<T> middle_content_loss(Var<T> phi1_a, Var<T> phi2_fa, Var<T> phi2_b, Var<T> phi1_rb,
                                          const MmdConfig& cfg) {
    require_same(phi1_a.shape(), phi2_fa.shape(), "middle_content_loss(a)");
    require_same(phi2_b.shape(), phi1_rb.shape(), "middle_content_loss(b)");
    MiddleContentTerms<T> side_a = middle_content_side(phi1_a, phi2_fa, phi2_b, cfg);
    Var<T> mse = ad::add(side_a.mse, ad::mean_sq_diff(phi2_b, phi1_rb));
    // The mirrored MMD term equals the first one exactly (mk_mmd is symmetric).
    Var<T> mmd = ad::scale(side_a.mmd, T{2});
    return {mse, mmd};
}

double total_loss(const LossParts& p, const LossWeights& w) {
    check_finite(p.cycle_a, "cycle_a");
    check_finite(p.cycle_b, "cycle_b");
    check_finite(p.gan_f, "gan_f");
    check_finite(p.gan_r, "gan_r");
    check_finite(p.ae, "ae");
    check_finite(p.mid_mse, "mid_mse");
    check_finite(p.mid_mmd, "mid_mmd");
    const double e = w.forward_emphasis;
    return w.lambda_cyc * (e * p.cycle_a + p.cycle_b) + w.lambda_gan * (e * p.gan_f + p.gan_r) + w.lambda_ae * p.ae +
           w.lambda_mid_mse * p.mid_mse + w.lambda_mid_mmd * p.mid_mmd;
}

template <typename T>
LossParts LossTerms<T>::values() const {
    LossParts p;
    p.cycle_a = static_cast<double>(cycle_a.item());
    p.cycle_b = static_cast<double>(cycle_b.item());
    p.gan_f = static_cast<double>(gan_f.item());
    p.gan_r = static_cast<double>(gan_r.item());
    if (ae) p.ae = static_cast<double>(ae->item());
    if (mid_mse) p.mid_mse = static_cast<double>(mid_mse->item());
    if (mid_mmd) p.mid_mmd = static_cast<double>(mid_mmd->item());
    return p;
}

template <typename T>
Var<T> total_loss(const LossTerms<T>& terms, const LossWeights& w) {
    total_loss(terms.values(), w); // finiteness check with part names
    const double e = w.forward_emphasis;
    std::vector<Var<T>> vars{terms.cycle_a, terms.cycle_b, terms.gan_f, terms.gan_r};
    std::vector<T> weights{static_cast<T>(w.lambda_cyc * e), static_cast<T>(w.lambda_cyc),
                           static_cast<T>(w.lambda_gan * e), static_cast<T>(w.lambda_gan)};
    if (terms.ae) {
        vars.push_back(*terms.ae);
        weights.push_back(static_cast<T>(w.lambda_ae));
    }
    if (terms.mid_mse) {
        vars.push_back(*terms.mid_mse);
        weights.push_back(static_cast<T>(w.lambda_mid_mse));
    }
    if (terms.mid_mmd) {
        vars.push_back(*terms.mid_mmd);
        weights.push_back(static_cast<T>(w.lambda_mid_mmd));
    }
    return ad::weighted_sum<T>(vars, weights);
}

#define SSRGAN_INSTANTIATE_LOSSES(T)                                                                        \
    template Var<T> cycle_loss(Var<T>, Var<T>, Var<T>, Var<T>);                                             \
    template Var<T> lsgan_loss(std::optional<Var<T>>, Var<T>, GanRole);                                     \
    template Var<T> ae_loss(Var<T>, Var<T>, Var<T>, Var<T>);                                                \
    template Var<T> mk_mmd(Var<T>, Var<T>, const MmdConfig&);                                               \
    template T mk_mmd_value(const Tensor<T>&, const Tensor<T>&, const MmdConfig&);                          \
    template MiddleContentTerms<T> middle_content_side(Var<T>, Var<T>, Var<T>, const MmdConfig&);           \
    template MiddleContentTerms<T> middle_content_loss(Var<T>, Var<T>, Var<T>, Var<T>, const MmdConfig&);   \
    template struct LossTerms<T>;                                                                           \
    template Var<T> total_loss(const LossTerms<T>&, const LossWeights&);

SSRGAN_INSTANTIATE_LOSSES(float)
SSRGAN_INSTANTIATE_LOSSES(double)

} // namespace ssrgan
