#include "fft.hpp"

#include <algorithm>
#include <mutex>

#include <fftw3.h>

#include "ssrgan/errors.hpp"

namespace ssrgan::detail {
namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

std::size_t good_fft_size(std::size_t n) {
    if (n <= 1) return 1;
    std::size_t best = 1;
    while (best < n) best <<= 1;
    for (std::size_t p5 = 1; p5 < best; p5 *= 5) {
        for (std::size_t p3 = p5; p3 < best; p3 *= 3) {
            std::size_t v = p3;
            while (v < n) v <<= 1;
            best = std::min(best, v);
        }
    }
    return best;
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x, std::size_t n) {
    if (n == 0) return {};
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    const std::size_t copy = std::min(n, x.size());
    std::copy_n(x.data(), copy, in);
    std::fill(in + copy, in + n, 0.0);
    fftw_execute(plan);
    std::vector<std::complex<double>> result(n / 2 + 1);
    for (std::size_t i = 0; i < result.size(); ++i) result[i] = {out[i][0], out[i][1]};
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return result;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& spectrum, std::size_t n) {
    if (n == 0) return {};
    if (spectrum.size() != n / 2 + 1) {
        throw InvalidArgument("signal", "irfft: spectrum has " + std::to_string(spectrum.size()) + " bins, expected " +
                                            std::to_string(n / 2 + 1));
    }
    fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
    double* out = fftw_alloc_real(n);
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        in[i][0] = spectrum[i].real();
        in[i][1] = spectrum[i].imag();
    }
    fftw_execute(plan);
    std::vector<double> result(out, out + n);
    const double inv = 1.0 / static_cast<double>(n);
    for (double& v : result) v *= inv;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return result;
}

std::vector<double> convolve_same(const std::vector<double>& x, const std::vector<double>& h) {
    if (x.empty()) return {};
    const std::size_t full = x.size() + h.size() - 1;
    const std::size_t n = good_fft_size(full);
    auto xs = rfft(x, n);
    const auto hs = rfft(h, n);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] *= hs[i];
    const std::vector<double> y = irfft(xs, n);
    const std::size_t delay = (h.size() - 1) / 2;
    return std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(delay),
                               y.begin() + static_cast<std::ptrdiff_t>(delay + x.size()));
}

} // namespace ssrgan::detail
