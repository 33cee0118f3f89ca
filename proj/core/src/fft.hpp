#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ssrgan::detail {

/// Real-to-complex transform of x zero-padded (or truncated) to n points; n/2+1 bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& x, std::size_t n);

/// Inverse of rfft, scaled so that irfft(rfft(x, n), n) == x.
std::vector<double> irfft(const std::vector<std::complex<double>>& spectrum, std::size_t n);

/// Smallest 2^a 3^b 5^c >= n.
std::size_t good_fft_size(std::size_t n);

/// Linear convolution of x with an odd-length centered kernel h, cropped to x's
/// length so that output[i] lines up with input[i] (zero padding outside x).
std::vector<double> convolve_same(const std::vector<double>& x, const std::vector<double>& h);

} // namespace ssrgan::detail
