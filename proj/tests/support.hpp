#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "ssrgan/tensor.hpp"

namespace testing {

inline ssrgan::Tensor<double> randn(ssrgan::Shape s, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sd);
    ssrgan::Tensor<double> t(s);
    for (auto& v : t.data()) v = d(rng);
    return t;
}

inline double max_abs_diff(const ssrgan::Tensor<double>& a, const ssrgan::Tensor<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("ssrgan_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

} // namespace testing
