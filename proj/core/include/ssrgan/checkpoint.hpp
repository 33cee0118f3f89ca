#pragma once

#include <cstdint>
#include <string>

#include "ssrgan/model.hpp"

namespace ssrgan {

/// Layout: "SSRG", version byte, uint32 LE header length, JSON header
/// {config, normalization_scale, tensors:[{name, shape, offset, count}]},
/// then little-endian float32 blobs in manifest order (offset in floats).
inline constexpr std::uint8_t kCheckpointVersion = 1;

/// Weights are stored as float32; the round trip is bitwise for Model<float>.
template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path);

/// Throws FormatError (bad magic, truncation, malformed header) or
/// UnsupportedError (unknown version byte).
template <typename T>
Model<T> load_checkpoint(const std::string& path);

} // namespace ssrgan
