#pragma once

#include <cstddef>

#include "ssrgan/model.hpp"
#include "ssrgan/signal.hpp"

namespace ssrgan {

/// segment -> G_f -> stitch with the model's normalization scale. The output
/// covers whole windows only (the trailing remainder is dropped, as in segment).
template <typename T>
Recording denoise_recording(Model<T>& model, const Recording& rec, std::size_t batch_size = 64);

/// G_f over a windowed dataset, in batches; means/scale/provenance are kept.
template <typename T>
WindowedDataset denoise_windows(Model<T>& model, const WindowedDataset& ds, std::size_t batch_size = 64);

/// First `length` samples of every channel.
Recording crop(const Recording& rec, std::size_t length);

} // namespace ssrgan
