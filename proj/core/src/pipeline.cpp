#include "ssrgan/pipeline.hpp"

#include <algorithm>

namespace ssrgan {

template <typename T>
WindowedDataset denoise_windows(Model<T>& model, const WindowedDataset& ds, std::size_t batch_size) {
    if (batch_size == 0) throw InvalidArgument("pipeline", "batch size must be >= 1");
    const ModelConfig& mc = model.config();
    if (ds.window_length() != mc.window_length || ds.windows.shape().channels != mc.data_channels) {
        throw InvalidArgument("pipeline", "windows " + ds.windows.shape().str() + " do not match the model (n," +
                                              std::to_string(mc.data_channels) + "," +
                                              std::to_string(mc.window_length) + ")");
    }
    WindowedDataset out = ds;
    const std::size_t n = ds.size();
    const std::size_t stride = mc.data_channels * mc.window_length;
    for (std::size_t first = 0; first < n; first += batch_size) {
        const std::size_t count = std::min(batch_size, n - first);
        const Tensor<T> in = ds.windows.slice_batch(first, count).template cast<T>();
        const Tensor<T> y = generator_forward(model, in);
        for (std::size_t i = 0; i < count * stride; ++i) {
            out.windows[first * stride + i] = static_cast<double>(y[i]);
        }
    }
    return out;
}

template <typename T>
Recording denoise_recording(Model<T>& model, const Recording& rec, std::size_t batch_size) {
    rec.validate();
    const double window_s = static_cast<double>(model.config().window_length) / rec.sample_rate_hz;
    const WindowedDataset ds = segment(rec, window_s, model.normalization_scale, "denoise");
    return stitch(denoise_windows(model, ds, batch_size));
}

Recording crop(const Recording& rec, std::size_t length) {
    if (length > rec.length()) {
        throw InvalidArgument("pipeline", "cannot crop " + std::to_string(rec.length()) + " samples to " +
                                              std::to_string(length));
    }
    Recording out;
    out.sample_rate_hz = rec.sample_rate_hz;
    for (const auto& ch : rec.samples) {
        out.samples.emplace_back(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(length));
    }
    return out;
}

template Recording denoise_recording(Model<float>&, const Recording&, std::size_t);
template Recording denoise_recording(Model<double>&, const Recording&, std::size_t);
template WindowedDataset denoise_windows(Model<float>&, const WindowedDataset&, std::size_t);
template WindowedDataset denoise_windows(Model<double>&, const WindowedDataset&, std::size_t);

} // namespace ssrgan
