#include "ssrgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "ssrgan/json_io.hpp"

namespace ssrgan {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'R', 'G'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

FormatError truncated(const std::string& path, const std::string& where) {
    return FormatError("checkpoint", path + ": truncated in " + where);
}

} // namespace

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
    auto params = const_cast<Model<T>&>(model).all_parameters();
    Json tensors = Json::array();
    std::size_t offset = 0;
    for (const auto* p : params) {
        const Shape& s = p->value.shape();
        tensors.push_back(Json{{"name", p->name},
                               {"shape", {s.batch, s.channels, s.length}},
                               {"offset", offset},
                               {"count", p->value.size()}});
        offset += p->value.size();
    }
    Json header{{"config", model.config()}, {"normalization_scale", model.normalization_scale}, {"tensors", tensors}};
    const std::string text = header.dump();

    std::string out(kMagic, 4);
    out.push_back(static_cast<char>(kCheckpointVersion));
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out += text;
    for (const auto* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const float f = static_cast<float>(p->value[i]);
            char bytes[4];
            std::memcpy(bytes, &f, 4);
            out.append(bytes, 4);
        }
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("checkpoint", "cannot write " + path);
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw Error("checkpoint", "write failed for " + path);
}

template <typename T>
Model<T> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("checkpoint", "cannot open " + path);
    const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 4) throw truncated(path, "magic");
    if (std::memcmp(data, kMagic, 4) != 0) throw FormatError("checkpoint", path + ": bad magic bytes (expected SSRG)");
    if (size < 5) throw truncated(path, "version");
    if (data[4] != kCheckpointVersion) {
        throw UnsupportedError("checkpoint", path + ": unsupported format version " + std::to_string(data[4]) +
                                                 " (this build reads version " +
                                                 std::to_string(kCheckpointVersion) + ")");
    }
    if (size < 9) throw truncated(path, "header length");
    const std::size_t header_len = get_u32(data + 5);
    if (size < 9 + header_len) throw truncated(path, "header");

    Json header;
    try {
        header = Json::parse(bytes.begin() + 9, bytes.begin() + 9 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint", path + ": malformed header: " + e.what());
    }
    ModelConfig config;
    double scale = 1.0;
    try {
        config = header.at("config").get<ModelConfig>();
        scale = header.at("normalization_scale").get<double>();
        header.at("tensors").get_ref<const Json::array_t&>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint", path + ": malformed header: " + e.what());
    } catch (const ConfigError& e) {
        throw FormatError("checkpoint", path + ": malformed header config: " + e.what());
    }

    Model<T> model(config, 0);
    model.normalization_scale = scale;
    std::map<std::string, Parameter<T>*> by_name;
    for (auto* p : model.all_parameters()) by_name[p->name] = p;

    const std::size_t blob_start = 9 + header_len;
    const std::size_t blob_floats = (size - blob_start) / 4;
    std::size_t seen = 0;
    for (const auto& entry : header["tensors"]) {
        std::string name;
        std::size_t offset = 0;
        std::size_t count = 0;
        std::vector<std::size_t> shape;
        try {
            name = entry.at("name").get<std::string>();
            offset = entry.at("offset").get<std::size_t>();
            count = entry.at("count").get<std::size_t>();
            shape = entry.at("shape").get<std::vector<std::size_t>>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("checkpoint", path + ": malformed tensor entry: " + e.what());
        }
        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint", path + ": unexpected tensor '" + name + "'");
        Parameter<T>& p = *it->second;
        const Shape& s = p.value.shape();
        if (shape != std::vector<std::size_t>{s.batch, s.channels, s.length} || count != p.value.size()) {
            throw FormatError("checkpoint", path + ": tensor '" + name + "' has shape/count inconsistent with config");
        }
        if (offset + count > blob_floats) throw truncated(path, "tensor '" + name + "'");
        for (std::size_t i = 0; i < count; ++i) {
            float f = 0.0F;
            std::memcpy(&f, data + blob_start + 4 * (offset + i), 4);
            p.value[i] = static_cast<T>(f);
        }
        ++seen;
    }
    if (seen != by_name.size()) {
        throw FormatError("checkpoint", path + ": manifest lists " + std::to_string(seen) + " tensors, model needs " +
                                            std::to_string(by_name.size()));
    }
    return model;
}

template void save_checkpoint(const Model<float>&, const std::string&);
template void save_checkpoint(const Model<double>&, const std::string&);
template Model<float> load_checkpoint(const std::string&);
template Model<double> load_checkpoint(const std::string&);

} // namespace ssrgan
