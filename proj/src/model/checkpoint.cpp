#include "model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace dcn::nn {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'N', 'C', 'K', 'P', 'T', '1'};

template <class T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T read_pod(std::istream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("truncated checkpoint: " + path);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& manifest,
                     const std::vector<NamedArrayView>& arrays) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create checkpoint: " + path);

    out.write(kMagic, sizeof(kMagic));
    const std::string mtext = manifest.dump();
    write_pod<uint64_t>(out, mtext.size());
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));

    write_pod<uint64_t>(out, arrays.size());
    for (const NamedArrayView& a : arrays) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(a.key.size()));
        out.write(a.key.data(), static_cast<std::streamsize>(a.key.size()));
        const auto& shape = a.tensor->shape();
        write_pod<uint32_t>(out, static_cast<uint32_t>(shape.size()));
        for (const int d : shape) write_pod<uint32_t>(out, static_cast<uint32_t>(d));
        out.write(reinterpret_cast<const char*>(a.tensor->data()),
                  static_cast<std::streamsize>(sizeof(float) * a.tensor->numel()));
    }
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("not a checkpoint file: " + path);

    LoadedCheckpoint out;
    const uint64_t msize = read_pod<uint64_t>(in, path);
    std::string mtext(msize, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(msize));
    if (!in) throw IoError("truncated checkpoint: " + path);
    try {
        out.manifest = nlohmann::json::parse(mtext);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint manifest in " + path + ": " + e.what());
    }

    const uint64_t count = read_pod<uint64_t>(in, path);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t klen = read_pod<uint32_t>(in, path);
        std::string key(klen, '\0');
        in.read(key.data(), klen);
        const uint32_t ndim = read_pod<uint32_t>(in, path);
        std::vector<int> shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d)
            shape[d] = static_cast<int>(read_pod<uint32_t>(in, path));
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(sizeof(float) * t.numel()));
        if (!in) throw IoError("truncated checkpoint: " + path);
        out.arrays.emplace(std::move(key), std::move(t));
    }
    return out;
}

} // namespace dcn::nn
