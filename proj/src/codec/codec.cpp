#include "codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"

namespace dcn::codec {

namespace {

int64_t sq_dist(float r, float g, float b, const Rgb& c) {
    // Inputs are integral file-range values; exact integer arithmetic keeps
    // tie-breaking well defined.
    const int64_t dr = static_cast<int64_t>(std::lround(r)) - c[0];
    const int64_t dg = static_cast<int64_t>(std::lround(g)) - c[1];
    const int64_t db = static_cast<int64_t>(std::lround(b)) - c[2];
    return dr * dr + dg * dg + db * db;
}

int nearest_color(float r, float g, float b, const std::vector<Rgb>& colors) {
    int best = 0;
    int64_t best_d = sq_dist(r, g, b, colors[0]);
    for (int k = 1; k < static_cast<int>(colors.size()); ++k) {
        const int64_t d = sq_dist(r, g, b, colors[k]);
        if (d < best_d) { // strict: ties keep the lowest index
            best_d = d;
            best = k;
        }
    }
    return best;
}

void check_distinct(const std::vector<Rgb>& colors, const char* what) {
    std::set<Rgb> seen(colors.begin(), colors.end());
    if (seen.size() != colors.size())
        throw ConfigError(std::string(what) + " colors must be pairwise distinct");
}

} // namespace

void LabelMap::validate() const {
    if (height < 1 || width < 1) throw InputError("label map must be at least 1x1");
    if (num_classes < 1) throw ConfigError("label map needs a positive class count");
    if (labels.size() != static_cast<size_t>(height) * width)
        throw InputError("label buffer size does not match dimensions");
    for (const int v : labels)
        if (v < 0 || v >= num_classes) throw InputError("label value outside [0, num_classes)");
}

void DepthMap::validate() const {
    if (height < 1 || width < 1) throw InputError("depth map must be at least 1x1");
    if (!(near < far)) throw InputError("depth bounds require near < far");
    if (depth.size() != static_cast<size_t>(height) * width)
        throw InputError("depth buffer size does not match dimensions");
    for (const float v : depth)
        if (!(v >= 0.0f && v <= 1.0f)) throw InputError("depth value outside [0, 1]");
}

void Palette::validate() const {
    if (colors.empty()) throw ConfigError("palette is empty");
    if (!names.empty() && names.size() != colors.size())
        throw ConfigError("palette names must match the color count");
    check_distinct(colors, "palette");
}

void Colormap::validate() const {
    if (size() < 2) throw ConfigError("colormap needs at least 2 stops");
    check_distinct(stops, "colormap");
}

RgbImage encode_semantic(const LabelMap& m, const Palette& p) {
    p.validate();
    if (m.num_classes != p.size())
        throw ConfigError("palette size " + std::to_string(p.size()) +
                          " does not match class count " + std::to_string(m.num_classes));
    RgbImage out;
    out.height = m.height;
    out.width = m.width;
    out.range = PixelRange::File;
    out.pixels.resize(static_cast<size_t>(m.height) * m.width * 3);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const Rgb& c = p.colors[static_cast<size_t>(m.at(y, x))];
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = static_cast<float>(c[ch]);
        }
    return out;
}

LabelMap decode_semantic_nn(const RgbImage& img, const Palette& p) {
    p.validate();
    const RgbImage file = img.range == PixelRange::File ? img : to_file_range(img);
    LabelMap out;
    out.height = file.height;
    out.width = file.width;
    out.num_classes = p.size();
    out.labels.resize(static_cast<size_t>(file.height) * file.width);
    for (int y = 0; y < file.height; ++y)
        for (int x = 0; x < file.width; ++x)
            out.at(y, x) = nearest_color(file.at(y, x, 0), file.at(y, x, 1), file.at(y, x, 2), p.colors);
    return out;
}

RgbImage encode_depth(const DepthMap& d, const Colormap& cm) {
    cm.validate();
    const int k_max = cm.size() - 1;
    RgbImage out;
    out.height = d.height;
    out.width = d.width;
    out.range = PixelRange::File;
    out.pixels.resize(static_cast<size_t>(d.height) * d.width * 3);
    for (int y = 0; y < d.height; ++y)
        for (int x = 0; x < d.width; ++x) {
            const float v = d.at(y, x);
            if (!(v >= 0.0f && v <= 1.0f))
                throw InputError("depth value outside [0, 1]");
            const int k = static_cast<int>(std::lround(static_cast<double>(v) * k_max));
            const Rgb& c = cm.stops[static_cast<size_t>(k)];
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = static_cast<float>(c[ch]);
        }
    return out;
}

DepthMap decode_depth(const RgbImage& img, const Colormap& cm) {
    cm.validate();
    const RgbImage file = img.range == PixelRange::File ? img : to_file_range(img);
    const int k_max = cm.size() - 1;
    DepthMap out;
    out.height = file.height;
    out.width = file.width;
    out.depth.resize(static_cast<size_t>(file.height) * file.width);
    for (int y = 0; y < file.height; ++y)
        for (int x = 0; x < file.width; ++x) {
            const int k = nearest_color(file.at(y, x, 0), file.at(y, x, 1), file.at(y, x, 2), cm.stops);
            out.at(y, x) = static_cast<float>(k) / static_cast<float>(k_max);
        }
    return out;
}

RgbImage to_network_range(const RgbImage& img) {
    if (img.range == PixelRange::Network) return img;
    RgbImage out = img;
    out.range = PixelRange::Network;
    for (auto& v : out.pixels) v = v / 127.5f - 1.0f;
    return out;
}

RgbImage to_file_range(const RgbImage& img) {
    if (img.range == PixelRange::File) return img;
    RgbImage out = img;
    out.range = PixelRange::File;
    for (auto& v : out.pixels) {
        const float c = std::clamp(v, -1.0f, 1.0f);
        v = static_cast<float>(std::lround((c + 1.0f) * 127.5f));
    }
    return out;
}

void copy_to_tensor(const RgbImage& net_img, Tensor& batch, int n) {
    if (net_img.range != PixelRange::Network)
        throw InputError("network tensors take network-range images");
    if (batch.ndim() != 4 || batch.dim(1) != 3 || batch.dim(2) != net_img.height ||
        batch.dim(3) != net_img.width)
        throw InputError("batch tensor shape does not match image");
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < net_img.height; ++y)
            for (int x = 0; x < net_img.width; ++x)
                batch.at(n, c, y, x) = net_img.at(y, x, c);
}

RgbImage image_from_tensor(const Tensor& batch, int n) {
    if (batch.ndim() != 4 || batch.dim(1) != 3)
        throw InputError("expected an Nx3xHxW tensor");
    RgbImage out;
    out.height = batch.dim(2);
    out.width = batch.dim(3);
    out.range = PixelRange::Network;
    out.pixels.resize(static_cast<size_t>(out.height) * out.width * 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                out.at(y, x, c) = batch.at(n, c, y, x);
    return out;
}

Palette load_palette(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open palette file: " + path);
    Palette p;
    std::string line;
    bool any_name = false;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        int r, g, b;
        if (!(ls >> r >> g >> b)) continue; // blank line
        for (const int v : {r, g, b})
            if (v < 0 || v > 255) throw ConfigError("palette color out of range in " + path);
        p.colors.push_back({r, g, b});
        std::string name;
        ls >> name;
        any_name = any_name || !name.empty();
        p.names.push_back(name);
    }
    if (!any_name) p.names.clear();
    p.validate();
    return p;
}

void save_palette(const std::string& path, const Palette& p) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot create palette file: " + path);
    for (size_t i = 0; i < p.colors.size(); ++i) {
        out << p.colors[i][0] << ' ' << p.colors[i][1] << ' ' << p.colors[i][2];
        if (i < p.names.size() && !p.names[i].empty()) out << ' ' << p.names[i];
        out << '\n';
    }
}

Colormap load_colormap(const std::string& path) {
    const Palette as_palette = load_palette(path);
    Colormap cm;
    cm.stops = as_palette.colors;
    cm.validate();
    return cm;
}

void save_colormap(const std::string& path, const Colormap& cm) {
    Palette p;
    p.colors = cm.stops;
    save_palette(path, p);
}

RgbImage rgb_from_png(const ImageU8& img) {
    RgbImage out;
    out.height = img.height;
    out.width = img.width;
    out.range = PixelRange::File;
    out.pixels.assign(img.pixels.begin(), img.pixels.end());
    return out;
}

ImageU8 rgb_to_png(const RgbImage& img) {
    const RgbImage file = img.range == PixelRange::File ? img : to_file_range(img);
    ImageU8 out;
    out.height = file.height;
    out.width = file.width;
    out.pixels.resize(file.pixels.size());
    for (size_t i = 0; i < file.pixels.size(); ++i)
        out.pixels[i] = static_cast<uint8_t>(std::clamp(std::lround(file.pixels[i]), 0l, 255l));
    return out;
}

DepthMap depth_from_png16(const ImageU16& img, float near, float far) {
    if (!(near < far)) throw ConfigError("depth normalization requires near < far");
    DepthMap d;
    d.height = img.height;
    d.width = img.width;
    d.near = near;
    d.far = far;
    d.depth.resize(img.pixels.size());
    const float span = far - near;
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        const float raw = static_cast<float>(img.pixels[i]) / 65535.0f;
        d.depth[i] = std::clamp((raw - near) / span, 0.0f, 1.0f);
    }
    return d;
}

ImageU16 depth_to_png16(const DepthMap& d) {
    ImageU16 out;
    out.height = d.height;
    out.width = d.width;
    out.pixels.resize(d.depth.size());
    for (size_t i = 0; i < d.depth.size(); ++i) {
        const float v = std::clamp(d.depth[i], 0.0f, 1.0f);
        out.pixels[i] = static_cast<uint16_t>(std::lround(v * 65535.0f));
    }
    return out;
}

} // namespace dcn::codec
