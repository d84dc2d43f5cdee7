#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/image_io.hpp"
#include "core/tensor.hpp"

namespace dcn::codec {

// Dense integer label grid, values in [0, num_classes).
struct LabelMap {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<int> labels; // row-major, height*width

    int& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }
    int at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
    void validate() const;
};

// Single-channel depth grid normalized to [0, 1]; near/far record the metric
// bounds the normalization came from.
struct DepthMap {
    int height = 0;
    int width = 0;
    float near = 0.0f;
    float far = 1.0f;
    std::vector<float> depth; // row-major

    float& at(int y, int x) { return depth[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return depth[static_cast<size_t>(y) * width + x]; }
    void validate() const;
};

// All domains share this 3-channel form so one network can process any of
// them. `range` records whether pixel values live in the integer file range
// [0,255] or the network range [-1,1].
enum class PixelRange { File, Network };

struct RgbImage {
    int height = 0;
    int width = 0;
    PixelRange range = PixelRange::File;
    std::vector<float> pixels; // interleaved HWC, height*width*3

    float& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
};

using Rgb = std::array<int, 3>;

// One fixed color per semantic class; all colors pairwise distinct.
struct Palette {
    std::vector<Rgb> colors;
    std::vector<std::string> names; // optional, empty or same length as colors

    int size() const { return static_cast<int>(colors.size()); }
    void validate() const;
};

// Ordered color ramp used to render depth as a 3-channel image.
struct Colormap {
    std::vector<Rgb> stops;

    int size() const { return static_cast<int>(stops.size()); }
    void validate() const;
};

// --- domain <-> 3-channel conversions -------------------------------------

// Exact per-pixel palette lookup; output is file-range.
RgbImage encode_semantic(const LabelMap& m, const Palette& p);

// Nearest palette color by squared RGB distance, lowest class index on ties.
LabelMap decode_semantic_nn(const RgbImage& img, const Palette& p);

// Quantized colormap lookup: value v maps to stops[round(v*(K-1))].
RgbImage encode_depth(const DepthMap& d, const Colormap& cm);

// Nearest stop by squared RGB distance (lowest index on ties) mapped back to
// k/(K-1). Inverse of encode_depth up to the quantization step.
DepthMap decode_depth(const RgbImage& img, const Colormap& cm);

// --- value range handling ---------------------------------------------------

// File range [0,255] -> network range [-1,1] (linear).
RgbImage to_network_range(const RgbImage& img);
// Clamp to [-1,1], then rescale and round to integers in [0,255].
RgbImage to_file_range(const RgbImage& img);

// NCHW batch bridge for the network side (image n of the batch).
void copy_to_tensor(const RgbImage& net_img, Tensor& batch, int n);
RgbImage image_from_tensor(const Tensor& batch, int n);

// --- built-in tables ----------------------------------------------------------

// 19-class urban-scene palette in the usual benchmark class order.
const Palette& urban_palette();
// First n classes of the toy ordering (ground, sky, box, disc, pole, ...).
Palette toy_palette(int n_classes);
// 64 stops sampled uniformly from a viridis-style perceptual ramp.
const Colormap& depth_colormap();

// --- plain-text tables ("R G B [name]" per line) -----------------------------

Palette load_palette(const std::string& path);
void save_palette(const std::string& path, const Palette& p);
Colormap load_colormap(const std::string& path);
void save_colormap(const std::string& path, const Colormap& cm);

// --- PNG bridges --------------------------------------------------------------

RgbImage rgb_from_png(const ImageU8& img);
ImageU8 rgb_to_png(const RgbImage& img); // accepts either range
DepthMap depth_from_png16(const ImageU16& img, float near, float far);
ImageU16 depth_to_png16(const DepthMap& d);

} // namespace dcn::codec
