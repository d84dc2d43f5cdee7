#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dcn {

struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels; // interleaved RGB, height*width*3
};

struct ImageU16 {
    int width = 0;
    int height = 0;
    std::vector<uint16_t> pixels; // grayscale, height*width
};

// Decoded PNG, normalized to one of two in-memory forms: 8-bit RGB for color
// images (palette/gray/alpha variants are expanded or stripped) or 16-bit
// grayscale for depth files.
struct PngImage {
    bool is_gray16 = false;
    ImageU8 rgb8;
    ImageU16 gray16;
};

PngImage read_png(const std::string& path);
void write_png_rgb8(const std::string& path, const ImageU8& img);
void write_png_gray16(const std::string& path, const ImageU16& img);

} // namespace dcn
