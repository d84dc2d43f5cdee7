#include "codec/codec.hpp"

#include "core/error.hpp"

namespace dcn::codec {

namespace {

// 19-class urban benchmark palette with the conventional class order.
const Palette kUrban = {
    {
        {128, 64, 128},  // road
        {244, 35, 232},  // sidewalk
        {70, 70, 70},    // building
        {102, 102, 156}, // wall
        {190, 153, 153}, // fence
        {153, 153, 153}, // pole
        {250, 170, 30},  // traffic_light
        {220, 220, 0},   // traffic_sign
        {107, 142, 35},  // vegetation
        {152, 251, 152}, // terrain
        {70, 130, 180},  // sky
        {220, 20, 60},   // person
        {255, 0, 0},     // rider
        {0, 0, 142},     // car
        {0, 0, 70},      // truck
        {0, 60, 100},    // bus
        {0, 80, 100},    // train
        {0, 0, 230},     // motorcycle
        {119, 11, 32},   // bicycle
    },
    {
        "road", "sidewalk", "building", "wall", "fence", "pole", "traffic_light",
        "traffic_sign", "vegetation", "terrain", "sky", "person", "rider", "car",
        "truck", "bus", "train", "motorcycle", "bicycle",
    },
};

// Toy-scene class ordering drawn from the urban palette: ground plane, sky,
// then the three shape kinds, then the remaining urban colors for larger
// class counts.
constexpr int kToyUrbanIndex[19] = {0, 10, 2, 8, 5, 13, 11, 9, 1, 3, 4, 6, 7, 12, 14, 15, 16, 17, 18};
const char* kToyNames[5] = {"ground", "sky", "box", "disc", "pole"};

// 64 evenly spaced samples of the viridis ramp, frozen as data so depth
// encoding is bit-exact and dependency-free.
const Colormap kDepthRamp = {{
    {68, 1, 84},    {70, 7, 90},    {71, 13, 96},   {71, 19, 101},  {72, 24, 106},  {72, 29, 111},
    {72, 35, 116},  {72, 40, 120},  {71, 45, 123},  {70, 50, 126},  {69, 55, 129},  {68, 59, 132},
    {66, 64, 134},  {64, 69, 136},  {62, 73, 137},  {61, 78, 138},  {58, 83, 139},  {56, 88, 140},
    {54, 92, 141},  {52, 96, 141},  {50, 100, 142}, {49, 104, 142}, {47, 108, 142}, {45, 112, 142},
    {44, 115, 142}, {42, 119, 142}, {41, 123, 142}, {39, 127, 142}, {38, 130, 142}, {36, 134, 142},
    {35, 138, 141}, {33, 142, 141}, {32, 146, 140}, {31, 150, 139}, {31, 154, 138}, {31, 158, 137},
    {31, 161, 135}, {33, 165, 133}, {35, 169, 131}, {38, 173, 129}, {42, 176, 127}, {47, 180, 124},
    {53, 183, 121}, {59, 187, 117}, {66, 190, 113}, {74, 193, 109}, {82, 197, 105}, {90, 200, 100},
    {101, 203, 94}, {110, 206, 88}, {119, 209, 83}, {129, 211, 77}, {139, 214, 70}, {149, 216, 64},
    {160, 218, 57}, {170, 220, 50}, {181, 222, 43}, {192, 223, 37}, {202, 225, 31}, {213, 226, 26},
    {223, 227, 24}, {234, 229, 26}, {244, 230, 30}, {253, 231, 37},
}};

} // namespace

const Palette& urban_palette() { return kUrban; }

Palette toy_palette(int n_classes) {
    if (n_classes < 2 || n_classes > kUrban.size())
        throw ConfigError("toy palette supports 2 to " + std::to_string(kUrban.size()) + " classes");
    Palette p;
    for (int i = 0; i < n_classes; ++i) {
        const int u = kToyUrbanIndex[i];
        p.colors.push_back(kUrban.colors[static_cast<size_t>(u)]);
        p.names.push_back(i < 5 ? kToyNames[i] : kUrban.names[static_cast<size_t>(u)]);
    }
    return p;
}

const Colormap& depth_colormap() { return kDepthRamp; }

} // namespace dcn::codec
