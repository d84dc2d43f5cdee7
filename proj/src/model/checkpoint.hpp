#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/tensor.hpp"

namespace dcn::nn {

// Checkpoint container: one binary file holding a JSON manifest plus named
// float32 arrays. Layout (all integers little-endian):
//   8 bytes   magic "DCNCKPT1"
//   u64       manifest byte count, then the manifest JSON (UTF-8)
//   u64       array count, then per array:
//     u32 key length, key bytes
//     u32 ndim, ndim x u32 dims
//     float32 data
// Keys follow "module.layer.param" paths ("encoder.stem.conv.weight"); the
// optimizer state uses an "adam.<group>.<m|v>." prefix on the same paths.
struct NamedArrayView {
    std::string key;
    const Tensor* tensor = nullptr;
};

void save_checkpoint(const std::string& path, const nlohmann::json& manifest,
                     const std::vector<NamedArrayView>& arrays);

struct LoadedCheckpoint {
    nlohmann::json manifest;
    std::map<std::string, Tensor> arrays;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace dcn::nn
