#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "loss/losses.hpp"
#include "model/networks.hpp"

namespace dcn::train {

// --- minimal TOML reader -----------------------------------------------------
// Supports the documented config schema: [section] headers, key = value lines
// with strings, integers, floats and booleans, and # comments.

struct TomlValue {
    enum class Kind { String, Integer, Float, Boolean };
    Kind kind = Kind::String;
    std::string s;
    int64_t i = 0;
    double f = 0.0;
    bool b = false;

    std::string as_string() const;
    int64_t as_int() const;
    double as_float() const; // integers coerce
    bool as_bool() const;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

// --- resolved configuration -----------------------------------------------------

struct TrainConfig {
    nn::NetworkConfig net;  // [model]
    loss::HyperParams hp;   // [loss] weights + [train] schedule

    // [train]
    uint64_t seed = 7;
    int64_t checkpoint_every = 0; // 0: every 10% of total_iters
    int64_t pseudo_every = 1;     // 0 disables pseudo-pair steps
    bool pseudo_full_decoder = false; // ablation: update the whole decoder instead of the d-s rows
    std::string log_csv = "train_log.csv";

    // [data]
    std::string data_root;
    std::string split_manifest;
    std::string palette = ""; // path, "urban19", or "" for the toy palette
    std::string colormap = ""; // path or "" for the built-in ramp
    int n_classes = 5;
    float near = 0.0f;
    float far = 1.0f;

    void validate() const;
    std::string to_toml() const; // resolved round-trippable dump
    uint64_t config_hash() const;

    codec::Palette resolve_palette() const;
    codec::Colormap resolve_colormap() const;
    int64_t effective_checkpoint_every() const;

    static TrainConfig from_toml(const TomlTable& t);
    static TrainConfig from_toml_file(const std::string& path);
};

} // namespace dcn::train
