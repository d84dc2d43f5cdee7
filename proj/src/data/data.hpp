#pragma once

#include <optional>
#include <string>
#include <vector>

#include "codec/codec.hpp"
#include "core/rng.hpp"

namespace dcn::data {

enum class SplitTag { RD, RS, TestDS };

const char* split_tag_name(SplitTag t);

// One aligned multi-domain record. Which modalities are populated depends on
// the split the sample was assigned to: RD samples carry rgb+depth, RS carry
// rgb+semantics, test samples carry depth+semantics.
struct PairedSample {
    std::string id;
    std::optional<codec::RgbImage> rgb;
    std::optional<codec::DepthMap> depth;
    std::optional<codec::LabelMap> semantics;
    SplitTag split = SplitTag::RD;
};

struct SplitSpec {
    int n_rd = 0;
    int n_rs = 0;
    int n_test = 0;
    uint64_t seed = 0;
};

struct Splits {
    std::vector<std::string> rd;
    std::vector<std::string> rs;
    std::vector<std::string> test_ds;
    uint64_t seed = 0;
};

// Seeded shuffle of the id list followed by a three-way partition. The
// resulting id sets are pairwise disjoint, which is what makes the d-s pair
// genuinely unseen during training.
Splits make_zero_pair_splits(std::vector<std::string> ids, const SplitSpec& spec);

void save_splits_json(const std::string& path, const Splits& s);
Splits load_splits_json(const std::string& path);

// --- procedural toy scenes ------------------------------------------------------

// A generated scene plus the per-class depth layer table it was built from
// (classes without any visible pixel still get a layer assigned).
struct ToyScene {
    codec::RgbImage rgb;
    codec::DepthMap depth;
    codec::LabelMap labels;
    std::vector<float> class_depth;
};

// Ground plane + sky + 3..8 boxes/discs/poles. Each class owns one depth
// layer per scene; nearer shapes occlude farther ones, and RGB is the class
// base color scaled by a depth shading factor, so the three outputs share one
// occlusion order. Deterministic in the seed.
ToyScene generate_toy_scene(uint64_t seed, int size, int n_classes);

// Writes `count` scenes in the standard folder layout (rgb/, depth/,
// semantics/) plus the palette table used.
void write_toy_dataset(const std::string& out_dir, int count, int size, int n_classes,
                       uint64_t seed);

// --- batching ----------------------------------------------------------------------

// Batch order for one epoch: a seeded shuffle of [0, n) cut into
// batch_size-sized batches with the final partial batch dropped.
std::vector<std::vector<int>> epoch_batches(int n, int batch_size, uint64_t seed,
                                            const std::string& purpose, int64_t epoch);

// Stream view over a split. State is the single `consumed` counter, which is
// all a checkpoint needs to resume mid-epoch.
class BatchIterator {
public:
    BatchIterator() = default;
    BatchIterator(int n, int batch_size, uint64_t seed, std::string purpose);

    std::vector<int> next();
    int64_t consumed() const { return consumed_; }
    void restore(int64_t consumed);
    int batches_per_epoch() const { return n_ / batch_size_; }

private:
    void load_epoch(int64_t epoch);

    int n_ = 0;
    int batch_size_ = 1;
    uint64_t seed_ = 0;
    std::string purpose_;
    int64_t consumed_ = 0;
    int64_t cached_epoch_ = -1;
    std::vector<std::vector<int>> cached_;
};

// --- folder ingestion ------------------------------------------------------------------

struct IngestOptions {
    float near = 0.0f;
    float far = 1.0f;
    codec::Palette palette; // resolves semantic PNG colors
};

struct IngestResult {
    std::vector<PairedSample> samples;   // split tags unset; all modalities loaded
    int skipped = 0;                     // stems missing at least one modality
    int64_t unknown_color_pixels = 0;    // semantic pixels resolved by nearest palette color
    std::vector<std::string> warnings;
};

// Scans root/{rgb,depth,semantics} for matching stems. Stems missing any of
// the three files are skipped with a warning; semantic colors that are not
// exact palette members resolve to the nearest color and are counted.
IngestResult ingest_folder(const std::string& root, const IngestOptions& opts);

// --- resizing --------------------------------------------------------------------------

// Box-filter (area) resampling for continuous grids; used when adapting real
// datasets to the training resolution.
codec::RgbImage resize_area(const codec::RgbImage& img, int out_h, int out_w);
codec::DepthMap resize_area(const codec::DepthMap& d, int out_h, int out_w);
// Nearest-neighbor resampling for label grids (floor mapping).
codec::LabelMap resize_nn(const codec::LabelMap& m, int out_h, int out_w);

} // namespace dcn::data
