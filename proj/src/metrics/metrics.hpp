#pragma once

#include <functional>
#include <string>
#include <vector>

#include "codec/codec.hpp"
#include "data/data.hpp"

namespace dcn::metrics {

// Pixel-count matrix indexed [ground truth][prediction].
struct ConfusionCounts {
    int num_classes = 0;
    std::vector<int64_t> counts; // num_classes * num_classes

    explicit ConfusionCounts(int n = 0)
        : num_classes(n), counts(size_t(n) * size_t(n), 0) {}

    int64_t& at(int gt, int pred) { return counts[size_t(gt) * num_classes + pred]; }
    int64_t at(int gt, int pred) const { return counts[size_t(gt) * num_classes + pred]; }
    int64_t total() const;
    int64_t row_sum(int gt) const;
    int64_t col_sum(int pred) const;

    // Associative, commutative combination; evaluation order never matters.
    void merge(const ConfusionCounts& other);
};

// Nearest-neighbor upsampling with the floor index mapping. Downscaling is
// rejected.
codec::LabelMap upsample_nn(const codec::LabelMap& m, int out_h, int out_w);

ConfusionCounts confusion_counts(const codec::LabelMap& pred, const codec::LabelMap& gt);

struct IouPerClass {
    std::vector<double> iou;       // 0 where absent
    std::vector<bool> has_denom;   // false when the class appears in neither map
};

// IoU_k = diag / (row + col - diag); zero-denominator classes are flagged.
IouPerClass iou_per_class(const ConfusionCounts& c);

double pixel_accuracy(const ConfusionCounts& c);

struct EvalReport {
    std::vector<double> per_class_iou;
    std::vector<bool> class_in_gt;  // classes absent from ground truth are excluded from the mean
    std::vector<bool> class_has_denom;
    double mean_iou = 0.0;
    double pixel_accuracy = 0.0;
    int n_images = 0;
    int n_skipped = 0;
    ConfusionCounts confusion;
};

EvalReport report_from_confusion(const ConfusionCounts& c, int n_images, int n_skipped);

// Translates one depth map into a semantic image (network inference plus the
// codec steps). Supplied by the caller so the harness itself stays
// model-agnostic and testable against oracles.
using DepthToSemantic = std::function<codec::RgbImage(const codec::DepthMap&)>;

struct EvalOptions {
    int model_size = 0;              // resolution the translator expects
    std::string dump_dir;            // when nonempty: per-sample triptych PNGs
    const codec::Colormap* colormap = nullptr; // for triptych depth rendering
};

// Depth -> semantics evaluation over a test split: translate each depth map
// at model resolution, decode to labels, upsample to the ground-truth
// resolution, and aggregate confusion counts over the whole set before
// computing metrics. Samples without ground truth are skipped and counted.
EvalReport evaluate_d2s(const DepthToSemantic& translate,
                        const std::vector<data::PairedSample>& test_set,
                        const codec::Palette& palette, const EvalOptions& opts);

void write_report_json(const std::string& path, const EvalReport& r,
                       const std::vector<std::string>& class_names);
// Columns: one IoU per class, then mIoU and pixel accuracy.
std::string format_report_table(const EvalReport& r, const std::vector<std::string>& class_names);

} // namespace dcn::metrics
