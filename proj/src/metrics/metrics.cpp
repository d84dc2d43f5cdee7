#include "metrics/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"

namespace dcn::metrics {

int64_t ConfusionCounts::total() const {
    int64_t t = 0;
    for (const int64_t v : counts) t += v;
    return t;
}

int64_t ConfusionCounts::row_sum(int gt) const {
    int64_t t = 0;
    for (int p = 0; p < num_classes; ++p) t += at(gt, p);
    return t;
}

int64_t ConfusionCounts::col_sum(int pred) const {
    int64_t t = 0;
    for (int g = 0; g < num_classes; ++g) t += at(g, pred);
    return t;
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
    if (other.num_classes != num_classes) throw InputError("confusion class counts differ");
    for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

codec::LabelMap upsample_nn(const codec::LabelMap& m, int out_h, int out_w) {
    if (out_h < m.height || out_w < m.width)
        throw InputError("upsample_nn cannot downscale (" + std::to_string(m.height) + "x" +
                         std::to_string(m.width) + " -> " + std::to_string(out_h) + "x" +
                         std::to_string(out_w) + ")");
    return data::resize_nn(m, out_h, out_w);
}

ConfusionCounts confusion_counts(const codec::LabelMap& pred, const codec::LabelMap& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw InputError("prediction and ground truth sizes differ");
    if (pred.num_classes != gt.num_classes)
        throw InputError("prediction and ground truth class counts differ");
    ConfusionCounts c(gt.num_classes);
    for (size_t i = 0; i < gt.labels.size(); ++i) ++c.at(gt.labels[i], pred.labels[i]);
    return c;
}

IouPerClass iou_per_class(const ConfusionCounts& c) {
    IouPerClass out;
    out.iou.assign(size_t(c.num_classes), 0.0);
    out.has_denom.assign(size_t(c.num_classes), false);
    for (int k = 0; k < c.num_classes; ++k) {
        const int64_t inter = c.at(k, k);
        const int64_t uni = c.row_sum(k) + c.col_sum(k) - inter;
        if (uni > 0) {
            out.iou[size_t(k)] = double(inter) / double(uni);
            out.has_denom[size_t(k)] = true;
        }
    }
    return out;
}

double pixel_accuracy(const ConfusionCounts& c) {
    const int64_t total = c.total();
    if (total == 0) throw InputError("pixel accuracy over zero pixels");
    int64_t diag = 0;
    for (int k = 0; k < c.num_classes; ++k) diag += c.at(k, k);
    return double(diag) / double(total);
}

EvalReport report_from_confusion(const ConfusionCounts& c, int n_images, int n_skipped) {
    EvalReport r;
    r.confusion = c;
    r.n_images = n_images;
    r.n_skipped = n_skipped;
    const IouPerClass per = iou_per_class(c);
    r.per_class_iou = per.iou;
    r.class_has_denom = per.has_denom;
    r.class_in_gt.assign(size_t(c.num_classes), false);
    double sum = 0.0;
    int present = 0;
    for (int k = 0; k < c.num_classes; ++k) {
        const bool in_gt = c.row_sum(k) > 0;
        r.class_in_gt[size_t(k)] = in_gt;
        if (in_gt) { // the mean covers only classes the ground truth contains
            sum += per.iou[size_t(k)];
            ++present;
        }
    }
    r.mean_iou = present > 0 ? sum / present : 0.0;
    r.pixel_accuracy = c.total() > 0 ? pixel_accuracy(c) : 0.0;
    return r;
}

namespace {

void dump_triptych(const std::string& dir, const std::string& id, const codec::DepthMap& depth,
                   const codec::RgbImage& pred_sem, const codec::LabelMap& gt,
                   const codec::Palette& palette, const codec::Colormap* colormap) {
    const codec::Colormap& cm = colormap ? *colormap : codec::depth_colormap();
    const codec::RgbImage left = codec::encode_depth(depth, cm);
    const codec::RgbImage mid = codec::to_file_range(pred_sem);
    const codec::RgbImage right = codec::encode_semantic(gt, palette);

    const int h = std::max({left.height, mid.height, right.height});
    const int w = left.width + mid.width + right.width;
    ImageU8 out;
    out.height = h;
    out.width = w;
    out.pixels.assign(size_t(h) * w * 3, 0);
    int x_off = 0;
    for (const codec::RgbImage* img : {&left, &mid, &right}) {
        for (int y = 0; y < img->height; ++y)
            for (int x = 0; x < img->width; ++x)
                for (int c = 0; c < 3; ++c)
                    out.pixels[(size_t(y) * w + size_t(x + x_off)) * 3 + size_t(c)] =
                        uint8_t(std::lround(img->at(y, x, c)));
        x_off += img->width;
    }
    write_png_rgb8((std::filesystem::path(dir) / (id + "_triptych.png")).string(), out);
}

} // namespace

EvalReport evaluate_d2s(const DepthToSemantic& translate,
                        const std::vector<data::PairedSample>& test_set,
                        const codec::Palette& palette, const EvalOptions& opts) {
    palette.validate();
    if (!opts.dump_dir.empty())
        std::filesystem::create_directories(opts.dump_dir);

    ConfusionCounts agg(palette.size());
    int n_images = 0, n_skipped = 0;
    for (const data::PairedSample& sample : test_set) {
        if (!sample.depth || !sample.semantics) {
            ++n_skipped;
            continue;
        }
        const codec::LabelMap& gt = *sample.semantics;

        codec::DepthMap depth = *sample.depth;
        if (opts.model_size > 0 && (depth.height != opts.model_size || depth.width != opts.model_size))
            depth = data::resize_area(depth, opts.model_size, opts.model_size);

        const codec::RgbImage pred_sem = translate(depth);
        codec::LabelMap pred = codec::decode_semantic_nn(pred_sem, palette);
        if (pred.height != gt.height || pred.width != gt.width)
            pred = upsample_nn(pred, gt.height, gt.width);

        agg.merge(confusion_counts(pred, gt));
        ++n_images;

        if (!opts.dump_dir.empty())
            dump_triptych(opts.dump_dir, sample.id, *sample.depth, pred_sem, gt, palette,
                          opts.colormap);
    }
    if (n_images == 0) throw InputError("test set produced no evaluable samples");
    return report_from_confusion(agg, n_images, n_skipped);
}

void write_report_json(const std::string& path, const EvalReport& r,
                       const std::vector<std::string>& class_names) {
    nlohmann::json j;
    j["n_images"] = r.n_images;
    j["n_skipped"] = r.n_skipped;
    j["mean_iou"] = r.mean_iou;
    j["pixel_accuracy"] = r.pixel_accuracy;
    nlohmann::json per = nlohmann::json::array();
    for (size_t k = 0; k < r.per_class_iou.size(); ++k) {
        nlohmann::json e;
        e["class"] = k < class_names.size() ? class_names[k] : ("class" + std::to_string(k));
        if (r.class_has_denom[k])
            e["iou"] = r.per_class_iou[k];
        else
            e["iou"] = nullptr; // absent from both prediction and ground truth
        e["in_ground_truth"] = static_cast<bool>(r.class_in_gt[k]);
        per.push_back(e);
    }
    j["per_class"] = per;
    nlohmann::json conf = nlohmann::json::array();
    for (int g = 0; g < r.confusion.num_classes; ++g) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < r.confusion.num_classes; ++p) row.push_back(r.confusion.at(g, p));
        conf.push_back(row);
    }
    j["confusion"] = conf;

    std::ofstream out(path);
    if (!out) throw IoError("cannot create report file: " + path);
    out << j.dump(2) << '\n';
}

std::string format_report_table(const EvalReport& r, const std::vector<std::string>& class_names) {
    std::ostringstream os;
    os << "Per-class IoU [%]\n";
    for (size_t k = 0; k < r.per_class_iou.size(); ++k) {
        const std::string name = k < class_names.size() ? class_names[k] : ("class" + std::to_string(k));
        char value[32];
        if (!r.class_has_denom[k])
            std::snprintf(value, sizeof(value), "   -  ");
        else
            std::snprintf(value, sizeof(value), "%6.1f", 100.0 * r.per_class_iou[k]);
        os << "  " << name;
        for (size_t pad = name.size(); pad < 16; ++pad) os << ' ';
        os << value;
        if (!r.class_in_gt[k]) os << "  (not in ground truth)";
        os << '\n';
    }
    char line[128];
    std::snprintf(line, sizeof(line), "  %-16s%6.1f\n", "mIoU", 100.0 * r.mean_iou);
    os << line;
    std::snprintf(line, sizeof(line), "  %-16s%6.1f\n", "Pixel Acc.", 100.0 * r.pixel_accuracy);
    os << line;
    std::snprintf(line, sizeof(line), "  images: %d  skipped: %d\n", r.n_images, r.n_skipped);
    os << line;
    return os.str();
}

} // namespace dcn::metrics
