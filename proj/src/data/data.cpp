#include "data/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "core/error.hpp"

namespace fs = std::filesystem;

namespace dcn::data {

const char* split_tag_name(SplitTag t) {
    switch (t) {
        case SplitTag::RD: return "rd";
        case SplitTag::RS: return "rs";
        case SplitTag::TestDS: return "test_ds";
    }
    return "?";
}

Splits make_zero_pair_splits(std::vector<std::string> ids, const SplitSpec& spec) {
    if (spec.n_rd < 0 || spec.n_rs < 0 || spec.n_test < 0)
        throw ConfigError("split sizes must be nonnegative");
    const size_t want = size_t(spec.n_rd) + size_t(spec.n_rs) + size_t(spec.n_test);
    if (want > ids.size())
        throw ConfigError("not enough ids for the requested splits: have " +
                          std::to_string(ids.size()) + ", need " + std::to_string(want));

    Rng rng(sub_seed(spec.seed, "zero-pair-splits"));
    rng.shuffle(ids);

    Splits out;
    out.seed = spec.seed;
    auto it = ids.begin();
    out.rd.assign(it, it + spec.n_rd);
    it += spec.n_rd;
    out.rs.assign(it, it + spec.n_rs);
    it += spec.n_rs;
    out.test_ds.assign(it, it + spec.n_test);
    return out;
}

void save_splits_json(const std::string& path, const Splits& s) {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["rd"] = s.rd;
    j["rs"] = s.rs;
    j["test_ds"] = s.test_ds;
    std::ofstream out(path);
    if (!out) throw IoError("cannot create split manifest: " + path);
    out << j.dump(2) << '\n';
}

Splits load_splits_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
        Splits s;
        s.seed = j.value("seed", uint64_t{0});
        s.rd = j.at("rd").get<std::vector<std::string>>();
        s.rs = j.at("rs").get<std::vector<std::string>>();
        s.test_ds = j.at("test_ds").get<std::vector<std::string>>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed split manifest " + path + ": " + e.what());
    }
}

// --- toy scenes -------------------------------------------------------------

namespace {

struct Shape {
    int cls = 0;
    int kind = 0; // 0 box, 1 disc, 2 pole
    float cx = 0, cy = 0, w = 0, h = 0, radius = 0;

    bool covers(int y, int x) const {
        if (kind == 1) {
            const float dy = float(y) - cy, dx = float(x) - cx;
            return dy * dy + dx * dx <= radius * radius;
        }
        return std::abs(float(x) - cx) <= w * 0.5f && std::abs(float(y) - cy) <= h * 0.5f;
    }
};

} // namespace

ToyScene generate_toy_scene(uint64_t seed, int size, int n_classes) {
    if (size < 32) throw ConfigError("toy scenes need size >= 32");
    const codec::Palette palette = codec::toy_palette(n_classes); // validates n_classes

    Rng rng(sub_seed(seed, "toy-scene"));
    const int h = size, w = size;

    ToyScene scene;
    scene.labels = {h, w, n_classes, std::vector<int>(size_t(h) * w, 0)};
    scene.depth = {h, w, 0.0f, 1.0f, std::vector<float>(size_t(h) * w, 0.0f)};
    scene.class_depth.assign(size_t(n_classes), 0.0f);

    // One depth layer per class and scene: sky farthest, ground just in
    // front, shape classes spread over jittered slots so layers never
    // coincide.
    scene.class_depth[0] = 0.85f; // ground
    if (n_classes > 1) scene.class_depth[1] = 1.0f; // sky
    const int n_shape_classes = std::max(0, n_classes - 2);
    std::vector<int> slot_of_class(size_t(std::max(0, n_shape_classes)));
    for (int i = 0; i < n_shape_classes; ++i) slot_of_class[size_t(i)] = i;
    rng.shuffle(slot_of_class);
    for (int c = 0; c < n_shape_classes; ++c) {
        const float slot_width = 0.55f / float(n_shape_classes);
        const float jitter = float(rng.uniform(0.05, 0.95));
        scene.class_depth[size_t(c + 2)] = 0.15f + slot_width * (float(slot_of_class[size_t(c)]) + jitter);
    }

    // Background: sky above a jittered horizon, ground below.
    const int horizon = n_classes > 1 ? int(std::lround(h * rng.uniform(0.3, 0.45))) : 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int cls = (n_classes > 1 && y < horizon) ? 1 : 0;
            scene.labels.at(y, x) = cls;
            scene.depth.at(y, x) = scene.class_depth[size_t(cls)];
        }

    // Shapes, painted far to near.
    std::vector<Shape> shapes;
    if (n_shape_classes > 0) {
        const int count = rng.uniform_int(3, 8);
        for (int i = 0; i < count; ++i) {
            Shape s;
            s.cls = 2 + rng.uniform_int(0, n_shape_classes - 1);
            s.kind = (s.cls - 2) % 3;
            switch (s.kind) {
                case 0: // box
                    s.w = float(rng.uniform(0.14, 0.38)) * w;
                    s.h = float(rng.uniform(0.12, 0.30)) * h;
                    s.cx = float(rng.uniform(0.1, 0.9)) * w;
                    s.cy = float(rng.uniform(0.3, 0.85)) * h;
                    break;
                case 1: // disc
                    s.radius = float(rng.uniform(0.07, 0.17)) * std::min(h, w);
                    s.cx = float(rng.uniform(0.12, 0.88)) * w;
                    s.cy = float(rng.uniform(0.2, 0.8)) * h;
                    break;
                default: // pole
                    s.w = std::max(2.0f, float(rng.uniform(0.02, 0.05)) * w);
                    s.h = float(rng.uniform(0.3, 0.6)) * h;
                    s.cx = float(rng.uniform(0.08, 0.92)) * w;
                    s.cy = float(rng.uniform(0.35, 0.8)) * h;
                    break;
            }
            shapes.push_back(s);
        }
        std::stable_sort(shapes.begin(), shapes.end(), [&](const Shape& a, const Shape& b) {
            return scene.class_depth[size_t(a.cls)] > scene.class_depth[size_t(b.cls)];
        });
        for (const Shape& s : shapes) {
            const float d = scene.class_depth[size_t(s.cls)];
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (s.covers(y, x)) {
                        scene.labels.at(y, x) = s.cls;
                        scene.depth.at(y, x) = d;
                    }
        }
    }

    // RGB: class base color shaded by depth (near is brighter). The shading
    // couples depth into RGB without hiding the class color.
    scene.rgb.height = h;
    scene.rgb.width = w;
    scene.rgb.range = codec::PixelRange::File;
    scene.rgb.pixels.resize(size_t(h) * w * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int cls = scene.labels.at(y, x);
            const float shade = 1.0f - 0.45f * scene.depth.at(y, x);
            const codec::Rgb& base = palette.colors[size_t(cls)];
            for (int c = 0; c < 3; ++c)
                scene.rgb.at(y, x, c) = float(std::lround(float(base[size_t(c)]) * shade));
        }
    return scene;
}

void write_toy_dataset(const std::string& out_dir, int count, int size, int n_classes,
                       uint64_t seed) {
    if (count < 1) throw ConfigError("toy dataset needs at least one sample");
    const codec::Palette palette = codec::toy_palette(n_classes);

    const fs::path root(out_dir);
    std::error_code ec;
    for (const char* sub : {"rgb", "depth", "semantics"}) {
        fs::create_directories(root / sub, ec);
        if (ec) throw IoError("cannot create " + (root / sub).string());
    }

    for (int i = 0; i < count; ++i) {
        const ToyScene scene = generate_toy_scene(sub_seed(seed, "toy-sample", uint64_t(i)), size, n_classes);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "toy_%05d", i);
        write_png_rgb8((root / "rgb" / (std::string(stem) + ".png")).string(),
                       codec::rgb_to_png(scene.rgb));
        write_png_gray16((root / "depth" / (std::string(stem) + ".png")).string(),
                         codec::depth_to_png16(scene.depth));
        write_png_rgb8((root / "semantics" / (std::string(stem) + ".png")).string(),
                       codec::rgb_to_png(codec::encode_semantic(scene.labels, palette)));
    }
    codec::save_palette((root / "palette.txt").string(), palette);
}

// --- batching -----------------------------------------------------------------

std::vector<std::vector<int>> epoch_batches(int n, int batch_size, uint64_t seed,
                                            const std::string& purpose, int64_t epoch) {
    if (n < 1) throw ConfigError("cannot iterate an empty split");
    if (batch_size < 1 || batch_size > n)
        throw ConfigError("batch_size must be in [1, split size]");
    std::vector<int> order(size_t(n));
    for (int i = 0; i < n; ++i) order[size_t(i)] = i;
    Rng rng(sub_seed(seed, purpose, uint64_t(epoch)));
    rng.shuffle(order);

    std::vector<std::vector<int>> batches;
    const int bpe = n / batch_size; // final partial batch dropped
    batches.reserve(size_t(bpe));
    for (int b = 0; b < bpe; ++b)
        batches.emplace_back(order.begin() + int64_t(b) * batch_size,
                             order.begin() + int64_t(b + 1) * batch_size);
    return batches;
}

BatchIterator::BatchIterator(int n, int batch_size, uint64_t seed, std::string purpose)
    : n_(n), batch_size_(batch_size), seed_(seed), purpose_(std::move(purpose)) {
    if (n < 1) throw ConfigError("cannot iterate an empty split");
    if (batch_size < 1 || batch_size > n)
        throw ConfigError("batch_size must be in [1, split size]");
}

void BatchIterator::load_epoch(int64_t epoch) {
    if (cached_epoch_ != epoch) {
        cached_ = epoch_batches(n_, batch_size_, seed_, purpose_, epoch);
        cached_epoch_ = epoch;
    }
}

std::vector<int> BatchIterator::next() {
    if (n_ == 0) throw ConfigError("batch iterator was never initialized");
    const int bpe = batches_per_epoch();
    load_epoch(consumed_ / bpe);
    const auto batch = cached_[size_t(consumed_ % bpe)];
    ++consumed_;
    return batch;
}

void BatchIterator::restore(int64_t consumed) {
    if (consumed < 0) throw ConfigError("invalid iterator state");
    consumed_ = consumed;
    cached_epoch_ = -1;
}

// --- ingestion -----------------------------------------------------------------

IngestResult ingest_folder(const std::string& root, const IngestOptions& opts) {
    opts.palette.validate();
    const fs::path rgb_dir = fs::path(root) / "rgb";
    const fs::path depth_dir = fs::path(root) / "depth";
    const fs::path sem_dir = fs::path(root) / "semantics";
    for (const auto& dir : {rgb_dir, depth_dir, sem_dir})
        if (!fs::is_directory(dir)) throw IoError("missing dataset directory: " + dir.string());

    std::set<std::string> stems;
    for (const auto& dir : {rgb_dir, depth_dir, sem_dir})
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".png") stems.insert(entry.path().stem().string());

    IngestResult out;
    for (const std::string& stem : stems) { // std::set: deterministic order
        const fs::path rp = rgb_dir / (stem + ".png");
        const fs::path dp = depth_dir / (stem + ".png");
        const fs::path sp = sem_dir / (stem + ".png");
        if (!fs::exists(rp) || !fs::exists(dp) || !fs::exists(sp)) {
            ++out.skipped;
            out.warnings.push_back("skipping '" + stem + "': missing modality file");
            continue;
        }

        PairedSample sample;
        sample.id = stem;

        const PngImage rgb_png = read_png(rp.string());
        if (rgb_png.is_gray16) {
            ++out.skipped;
            out.warnings.push_back("skipping '" + stem + "': rgb file is 16-bit grayscale");
            continue;
        }
        sample.rgb = codec::rgb_from_png(rgb_png.rgb8);

        const PngImage depth_png = read_png(dp.string());
        if (depth_png.is_gray16) {
            sample.depth = codec::depth_from_png16(depth_png.gray16, opts.near, opts.far);
        } else {
            // 8-bit grayscale depth: widen and normalize the same way.
            ImageU16 g16;
            g16.width = depth_png.rgb8.width;
            g16.height = depth_png.rgb8.height;
            g16.pixels.resize(size_t(g16.width) * g16.height);
            for (size_t i = 0; i < g16.pixels.size(); ++i)
                g16.pixels[i] = uint16_t(depth_png.rgb8.pixels[i * 3] * 257);
            sample.depth = codec::depth_from_png16(g16, opts.near, opts.far);
        }

        const PngImage sem_png = read_png(sp.string());
        if (sem_png.is_gray16) {
            ++out.skipped;
            out.warnings.push_back("skipping '" + stem + "': semantic file is 16-bit grayscale");
            continue;
        }
        const codec::RgbImage sem_rgb = codec::rgb_from_png(sem_png.rgb8);
        codec::LabelMap labels = codec::decode_semantic_nn(sem_rgb, opts.palette);
        int64_t off_palette = 0;
        for (int y = 0; y < labels.height; ++y)
            for (int x = 0; x < labels.width; ++x) {
                const codec::Rgb& c = opts.palette.colors[size_t(labels.at(y, x))];
                if (std::lround(sem_rgb.at(y, x, 0)) != c[0] ||
                    std::lround(sem_rgb.at(y, x, 1)) != c[1] ||
                    std::lround(sem_rgb.at(y, x, 2)) != c[2])
                    ++off_palette;
            }
        if (off_palette > 0) {
            out.unknown_color_pixels += off_palette;
            out.warnings.push_back("'" + stem + "': " + std::to_string(off_palette) +
                                   " semantic pixels resolved to nearest palette color");
        }
        sample.semantics = std::move(labels);
        out.samples.push_back(std::move(sample));
    }
    return out;
}

// --- resizing ---------------------------------------------------------------------

namespace {

// Box-filter resample of a row-major grid with `ch` interleaved channels.
std::vector<float> area_resample(const std::vector<float>& src, int sh, int sw, int ch, int oh,
                                 int ow) {
    std::vector<float> dst(size_t(oh) * ow * ch, 0.0f);
    const double sy = double(sh) / oh, sx = double(sw) / ow;
    for (int ty = 0; ty < oh; ++ty) {
        const double y0 = ty * sy, y1 = (ty + 1) * sy;
        for (int tx = 0; tx < ow; ++tx) {
            const double x0 = tx * sx, x1 = (tx + 1) * sx;
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0, area = 0.0;
                for (int y = int(y0); y < int(std::ceil(y1)); ++y) {
                    const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
                    if (wy <= 0) continue;
                    for (int x = int(x0); x < int(std::ceil(x1)); ++x) {
                        const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
                        if (wx <= 0) continue;
                        acc += wy * wx * src[(size_t(y) * sw + size_t(x)) * ch + size_t(c)];
                        area += wy * wx;
                    }
                }
                dst[(size_t(ty) * ow + size_t(tx)) * ch + size_t(c)] = float(acc / area);
            }
        }
    }
    return dst;
}

} // namespace

codec::RgbImage resize_area(const codec::RgbImage& img, int out_h, int out_w) {
    if (out_h == img.height && out_w == img.width) return img;
    codec::RgbImage out;
    out.height = out_h;
    out.width = out_w;
    out.range = img.range;
    out.pixels = area_resample(img.pixels, img.height, img.width, 3, out_h, out_w);
    if (img.range == codec::PixelRange::File)
        for (auto& v : out.pixels) v = float(std::lround(v));
    return out;
}

codec::DepthMap resize_area(const codec::DepthMap& d, int out_h, int out_w) {
    if (out_h == d.height && out_w == d.width) return d;
    codec::DepthMap out;
    out.height = out_h;
    out.width = out_w;
    out.near = d.near;
    out.far = d.far;
    out.depth = area_resample(d.depth, d.height, d.width, 1, out_h, out_w);
    return out;
}

codec::LabelMap resize_nn(const codec::LabelMap& m, int out_h, int out_w) {
    if (out_h == m.height && out_w == m.width) return m;
    codec::LabelMap out;
    out.height = out_h;
    out.width = out_w;
    out.num_classes = m.num_classes;
    out.labels.resize(size_t(out_h) * out_w);
    for (int y = 0; y < out_h; ++y) {
        const int sy = int(int64_t(y) * m.height / out_h);
        for (int x = 0; x < out_w; ++x)
            out.at(y, x) = m.at(sy, int(int64_t(x) * m.width / out_w));
    }
    return out;
}

} // namespace dcn::data
