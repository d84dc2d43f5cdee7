#include "dcn/dcn.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "core/error.hpp"
#include "data/data.hpp"
#include "metrics/metrics.hpp"
#include "train/trainer.hpp"

namespace {

thread_local std::string t_last_error;

void set_error(const std::string& msg) { t_last_error = msg; }

dcn_status run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        t_last_error.clear();
        return DCN_OK;
    } catch (const dcn::NumericError& e) {
        set_error(e.what());
        return DCN_ERROR_NUMERIC;
    } catch (const dcn::IoError& e) {
        set_error(e.what());
        return DCN_ERROR_IO;
    } catch (const dcn::ConfigError& e) {
        set_error(e.what());
        return DCN_ERROR_CONFIG;
    } catch (const dcn::InputError& e) {
        set_error(e.what());
        return DCN_ERROR_CONFIG;
    } catch (const std::exception& e) {
        set_error(e.what());
        return DCN_ERROR_CONFIG;
    }
}

dcn_status fill_buffer(const std::string& text, char* buffer, size_t buffer_size) {
    if (!buffer || buffer_size == 0) {
        set_error("output buffer is null or empty");
        return DCN_ERROR_INVALID;
    }
    if (text.size() + 1 > buffer_size) {
        set_error("output buffer too small: need " + std::to_string(text.size() + 1) + " bytes");
        return DCN_ERROR_INVALID;
    }
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    return DCN_OK;
}

dcn::nn::DomainId parse_domain(char c) {
    const auto d = dcn::nn::domain_from_char(c);
    if (!d) throw dcn::ConfigError(std::string("unknown domain '") + c + "' (use r, d or s)");
    return *d;
}

} // namespace

struct dcn_model_s {
    std::unique_ptr<dcn::train::InferenceModel> impl;
};

extern "C" {

const char* dcn_last_error(void) { return t_last_error.c_str(); }

const char* dcn_version(void) { return "1.0.0"; }

dcn_status dcn_train(const char* config_path, const char* mode_override, int64_t seed_override,
                     const char* resume_ckpt, const char* run_dir) {
    if (!config_path || !run_dir) {
        set_error("config_path and run_dir are required");
        return DCN_ERROR_INVALID;
    }
    return run_guarded([&] {
        dcn::train::TrainConfig cfg = dcn::train::TrainConfig::from_toml_file(config_path);
        if (mode_override) {
            const auto mode = dcn::nn::condition_mode_from_string(mode_override);
            if (!mode)
                throw dcn::ConfigError(std::string("unknown mode '") + mode_override +
                                       "' (use dcn or dcn0)");
            cfg.net.mode = *mode;
        }
        if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
        dcn::train::run_training(cfg, run_dir, resume_ckpt ? resume_ckpt : "");
    });
}

dcn_status dcn_model_open(const char* checkpoint_path, dcn_model** out_model) {
    if (!checkpoint_path || !out_model) {
        set_error("checkpoint_path and out_model are required");
        return DCN_ERROR_INVALID;
    }
    *out_model = nullptr;
    return run_guarded([&] {
        auto handle = std::make_unique<dcn_model_s>();
        handle->impl = dcn::train::InferenceModel::open(checkpoint_path);
        *out_model = handle.release();
    });
}

void dcn_model_close(dcn_model* model) { delete model; }

dcn_status dcn_model_info(const dcn_model* model, char* buffer, size_t buffer_size) {
    if (!model) {
        set_error("model handle is null");
        return DCN_ERROR_INVALID;
    }
    nlohmann::json j;
    j["mode"] = condition_mode_name(model->impl->cfg.net.mode);
    j["n_domains"] = model->impl->cfg.net.n_domains;
    j["iteration"] = model->impl->iteration;
    j["image_size"] = model->impl->cfg.net.image_size;
    j["n_classes"] = model->impl->palette.size();
    return fill_buffer(j.dump(), buffer, buffer_size);
}

dcn_status dcn_translate(dcn_model* model, const char* input_path, char source_domain,
                         char target_domain, const char* output_path, int snap_output) {
    if (!model || !input_path || !output_path) {
        set_error("model, input_path and output_path are required");
        return DCN_ERROR_INVALID;
    }
    return run_guarded([&] {
        dcn::train::InferenceModel& im = *model->impl;
        const dcn::nn::DomainId src = parse_domain(source_domain);
        const dcn::nn::DomainId tgt = parse_domain(target_domain);

        const dcn::PngImage png = dcn::read_png(input_path);
        dcn::codec::RgbImage input;
        if (png.is_gray16) {
            if (src != dcn::nn::DomainId::D)
                throw dcn::ConfigError("16-bit grayscale input is only valid for source domain d");
            input = dcn::codec::encode_depth(
                dcn::codec::depth_from_png16(png.gray16, im.cfg.near, im.cfg.far), im.colormap);
        } else {
            input = dcn::codec::rgb_from_png(png.rgb8);
        }

        dcn::codec::RgbImage out = im.translate_image(input, src, tgt);
        if (snap_output) {
            if (tgt == dcn::nn::DomainId::S)
                out = dcn::codec::encode_semantic(dcn::codec::decode_semantic_nn(out, im.palette),
                                                  im.palette);
            else if (tgt == dcn::nn::DomainId::D)
                out = dcn::codec::encode_depth(dcn::codec::decode_depth(out, im.colormap),
                                               im.colormap);
        }
        dcn::write_png_rgb8(output_path, dcn::codec::rgb_to_png(out));
    });
}

dcn_status dcn_evaluate(dcn_model* model, const char* split_manifest_path, const char* data_root,
                        const char* report_json_path, const char* report_table_path,
                        const char* dump_dir) {
    if (!model || !split_manifest_path || !data_root || !report_json_path) {
        set_error("model, split manifest, data_root and report_json_path are required");
        return DCN_ERROR_INVALID;
    }
    return run_guarded([&] {
        dcn::train::InferenceModel& im = *model->impl;
        dcn::data::IngestOptions opts;
        opts.near = im.cfg.near;
        opts.far = im.cfg.far;
        opts.palette = im.palette;
        const dcn::data::IngestResult ingest = dcn::data::ingest_folder(data_root, opts);
        const dcn::data::Splits splits = dcn::data::load_splits_json(split_manifest_path);
        if (splits.test_ds.empty()) throw dcn::ConfigError("split manifest has an empty test set");

        std::vector<dcn::data::PairedSample> test;
        for (const auto& sample : ingest.samples)
            if (std::find(splits.test_ds.begin(), splits.test_ds.end(), sample.id) !=
                splits.test_ds.end()) {
                dcn::data::PairedSample t = sample;
                t.rgb.reset();
                t.split = dcn::data::SplitTag::TestDS;
                test.push_back(std::move(t));
            }
        if (test.empty()) throw dcn::ConfigError("no test samples found under " + std::string(data_root));

        dcn::metrics::EvalOptions eopts;
        eopts.model_size = im.cfg.net.image_size;
        eopts.colormap = &im.colormap;
        if (dump_dir) eopts.dump_dir = dump_dir;

        const auto translate = [&](const dcn::codec::DepthMap& depth) {
            const dcn::codec::RgbImage depth_img = dcn::codec::encode_depth(depth, im.colormap);
            return im.translate_image(depth_img, dcn::nn::DomainId::D, dcn::nn::DomainId::S);
        };
        const dcn::metrics::EvalReport report =
            dcn::metrics::evaluate_d2s(translate, test, im.palette, eopts);

        dcn::metrics::write_report_json(report_json_path, report, im.palette.names);
        if (report_table_path) {
            std::ofstream table(report_table_path);
            if (!table) throw dcn::IoError("cannot create report table: " +
                                           std::string(report_table_path));
            table << dcn::metrics::format_report_table(report, im.palette.names);
        }
    });
}

dcn_status dcn_inspect_params(const char* config_path, char* buffer, size_t buffer_size) {
    if (!config_path) {
        set_error("config_path is required");
        return DCN_ERROR_INVALID;
    }
    std::string text;
    const dcn_status st = run_guarded([&] {
        dcn::train::TrainConfig cfg = dcn::train::TrainConfig::from_toml_file(config_path);
        cfg.net.validate();

        nlohmann::json j;
        int64_t totals[2] = {0, 0};
        for (const auto mode :
             {dcn::nn::ConditionMode::OutputOnly, dcn::nn::ConditionMode::InputOutput}) {
            dcn::nn::NetworkConfig net = cfg.net;
            net.mode = mode;
            const auto model = dcn::nn::Model::build(net, cfg.seed);
            const auto counts = dcn::nn::count_params(*model);
            nlohmann::json m;
            m["encoder"] = counts.encoder;
            m["decoder"] = counts.decoder;
            m["generator_total"] = counts.generator;
            m["discriminators"] = counts.discriminators;
            m["classifier"] = counts.classifier;
            m["cbn_table_params"] = counts.cbn_tables;
            j[condition_mode_name(mode)] = m;
            totals[mode == dcn::nn::ConditionMode::OutputOnly ? 0 : 1] = counts.generator;
        }
        const int n = cfg.net.n_domains;
        int64_t sum_c = 0;
        for (const int c : dcn::nn::decoder_norm_channels(cfg.net)) sum_c += c;
        j["delta"] = totals[1] - totals[0];
        j["delta_closed_form"] = int64_t(n) * n * 2 * sum_c - int64_t(n) * 2 * sum_c;
        text = j.dump(2);
    });
    if (st != DCN_OK) return st;
    return fill_buffer(text, buffer, buffer_size);
}

dcn_status dcn_make_splits(const char* data_root, int n_rd, int n_rs, int n_test, int64_t seed,
                           const char* out_manifest_path) {
    if (!data_root || !out_manifest_path) {
        set_error("data_root and out_manifest_path are required");
        return DCN_ERROR_INVALID;
    }
    return run_guarded([&] {
        // Split ids come from the depth folder: every usable sample has one.
        std::vector<std::string> ids;
        const std::filesystem::path depth_dir = std::filesystem::path(data_root) / "depth";
        if (!std::filesystem::is_directory(depth_dir))
            throw dcn::IoError("missing dataset directory: " + depth_dir.string());
        for (const auto& entry : std::filesystem::directory_iterator(depth_dir))
            if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
        std::sort(ids.begin(), ids.end());

        dcn::data::SplitSpec spec;
        spec.n_rd = n_rd;
        spec.n_rs = n_rs;
        spec.n_test = n_test;
        spec.seed = static_cast<uint64_t>(seed);
        dcn::data::save_splits_json(out_manifest_path,
                                    dcn::data::make_zero_pair_splits(std::move(ids), spec));
    });
}

dcn_status dcn_gen_toy(const char* out_dir, int count, int image_size, int n_classes,
                       int64_t seed) {
    if (!out_dir) {
        set_error("out_dir is required");
        return DCN_ERROR_INVALID;
    }
    return run_guarded([&] {
        dcn::data::write_toy_dataset(out_dir, count, image_size, n_classes,
                                     static_cast<uint64_t>(seed));
    });
}

} // extern "C"
