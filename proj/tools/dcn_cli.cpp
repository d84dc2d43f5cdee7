// Command-line front end. Links only the public C API of libdcn.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dcn/dcn.h>

namespace {

// Exit-code contract: 0 success, 2 usage/config, 3 numerical abort.
int exit_code(dcn_status st) {
    switch (st) {
        case DCN_OK: return 0;
        case DCN_ERROR_NUMERIC: return 3;
        default: return 2;
    }
}

int finish(dcn_status st) {
    if (st != DCN_OK) std::fprintf(stderr, "error: %s\n", dcn_last_error());
    return exit_code(st);
}

struct ModelHandle {
    dcn_model* m = nullptr;
    ~ModelHandle() { dcn_model_close(m); }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-pair image translation with domain conditional normalization"};
    app.require_subcommand(1);

    // train
    std::string train_config, train_mode, train_resume, train_run_dir = "runs/run";
    int64_t train_seed = -1;
    auto* train = app.add_subcommand("train", "run the training schedule from a TOML config");
    train->add_option("--config", train_config, "TOML config file")->required();
    train->add_option("--mode", train_mode, "override [model] mode: dcn or dcn0");
    train->add_option("--seed", train_seed, "override [train] seed");
    train->add_option("--resume", train_resume, "checkpoint to continue from");
    train->add_option("--run-dir", train_run_dir, "output directory");

    // translate
    std::string tr_ckpt, tr_input, tr_source, tr_target, tr_out;
    bool tr_snap = false;
    auto* translate = app.add_subcommand("translate", "translate one image between domains");
    translate->add_option("--ckpt", tr_ckpt, "checkpoint file")->required();
    translate->add_option("--input", tr_input, "input PNG")->required();
    translate->add_option("--source", tr_source, "source domain: r, d or s")->required();
    translate->add_option("--target", tr_target, "target domain: r, d or s")->required();
    translate->add_option("--out", tr_out, "output PNG")->required();
    translate->add_flag("--snap", tr_snap, "snap the output to exact palette/colormap colors");

    // evaluate
    std::string ev_ckpt, ev_split, ev_data, ev_out, ev_dump;
    bool ev_dump_images = false;
    auto* evaluate = app.add_subcommand("evaluate", "depth -> semantics evaluation on the test split");
    evaluate->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
    evaluate->add_option("--split", ev_split, "split manifest JSON")->required();
    evaluate->add_option("--data", ev_data, "dataset root folder")->required();
    evaluate->add_option("--out", ev_out, "report JSON path")->required();
    evaluate->add_flag("--dump-images", ev_dump_images, "write per-sample triptych PNGs");
    evaluate->add_option("--dump-dir", ev_dump, "triptych directory (default: <out>.images)");

    // inspect-params
    std::string ip_config;
    auto* inspect = app.add_subcommand("inspect-params", "parameter accounting for a config");
    inspect->add_option("--config", ip_config, "TOML config file")->required();

    // make-splits
    std::string ms_data, ms_out;
    int ms_rd = 0, ms_rs = 0, ms_test = 0;
    int64_t ms_seed = 0;
    auto* splits = app.add_subcommand("make-splits", "write a disjoint zero-pair split manifest");
    splits->add_option("--data", ms_data, "dataset root folder")->required();
    splits->add_option("--n-rd", ms_rd, "r-d pair count")->required();
    splits->add_option("--n-rs", ms_rs, "r-s pair count")->required();
    splits->add_option("--n-test", ms_test, "test pair count")->required();
    splits->add_option("--seed", ms_seed, "shuffle seed");
    splits->add_option("--out", ms_out, "manifest path")->required();

    // gen-toy
    std::string gt_out;
    int gt_count = 128, gt_size = 64, gt_classes = 5;
    int64_t gt_seed = 7;
    auto* gen = app.add_subcommand("gen-toy", "generate a procedural toy dataset");
    gen->add_option("--out", gt_out, "output directory")->required();
    gen->add_option("--count", gt_count, "number of samples");
    gen->add_option("--size", gt_size, "image size");
    gen->add_option("--classes", gt_classes, "class count (2..19)");
    gen->add_option("--seed", gt_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (train->parsed()) {
        return finish(dcn_train(train_config.c_str(),
                                train_mode.empty() ? nullptr : train_mode.c_str(), train_seed,
                                train_resume.empty() ? nullptr : train_resume.c_str(),
                                train_run_dir.c_str()));
    }

    if (translate->parsed()) {
        if (tr_source.size() != 1 || tr_target.size() != 1) {
            std::fprintf(stderr, "error: domains are single letters: r, d or s\n");
            return 2;
        }
        ModelHandle model;
        dcn_status st = dcn_model_open(tr_ckpt.c_str(), &model.m);
        if (st != DCN_OK) return finish(st);
        st = dcn_translate(model.m, tr_input.c_str(), tr_source[0], tr_target[0], tr_out.c_str(),
                           tr_snap ? 1 : 0);
        return finish(st);
    }

    if (evaluate->parsed()) {
        ModelHandle model;
        dcn_status st = dcn_model_open(ev_ckpt.c_str(), &model.m);
        if (st != DCN_OK) return finish(st);
        const std::string table_path = ev_out + ".txt";
        std::string dump_dir;
        if (ev_dump_images) dump_dir = ev_dump.empty() ? ev_out + ".images" : ev_dump;
        st = dcn_evaluate(model.m, ev_split.c_str(), ev_data.c_str(), ev_out.c_str(),
                          table_path.c_str(), dump_dir.empty() ? nullptr : dump_dir.c_str());
        if (st == DCN_OK) {
            // Echo the table for interactive runs.
            if (std::FILE* f = std::fopen(table_path.c_str(), "rb")) {
                char buf[4096];
                size_t n;
                while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) std::fwrite(buf, 1, n, stdout);
                std::fclose(f);
            }
        }
        return finish(st);
    }

    if (inspect->parsed()) {
        std::vector<char> buf(1 << 16);
        const dcn_status st = dcn_inspect_params(ip_config.c_str(), buf.data(), buf.size());
        if (st == DCN_OK) std::printf("%s\n", buf.data());
        return finish(st);
    }

    if (splits->parsed()) {
        return finish(dcn_make_splits(ms_data.c_str(), ms_rd, ms_rs, ms_test, ms_seed,
                                      ms_out.c_str()));
    }

    if (gen->parsed()) {
        return finish(dcn_gen_toy(gt_out.c_str(), gt_count, gt_size, gt_classes, gt_seed));
    }

    return 2;
}
