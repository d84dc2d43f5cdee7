#include "train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "model/checkpoint.hpp"

namespace fs = std::filesystem;

namespace dcn::train {

using nn::DomainId;

PairSet select_pair_set(int64_t iter) { return iter % 2 == 0 ? PairSet::RD : PairSet::RS; }

double lr_at(int64_t iter, const loss::HyperParams& hp) {
    if (iter < 0 || iter > hp.total_iters)
        throw InputError("iteration " + std::to_string(iter) + " outside [0, total_iters]");
    const int64_t half = hp.total_iters / 2;
    if (iter < half) return hp.base_lr;
    return hp.base_lr * (1.0 - double(iter - half) / double(half));
}

// --- data preparation ------------------------------------------------------------

namespace {

Tensor image_to_batch1(const codec::RgbImage& img) {
    const codec::RgbImage net = codec::to_network_range(img);
    Tensor t({1, 3, net.height, net.width});
    codec::copy_to_tensor(net, t, 0);
    return t;
}

Tensor encode_rgb(const codec::RgbImage& rgb, int size) {
    return image_to_batch1(data::resize_area(rgb, size, size));
}

Tensor encode_depth_input(const codec::DepthMap& d, int size, const codec::Colormap& cm) {
    return image_to_batch1(codec::encode_depth(data::resize_area(d, size, size), cm));
}

Tensor encode_sem_input(const codec::LabelMap& m, int size, const codec::Palette& p) {
    return image_to_batch1(codec::encode_semantic(data::resize_nn(m, size, size), p));
}

Tensor concat_batches(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 4 || b.ndim() != 4 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2) ||
        a.dim(3) != b.dim(3))
        throw InputError("cannot concatenate mismatched batches");
    Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2), a.dim(3)});
    std::copy(a.data(), a.data() + a.numel(), out.data());
    std::copy(b.data(), b.data() + b.numel(), out.data() + a.numel());
    return out;
}

Tensor stack_singles(const std::vector<const Tensor*>& singles) {
    const Tensor& first = *singles.front();
    Tensor out({int(singles.size()), first.dim(1), first.dim(2), first.dim(3)});
    for (size_t i = 0; i < singles.size(); ++i) {
        const Tensor& s = *singles[i];
        std::copy(s.data(), s.data() + s.numel(), out.data() + int64_t(i) * s.numel());
    }
    return out;
}

std::vector<nn::Param*> collect_params(const nn::ParamStore& store,
                                       std::initializer_list<const char*> prefixes) {
    std::vector<nn::Param*> out;
    for (const auto& p : store.params()) {
        if (!p->trainable) continue;
        for (const char* prefix : prefixes)
            if (p->name.starts_with(prefix)) {
                out.push_back(p.get());
                break;
            }
    }
    return out;
}

} // namespace

TrainerData build_trainer_data(const std::vector<data::PairedSample>& samples,
                               const data::Splits& splits, const TrainConfig& cfg,
                               const codec::Palette& palette, const codec::Colormap& colormap) {
    const int size = cfg.net.image_size;

    std::map<std::string, const data::PairedSample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;
    auto lookup = [&](const std::string& id) -> const data::PairedSample& {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ConfigError("split references unknown sample id: " + id);
        return *it->second;
    };

    TrainerData out;
    for (const std::string& id : splits.rd) {
        const data::PairedSample& s = lookup(id);
        if (!s.rgb || !s.depth) throw ConfigError("sample " + id + " lacks rgb+depth for the r-d split");
        TrainSample t;
        t.id = id;
        t.rgb = encode_rgb(*s.rgb, size);
        t.depth = encode_depth_input(*s.depth, size, colormap);
        out.rd.push_back(std::move(t));
    }
    for (const std::string& id : splits.rs) {
        const data::PairedSample& s = lookup(id);
        if (!s.rgb || !s.semantics)
            throw ConfigError("sample " + id + " lacks rgb+semantics for the r-s split");
        TrainSample t;
        t.id = id;
        t.rgb = encode_rgb(*s.rgb, size);
        t.sem = encode_sem_input(*s.semantics, size, palette);
        out.rs.push_back(std::move(t));
    }
    for (const std::string& id : splits.test_ds) {
        data::PairedSample s = lookup(id);
        s.rgb.reset(); // the test split never exposes the anchor domain
        s.split = data::SplitTag::TestDS;
        out.test.push_back(std::move(s));
    }
    return out;
}

TrainerData load_trainer_data(const TrainConfig& cfg, const codec::Palette& palette,
                              const codec::Colormap& colormap) {
    if (cfg.data_root.empty()) throw ConfigError("config is missing [data] root");
    if (cfg.split_manifest.empty()) throw ConfigError("config is missing [data] split_manifest");
    data::IngestOptions opts;
    opts.near = cfg.near;
    opts.far = cfg.far;
    opts.palette = palette;
    const data::IngestResult ingest = data::ingest_folder(cfg.data_root, opts);
    const data::Splits splits = data::load_splits_json(cfg.split_manifest);
    return build_trainer_data(ingest.samples, splits, cfg, palette, colormap);
}

// --- state ----------------------------------------------------------------------

std::unique_ptr<TrainState> TrainState::create(const TrainConfig& cfg, TrainerData data) {
    return create(cfg, std::move(data), cfg.resolve_palette(), cfg.resolve_colormap());
}

std::unique_ptr<TrainState> TrainState::create(const TrainConfig& cfg, TrainerData data,
                                               codec::Palette palette, codec::Colormap colormap) {
    cfg.validate();
    auto st = std::make_unique<TrainState>();
    st->cfg = cfg;
    st->palette = std::move(palette);
    st->colormap = std::move(colormap);
    st->model = nn::Model::build(cfg.net, cfg.seed);
    st->data = std::move(data);

    const nn::ParamStore& store = st->model->store;
    st->opt_g = Adam(collect_params(store, {"encoder.", "decoder."}));
    st->opt_d = Adam(collect_params(store, {"disc."}));
    if (cfg.net.mode == nn::ConditionMode::OutputOnly)
        st->opt_inv = Adam(collect_params(store, {"classifier.", "encoder."}));
    else
        st->opt_pseudo = Adam(collect_params(store, {"decoder."}));

    const int bs = cfg.hp.batch_size;
    if (!st->data.rd.empty() && int(st->data.rd.size()) >= bs)
        st->it_rd = data::BatchIterator(int(st->data.rd.size()), bs, cfg.seed, "batch-rd");
    if (!st->data.rs.empty() && int(st->data.rs.size()) >= bs)
        st->it_rs = data::BatchIterator(int(st->data.rs.size()), bs, cfg.seed, "batch-rs");
    if (cfg.net.mode == nn::ConditionMode::InputOutput && !st->data.rd.empty() &&
        int(st->data.rd.size()) >= bs)
        st->it_pseudo = data::BatchIterator(int(st->data.rd.size()), bs, cfg.seed, "batch-pseudo");
    return st;
}

Tensor TrainState::batch_tensor(PairSet set, std::span<const int> indices,
                                DomainId domain) const {
    const std::vector<TrainSample>& split = set == PairSet::RD ? data.rd : data.rs;
    std::vector<const Tensor*> singles;
    for (const int idx : indices) {
        const TrainSample& s = split.at(size_t(idx));
        const Tensor* t = nullptr;
        switch (domain) {
            case DomainId::R: t = &s.rgb; break;
            case DomainId::D: t = &s.depth; break;
            case DomainId::S: t = &s.sem; break;
        }
        if (!t || t->empty())
            throw ConfigError("sample " + s.id + " does not carry the requested domain");
        singles.push_back(t);
    }
    return stack_singles(singles);
}

// --- supervised step --------------------------------------------------------------

loss::LossReport train_step_supervised(TrainState& st, const Tensor& a, const Tensor& b,
                                       PairSet set, double lr) {
    nn::Model& m = *st.model;
    const loss::HyperParams& hp = st.cfg.hp;
    const DomainId dom_a = DomainId::R;
    const DomainId dom_b = set == PairSet::RD ? DomainId::D : DomainId::S;

    loss::LossReport rep;

    // Critic update on real batches vs freshly generated (detached) fakes.
    m.store.zero_grad("disc.");
    {
        const Tensor fake_b = m.translate(a, dom_a, dom_b, /*training=*/true);
        const Tensor fake_a = m.translate(b, dom_b, dom_a, true);
        const struct {
            DomainId dom;
            const Tensor* real;
            const Tensor* fake;
        } sides[2] = {{dom_b, &b, &fake_b}, {dom_a, &a, &fake_a}};
        for (const auto& side : sides) {
            nn::PatchDiscriminator& disc = m.disc(side.dom);
            nn::CtxPtr ctx_real, ctx_fake;
            const Tensor score_real = disc.forward(*side.real, true, &ctx_real);
            const Tensor score_fake = disc.forward(*side.fake, true, &ctx_fake);
            rep.gan_d += loss::ralsgan_d(score_real, score_fake);
            Tensor g_real(score_real.shape()), g_fake(score_fake.shape());
            loss::ralsgan_d_grad(score_real, score_fake, 1.0, g_real, g_fake);
            disc.backward(g_fake, *ctx_fake);
            disc.backward(g_real, *ctx_real);
        }
        st.opt_d.step(lr);
    }

    // Generator update: adversarial + reconstruction for both directions,
    // identity terms for both domains. Each decoder branch has its own
    // context; the encoder backward runs once per direction with the summed
    // latent gradient.
    m.store.zero_grad("encoder.");
    m.store.zero_grad("decoder.");
    const struct {
        DomainId src, tgt;
        const Tensor *x, *y;
    } directions[2] = {{dom_a, dom_b, &a, &b}, {dom_b, dom_a, &b, &a}};
    for (const auto& dir : directions) {
        nn::CtxPtr enc_ctx;
        const Tensor z = m.encoder->forward(*dir.x, true, &enc_ctx);

        nn::CtxPtr dec_ctx;
        const Tensor fake = m.decoder->forward(z, true, m.registry.index(dir.src, dir.tgt), &dec_ctx);

        nn::PatchDiscriminator& disc = m.disc(dir.tgt);
        const Tensor score_real = disc.forward(*dir.y, true, nullptr);
        nn::CtxPtr disc_ctx;
        const Tensor score_fake = disc.forward(fake, true, &disc_ctx);
        rep.gan_g += loss::ralsgan_g(score_real, score_fake);
        Tensor g_real(score_real.shape()), g_fake(score_fake.shape());
        loss::ralsgan_g_grad(score_real, score_fake, 1.0, g_real, g_fake);
        // Only the fake branch reaches the generator; the real branch ends in
        // critic parameters, which this step does not update.
        Tensor d_fake = disc.backward(g_fake, *disc_ctx);

        const double lambda_tgt = hp.lambda_dom(dir.tgt);
        rep.l1 += loss::l1_recon(fake, *dir.y, lambda_tgt);
        loss::l1_recon_grad(fake, *dir.y, lambda_tgt, hp.lambda_l1, d_fake);
        Tensor dz = m.decoder->backward(d_fake, *dec_ctx);

        nn::CtxPtr idt_ctx;
        const Tensor idt = m.decoder->forward(z, true, m.registry.index(dir.src, dir.src), &idt_ctx);
        const double lambda_src = hp.lambda_dom(dir.src);
        rep.idt += loss::identity_loss(idt, *dir.x, lambda_src);
        Tensor d_idt(idt.shape());
        loss::l1_recon_grad(idt, *dir.x, lambda_src, hp.lambda_idt, d_idt);
        dz += m.decoder->backward(d_idt, *idt_ctx);

        m.encoder->backward(dz, *enc_ctx);
    }
    st.opt_g.step(lr);

    rep.total = loss::total_loss(rep, hp);
    return rep;
}

// --- invariance step -----------------------------------------------------------------

double train_step_invariance(TrainState& st, const Tensor& images, std::span<const int> labels,
                             double lr) {
    nn::Model& m = *st.model;
    if (m.cfg.mode != nn::ConditionMode::OutputOnly || !m.classifier)
        throw ConfigError("invariance updates require the output-conditioned (dcn0) mode");
    const float lambda_cls = float(st.cfg.hp.lambda_cls);

    m.store.zero_grad("classifier.");
    m.store.zero_grad("encoder.");

    nn::CtxPtr enc_ctx;
    const Tensor z = m.encoder->forward(images, true, &enc_ctx);
    const Tensor z_rev = nn::grad_reverse(z, lambda_cls);
    nn::CtxPtr cls_ctx;
    const Tensor logits = m.classifier->forward(z_rev, true, &cls_ctx);
    const double value = loss::domain_cls_loss(logits, labels);

    Tensor g_logits(logits.shape());
    loss::domain_cls_grad(logits, labels, 1.0, g_logits);
    const Tensor dz_classifier = m.classifier->backward(g_logits, *cls_ctx);
    const Tensor dz_encoder = nn::grad_reverse_backward(dz_classifier, lambda_cls);
    m.encoder->backward(dz_encoder, *enc_ctx);

    st.opt_inv.step(lr);
    return value;
}

// --- pseudo-pair step ---------------------------------------------------------------------

FreezeMask freeze_mask_ds(const TrainState& st) {
    const nn::Model& m = *st.model;
    if (m.cfg.mode != nn::ConditionMode::InputOutput)
        throw ConfigError("the d-s freeze mask requires the pair-conditioned (dcn) mode");
    const int idx = m.registry.index(DomainId::D, DomainId::S);

    FreezeMask mask;
    for (const auto& p : m.store.params()) {
        if (!p->trainable || !p->name.starts_with("decoder.")) continue;
        const bool is_table = p->value.ndim() == 2 &&
                              (p->name.ends_with(".gamma") || p->name.ends_with(".beta"));
        if (!is_table) continue;
        const int64_t channels = p->value.dim(1);
        mask.updatable[p.get()] = {idx * channels, (idx + 1) * channels};
    }
    return mask;
}

FreezeMask full_decoder_mask(const TrainState& st) {
    FreezeMask mask;
    for (const auto& p : st.model->store.params())
        if (p->trainable && p->name.starts_with("decoder."))
            mask.updatable[p.get()] = {0, p->value.numel()};
    return mask;
}

double train_step_pseudo(TrainState& st, const Tensor& r, const Tensor& d, double lr) {
    nn::Model& m = *st.model;
    if (m.cfg.mode != nn::ConditionMode::InputOutput)
        throw ConfigError("pseudo-pair updates require the pair-conditioned (dcn) mode");

    // Reference branch r -> s is a fixed target: no contexts, no gradients.
    const Tensor sem_from_rgb = m.translate(r, DomainId::R, DomainId::S, /*training=*/true);

    // Trained branch d -> s. The encoder is frozen here, so only the decoder
    // needs a backward pass.
    const Tensor z_d = m.encoder->forward(d, true, nullptr);
    nn::CtxPtr dec_ctx;
    const Tensor sem_from_depth =
        m.decoder->forward(z_d, true, m.registry.index(DomainId::D, DomainId::S), &dec_ctx);

    const double value = loss::pseudo_pair_loss(sem_from_rgb, sem_from_depth);

    Tensor g(sem_from_depth.shape());
    loss::pseudo_pair_grad(sem_from_rgb, sem_from_depth, 1.0, g);
    m.store.zero_grad("decoder.");
    m.decoder->backward(g, *dec_ctx);

    const FreezeMask mask = st.cfg.pseudo_full_decoder ? full_decoder_mask(st) : freeze_mask_ds(st);
    st.opt_pseudo.step_masked(lr, mask);
    return value;
}

// --- full run ------------------------------------------------------------------------------

namespace {

void check_finite(const loss::LossReport& rep, int64_t iteration) {
    const double parts[] = {rep.gan_g, rep.gan_d, rep.l1, rep.idt, rep.cls, rep.pseudo, rep.total};
    for (const double v : parts)
        if (!std::isfinite(v)) {
            char buf[256];
            std::snprintf(buf, sizeof(buf),
                          "non-finite loss at iteration %lld "
                          "(gan_g=%g gan_d=%g l1=%g idt=%g cls=%g pseudo=%g)",
                          static_cast<long long>(iteration), rep.gan_g, rep.gan_d, rep.l1, rep.idt,
                          rep.cls, rep.pseudo);
            throw NumericError(buf);
        }
}

} // namespace

RunResult run_training(const TrainConfig& cfg, const std::string& run_dir,
                       const std::string& resume_ckpt) {
    cfg.validate();
    const codec::Palette palette = cfg.resolve_palette();
    const codec::Colormap colormap = cfg.resolve_colormap();
    TrainerData dataset = load_trainer_data(cfg, palette, colormap);
    if (dataset.rd.empty() || dataset.rs.empty())
        throw ConfigError("training needs nonempty r-d and r-s splits");

    std::unique_ptr<TrainState> st;
    bool resumed = false;
    if (!resume_ckpt.empty()) {
        st = load_state(resume_ckpt, std::move(dataset));
        if (st->cfg.config_hash() != cfg.config_hash())
            throw ConfigError("checkpoint configuration differs from the supplied config");
        resumed = true;
    } else {
        st = TrainState::create(cfg, std::move(dataset));
    }

    std::error_code ec;
    fs::create_directories(run_dir, ec);
    {
        std::ofstream cfg_out(fs::path(run_dir) / "config.toml");
        cfg_out << st->cfg.to_toml();
    }

    const fs::path log_path = fs::path(run_dir) / st->cfg.log_csv;
    const bool append = resumed && fs::exists(log_path);
    std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
    if (!log) throw IoError("cannot open training log: " + log_path.string());
    if (!append) log << loss::LossReport::csv_header() << '\n';

    const loss::HyperParams& hp = st->cfg.hp;
    const int64_t ckpt_every = st->cfg.effective_checkpoint_every();
    const bool dcn0 = st->cfg.net.mode == nn::ConditionMode::OutputOnly;

    while (st->iteration < hp.total_iters) {
        const int64_t i = st->iteration;
        const double lr = lr_at(i, hp);
        const PairSet set = select_pair_set(i);
        const DomainId dom_b = set == PairSet::RD ? DomainId::D : DomainId::S;

        const std::vector<int> batch = (set == PairSet::RD ? st->it_rd : st->it_rs).next();
        const Tensor batch_a = st->batch_tensor(set, batch, DomainId::R);
        const Tensor batch_b = st->batch_tensor(set, batch, dom_b);

        loss::LossReport rep = train_step_supervised(*st, batch_a, batch_b, set, lr);

        if (dcn0) {
            const Tensor both = concat_batches(batch_a, batch_b);
            std::vector<int> labels(size_t(both.dim(0)), int(DomainId::R));
            for (int n = batch_a.dim(0); n < both.dim(0); ++n)
                labels[size_t(n)] = int(dom_b);
            rep.cls = train_step_invariance(*st, both, labels, lr);
        } else if (st->cfg.pseudo_every > 0 && i % st->cfg.pseudo_every == 0) {
            const std::vector<int> pseudo_batch = st->it_pseudo.next();
            const Tensor r = st->batch_tensor(PairSet::RD, pseudo_batch, DomainId::R);
            const Tensor d = st->batch_tensor(PairSet::RD, pseudo_batch, DomainId::D);
            rep.pseudo = train_step_pseudo(*st, r, d, lr);
        }

        rep.total = loss::total_loss(rep, hp);
        check_finite(rep, i);
        log << rep.csv_row(i, set == PairSet::RD ? "rd" : "rs") << '\n';

        ++st->iteration;
        if (st->iteration % ckpt_every == 0 && st->iteration < hp.total_iters)
            save_state(*st, (fs::path(run_dir) / ("ckpt_" + std::to_string(st->iteration) + ".dcn")).string());
    }

    const std::string final_path = (fs::path(run_dir) / "final.dcn").string();
    save_state(*st, final_path);
    log.flush();

    RunResult out;
    out.final_checkpoint = final_path;
    out.log_path = log_path.string();
    out.iterations = st->iteration;
    return out;
}

// --- checkpointing -----------------------------------------------------------------------------

namespace {

nlohmann::json colors_json(const std::vector<codec::Rgb>& colors) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : colors) j.push_back({c[0], c[1], c[2]});
    return j;
}

std::vector<codec::Rgb> colors_from_json(const nlohmann::json& j) {
    std::vector<codec::Rgb> out;
    for (const auto& e : j) out.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
    return out;
}

void append_adam_arrays(std::vector<nn::NamedArrayView>& arrays, const Adam& opt,
                        const std::string& group) {
    for (const Adam::Slot& s : opt.slots()) {
        arrays.push_back({"adam." + group + ".m." + s.param->name, &s.m});
        arrays.push_back({"adam." + group + ".v." + s.param->name, &s.v});
    }
}

void restore_adam_arrays(Adam& opt, const std::map<std::string, Tensor>& arrays,
                         const std::string& group, int64_t t) {
    opt.set_t(t);
    for (Adam::Slot& s : opt.slots()) {
        const auto m = arrays.find("adam." + group + ".m." + s.param->name);
        const auto v = arrays.find("adam." + group + ".v." + s.param->name);
        if (m == arrays.end() || v == arrays.end())
            throw IoError("checkpoint is missing optimizer state for " + s.param->name);
        if (!m->second.same_shape(s.m) || !v->second.same_shape(s.v))
            throw IoError("checkpoint optimizer state shape mismatch for " + s.param->name);
        s.m = m->second;
        s.v = v->second;
    }
}

std::string hash_hex(uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

void save_state(const TrainState& st, const std::string& path) {
    nlohmann::json manifest;
    manifest["format"] = 1;
    manifest["kind"] = "train-state";
    manifest["mode"] = condition_mode_name(st.cfg.net.mode);
    manifest["n_domains"] = st.cfg.net.n_domains;
    manifest["iteration"] = st.iteration;
    manifest["config_hash"] = hash_hex(st.cfg.config_hash());
    manifest["config_toml"] = st.cfg.to_toml();
    manifest["counters"] = {{"rd", st.it_rd.consumed()},
                            {"rs", st.it_rs.consumed()},
                            {"pseudo", st.it_pseudo.consumed()}};
    manifest["adam_t"] = {{"g", st.opt_g.t()},
                          {"d", st.opt_d.t()},
                          {"inv", st.opt_inv.t()},
                          {"pseudo", st.opt_pseudo.t()}};
    manifest["palette"] = colors_json(st.palette.colors);
    manifest["palette_names"] = st.palette.names;
    manifest["colormap"] = colors_json(st.colormap.stops);

    std::vector<nn::NamedArrayView> arrays;
    for (const auto& p : st.model->store.params()) arrays.push_back({p->name, &p->value});
    append_adam_arrays(arrays, st.opt_g, "g");
    append_adam_arrays(arrays, st.opt_d, "d");
    append_adam_arrays(arrays, st.opt_inv, "inv");
    append_adam_arrays(arrays, st.opt_pseudo, "pseudo");

    nn::save_checkpoint(path, manifest, arrays);
}

namespace {

TrainConfig config_from_manifest(const nlohmann::json& manifest) {
    return TrainConfig::from_toml(parse_toml(manifest.at("config_toml").get<std::string>()));
}

void load_palette_tables(const nlohmann::json& manifest, codec::Palette& palette,
                         codec::Colormap& colormap) {
    palette.colors = colors_from_json(manifest.at("palette"));
    palette.names = manifest.value("palette_names", std::vector<std::string>{});
    colormap.stops = colors_from_json(manifest.at("colormap"));
}

} // namespace

std::unique_ptr<TrainState> load_state(const std::string& path, TrainerData data) {
    const nn::LoadedCheckpoint ckpt = nn::load_checkpoint(path);
    const TrainConfig cfg = config_from_manifest(ckpt.manifest);

    codec::Palette palette;
    codec::Colormap colormap;
    load_palette_tables(ckpt.manifest, palette, colormap);
    auto st = TrainState::create(cfg, std::move(data), std::move(palette), std::move(colormap));

    for (const auto& p : st->model->store.params()) {
        const auto it = ckpt.arrays.find(p->name);
        if (it == ckpt.arrays.end()) throw IoError("checkpoint is missing parameter " + p->name);
        if (!it->second.same_shape(p->value))
            throw IoError("checkpoint shape mismatch for " + p->name);
        p->value = it->second;
    }
    const auto& adam_t = ckpt.manifest.at("adam_t");
    restore_adam_arrays(st->opt_g, ckpt.arrays, "g", adam_t.at("g").get<int64_t>());
    restore_adam_arrays(st->opt_d, ckpt.arrays, "d", adam_t.at("d").get<int64_t>());
    restore_adam_arrays(st->opt_inv, ckpt.arrays, "inv", adam_t.at("inv").get<int64_t>());
    restore_adam_arrays(st->opt_pseudo, ckpt.arrays, "pseudo", adam_t.at("pseudo").get<int64_t>());

    const auto& counters = ckpt.manifest.at("counters");
    st->it_rd.restore(counters.at("rd").get<int64_t>());
    st->it_rs.restore(counters.at("rs").get<int64_t>());
    st->it_pseudo.restore(counters.at("pseudo").get<int64_t>());
    st->iteration = ckpt.manifest.at("iteration").get<int64_t>();
    return st;
}

std::unique_ptr<InferenceModel> InferenceModel::open(const std::string& ckpt_path) {
    const nn::LoadedCheckpoint ckpt = nn::load_checkpoint(ckpt_path);
    auto out = std::make_unique<InferenceModel>();
    out->cfg = config_from_manifest(ckpt.manifest);
    load_palette_tables(ckpt.manifest, out->palette, out->colormap);
    out->model = nn::Model::build(out->cfg.net, out->cfg.seed);
    for (const auto& p : out->model->store.params()) {
        const auto it = ckpt.arrays.find(p->name);
        if (it == ckpt.arrays.end()) throw IoError("checkpoint is missing parameter " + p->name);
        if (!it->second.same_shape(p->value))
            throw IoError("checkpoint shape mismatch for " + p->name);
        p->value = it->second;
    }
    out->iteration = ckpt.manifest.at("iteration").get<int64_t>();
    return out;
}

codec::RgbImage InferenceModel::translate_image(const codec::RgbImage& input, DomainId source,
                                                DomainId target) {
    codec::RgbImage img = input;
    if (img.height != cfg.net.image_size || img.width != cfg.net.image_size)
        img = data::resize_area(img, cfg.net.image_size, cfg.net.image_size);
    const Tensor x = image_to_batch1(img);
    const Tensor y = model->translate(x, source, target, /*training=*/false);
    return codec::image_from_tensor(y, 0);
}

// --- latent-classifier experiments -------------------------------------------------------------

LabeledImages build_domain_pool(const TrainerData& data, int max_per_domain) {
    LabeledImages pool;
    int n_r = 0, n_d = 0, n_s = 0;
    for (const TrainSample& s : data.rd) {
        if (n_r < max_per_domain && !s.rgb.empty()) {
            pool.images.push_back(s.rgb);
            pool.labels.push_back(int(DomainId::R));
            ++n_r;
        }
        if (n_d < max_per_domain && !s.depth.empty()) {
            pool.images.push_back(s.depth);
            pool.labels.push_back(int(DomainId::D));
            ++n_d;
        }
    }
    for (const TrainSample& s : data.rs) {
        if (n_s < max_per_domain && !s.sem.empty()) {
            pool.images.push_back(s.sem);
            pool.labels.push_back(int(DomainId::S));
            ++n_s;
        }
    }
    if (pool.images.empty()) throw ConfigError("empty domain pool");
    return pool;
}

namespace {

// Deterministic batch schedule over the pool.
std::vector<int> pool_batch(const LabeledImages& pool, uint64_t seed, const char* purpose,
                            int step, int batch_size) {
    const int n = int(pool.images.size());
    std::vector<int> order(size_t(n));
    for (int i = 0; i < n; ++i) order[size_t(i)] = i;
    const int per_epoch = std::max(1, n / batch_size);
    const int epoch = step / per_epoch;
    Rng rng(sub_seed(seed, purpose, uint64_t(epoch)));
    rng.shuffle(order);
    std::vector<int> batch;
    const int offset = (step % per_epoch) * batch_size;
    for (int i = 0; i < batch_size; ++i) batch.push_back(order[size_t((offset + i) % n)]);
    return batch;
}

Tensor stack_pool(const LabeledImages& pool, const std::vector<int>& idx, std::vector<int>& labels) {
    std::vector<const Tensor*> singles;
    labels.clear();
    for (const int i : idx) {
        singles.push_back(&pool.images[size_t(i)]);
        labels.push_back(pool.labels[size_t(i)]);
    }
    return stack_singles(singles);
}

} // namespace

void classifier_warmup(TrainState& st, const LabeledImages& pool, int steps, int batch_size,
                       double lr) {
    nn::Model& m = *st.model;
    if (!m.classifier) throw ConfigError("classifier warmup requires the dcn0 mode");
    Adam opt(collect_params(m.store, {"classifier."}));
    for (int step = 0; step < steps; ++step) {
        std::vector<int> labels;
        const Tensor images =
            stack_pool(pool, pool_batch(pool, st.cfg.seed, "cls-warmup", step, batch_size), labels);
        const Tensor z = m.encoder->forward(images, /*training=*/false, nullptr); // frozen encoder
        nn::CtxPtr cls_ctx;
        const Tensor logits = m.classifier->forward(z, true, &cls_ctx);
        Tensor g(logits.shape());
        loss::domain_cls_grad(logits, labels, 1.0, g);
        m.store.zero_grad("classifier.");
        m.classifier->backward(g, *cls_ctx);
        opt.step(lr);
    }
}

double classifier_accuracy(TrainState& st, const LabeledImages& pool) {
    nn::Model& m = *st.model;
    if (!m.classifier) throw ConfigError("classifier accuracy requires the dcn0 mode");
    int correct = 0;
    for (size_t i = 0; i < pool.images.size(); ++i) {
        const Tensor z = m.encoder->forward(pool.images[i], false, nullptr);
        const Tensor logits = m.classifier->forward(z, false, nullptr);
        int best = 0;
        for (int c = 1; c < logits.dim(1); ++c)
            if (logits[c] > logits[best]) best = c;
        if (best == pool.labels[i]) ++correct;
    }
    return double(correct) / double(pool.images.size());
}

void run_invariance_steps(TrainState& st, const LabeledImages& pool, int steps, int batch_size,
                          double lr) {
    for (int step = 0; step < steps; ++step) {
        std::vector<int> labels;
        const Tensor images =
            stack_pool(pool, pool_batch(pool, st.cfg.seed, "cls-adversarial", step, batch_size), labels);
        train_step_invariance(st, images, labels, lr);
    }
}

} // namespace dcn::train
