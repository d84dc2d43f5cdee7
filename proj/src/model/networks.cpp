#include "model/networks.hpp"

#include "core/error.hpp"
#include "core/rng.hpp"

namespace dcn::nn {

std::optional<DomainId> domain_from_char(char c) {
    switch (c) {
        case 'r': case 'R': return DomainId::R;
        case 'd': case 'D': return DomainId::D;
        case 's': case 'S': return DomainId::S;
        default: return std::nullopt;
    }
}

std::optional<ConditionMode> condition_mode_from_string(const std::string& s) {
    if (s == "dcn0") return ConditionMode::OutputOnly;
    if (s == "dcn") return ConditionMode::InputOutput;
    return std::nullopt;
}

int ConditionRegistry::index(DomainId source, DomainId target) const {
    const int src = static_cast<int>(source);
    const int tgt = static_cast<int>(target);
    if (src < 0 || src >= n_domains || tgt < 0 || tgt >= n_domains)
        throw ConfigError("domain ordinal out of range for registry");
    return mode == ConditionMode::OutputOnly ? tgt : src * n_domains + tgt;
}

void NetworkConfig::validate() const {
    if (image_size < 8 || image_size % 4 != 0)
        throw ConfigError("image_size must be a multiple of 4 and at least 8");
    if (base_channels < 1) throw ConfigError("base_channels must be positive");
    if (encoder_blocks < 1 || encoder_blocks >= n_resnet_blocks_total)
        throw ConfigError("encoder_blocks must be in [1, n_resnet_blocks_total)");
    if (n_domains != kNumDomains)
        throw ConfigError("this build supports exactly 3 domains (r, d, s)");
    if (disc_base_channels < 1) throw ConfigError("disc_base_channels must be positive");
    if (!(bn_eps > 0.0f)) throw ConfigError("bn_eps must be positive");
}

std::vector<int> decoder_norm_channels(const NetworkConfig& cfg) {
    std::vector<int> out;
    const int c4 = cfg.latent_channels();
    for (int i = 0; i < cfg.decoder_blocks(); ++i) {
        out.push_back(c4);
        out.push_back(c4);
    }
    out.push_back(2 * cfg.base_channels);
    out.push_back(cfg.base_channels);
    return out;
}

int64_t cbn_param_count(const NetworkConfig& cfg) {
    int64_t sum_c = 0;
    for (const int c : decoder_norm_channels(cfg)) sum_c += c;
    return 2 * sum_c * cfg.registry().set_size();
}

// --- Encoder -------------------------------------------------------------------

Encoder::Encoder(ParamStore& store, const NetworkConfig& cfg, Rng& rng) {
    const int b = cfg.base_channels;
    const float sd = cfg.init_stddev;
    seq_.add(std::make_unique<ReflectionPad2d>(3));
    seq_.add(std::make_unique<Conv2d>(store, "encoder.stem.conv", 3, b, 7, 1, 0, rng, sd));
    seq_.add(std::make_unique<BatchNorm2d>(store, "encoder.stem.norm", b, cfg.bn_eps, cfg.bn_momentum));
    seq_.add(std::make_unique<ReLU>());
    seq_.add(std::make_unique<Conv2d>(store, "encoder.down1.conv", b, 2 * b, 3, 2, 1, rng, sd));
    seq_.add(std::make_unique<BatchNorm2d>(store, "encoder.down1.norm", 2 * b, cfg.bn_eps, cfg.bn_momentum));
    seq_.add(std::make_unique<ReLU>());
    seq_.add(std::make_unique<Conv2d>(store, "encoder.down2.conv", 2 * b, 4 * b, 3, 2, 1, rng, sd));
    seq_.add(std::make_unique<BatchNorm2d>(store, "encoder.down2.norm", 4 * b, cfg.bn_eps, cfg.bn_momentum));
    seq_.add(std::make_unique<ReLU>());
    for (int i = 1; i <= cfg.encoder_blocks; ++i)
        seq_.add(std::make_unique<ResBlock>(store, "encoder.res" + std::to_string(i), 4 * b,
                                            /*n_conditions=*/0, cfg.bn_eps, cfg.bn_momentum, rng, sd));
}

Tensor Encoder::forward(const Tensor& x, bool training, CtxPtr* ctx) {
    return seq_.forward(x, training, /*cond=*/-1, ctx);
}

Tensor Encoder::backward(const Tensor& gy, Ctx& ctx) { return seq_.backward(gy, ctx); }

// --- Decoder ----------------------------------------------------------------------

Decoder::Decoder(ParamStore& store, const NetworkConfig& cfg, Rng& rng) {
    const int b = cfg.base_channels;
    const int c4 = cfg.latent_channels();
    const int n_cond = cfg.registry().set_size();
    const float sd = cfg.init_stddev;

    // Residual blocks continue the model-wide numbering started by the
    // encoder, so checkpoint keys read res1..res9.
    for (int i = cfg.encoder_blocks + 1; i <= cfg.n_resnet_blocks_total; ++i)
        seq_.add(std::make_unique<ResBlock>(store, "decoder.res" + std::to_string(i), c4, n_cond,
                                            cfg.bn_eps, cfg.bn_momentum, rng, sd));
    seq_.add(std::make_unique<UpsampleNearest2x>());
    seq_.add(std::make_unique<Conv2d>(store, "decoder.up1.conv", c4, 2 * b, 3, 1, 1, rng, sd));
    seq_.add(std::make_unique<CondBatchNorm2d>(store, "decoder.up1.norm", 2 * b, n_cond, cfg.bn_eps,
                                               cfg.bn_momentum));
    seq_.add(std::make_unique<ReLU>());
    seq_.add(std::make_unique<UpsampleNearest2x>());
    seq_.add(std::make_unique<Conv2d>(store, "decoder.up2.conv", 2 * b, b, 3, 1, 1, rng, sd));
    seq_.add(std::make_unique<CondBatchNorm2d>(store, "decoder.up2.norm", b, n_cond, cfg.bn_eps,
                                               cfg.bn_momentum));
    seq_.add(std::make_unique<ReLU>());
    seq_.add(std::make_unique<ReflectionPad2d>(3));
    seq_.add(std::make_unique<Conv2d>(store, "decoder.out.conv", b, 3, 7, 1, 0, rng, sd));
    seq_.add(std::make_unique<Tanh>());
}

Tensor Decoder::forward(const Tensor& z, bool training, int cond, CtxPtr* ctx) {
    return seq_.forward(z, training, cond, ctx);
}

Tensor Decoder::backward(const Tensor& gy, Ctx& ctx) { return seq_.backward(gy, ctx); }

// --- PatchDiscriminator ----------------------------------------------------------------

PatchDiscriminator::PatchDiscriminator(ParamStore& store, const std::string& name,
                                       const NetworkConfig& cfg, Rng& rng) {
    const int b = cfg.disc_base_channels;
    const float sd = cfg.init_stddev;
    seq_.add(std::make_unique<Conv2d>(store, name + ".conv1", 3, b, 4, 2, 1, rng, sd));
    seq_.add(std::make_unique<LeakyReLU>(0.2f));
    seq_.add(std::make_unique<Conv2d>(store, name + ".conv2", b, 2 * b, 4, 2, 1, rng, sd));
    seq_.add(std::make_unique<BatchNorm2d>(store, name + ".norm2", 2 * b, cfg.bn_eps, cfg.bn_momentum));
    seq_.add(std::make_unique<LeakyReLU>(0.2f));
    seq_.add(std::make_unique<Conv2d>(store, name + ".conv3", 2 * b, 4 * b, 4, 2, 1, rng, sd));
    seq_.add(std::make_unique<BatchNorm2d>(store, name + ".norm3", 4 * b, cfg.bn_eps, cfg.bn_momentum));
    seq_.add(std::make_unique<LeakyReLU>(0.2f));
    seq_.add(std::make_unique<Conv2d>(store, name + ".conv4", 4 * b, 8 * b, 4, 1, 1, rng, sd));
    seq_.add(std::make_unique<BatchNorm2d>(store, name + ".norm4", 8 * b, cfg.bn_eps, cfg.bn_momentum));
    seq_.add(std::make_unique<LeakyReLU>(0.2f));
    seq_.add(std::make_unique<Conv2d>(store, name + ".conv5", 8 * b, 1, 4, 1, 1, rng, sd));
}

Tensor PatchDiscriminator::forward(const Tensor& x, bool training, CtxPtr* ctx) {
    if (x.ndim() != 4 || x.dim(1) != 3)
        throw InputError("discriminator expects an Nx3xHxW input, got " + x.shape_string());
    return seq_.forward(x, training, -1, ctx);
}

Tensor PatchDiscriminator::backward(const Tensor& gy, Ctx& ctx) { return seq_.backward(gy, ctx); }

// --- DomainClassifier ----------------------------------------------------------------------

DomainClassifier::DomainClassifier(ParamStore& store, const NetworkConfig& cfg, Rng& rng)
    : latent_channels_(cfg.latent_channels()) {
    const int c = latent_channels_;
    const float sd = cfg.init_stddev;
    seq_.add(std::make_unique<Conv2d>(store, "classifier.conv1", c, c, 3, 2, 1, rng, sd));
    seq_.add(std::make_unique<LeakyReLU>(0.2f));
    seq_.add(std::make_unique<Conv2d>(store, "classifier.conv2", c, c, 3, 2, 1, rng, sd));
    seq_.add(std::make_unique<LeakyReLU>(0.2f));
    seq_.add(std::make_unique<GlobalAvgPool>());
    seq_.add(std::make_unique<Linear>(store, "classifier.fc", c, cfg.n_domains, rng, sd));
}

Tensor DomainClassifier::forward(const Tensor& z, bool training, CtxPtr* ctx) {
    if (z.ndim() != 4 || z.dim(1) != latent_channels_)
        throw InputError("classifier expects an Nx" + std::to_string(latent_channels_) +
                         "xHxW latent, got " + z.shape_string());
    return seq_.forward(z, training, -1, ctx);
}

Tensor DomainClassifier::backward(const Tensor& gy, Ctx& ctx) { return seq_.backward(gy, ctx); }

// --- Model ------------------------------------------------------------------------------------

std::unique_ptr<Model> Model::build(const NetworkConfig& cfg, uint64_t seed) {
    cfg.validate();
    auto m = std::make_unique<Model>();
    m->cfg = cfg;
    m->registry = cfg.registry();
    Rng rng(sub_seed(seed, "model-init"));
    m->encoder = std::make_unique<Encoder>(m->store, cfg, rng);
    m->decoder = std::make_unique<Decoder>(m->store, cfg, rng);
    for (int d = 0; d < cfg.n_domains; ++d) {
        const std::string name = std::string("disc.") + domain_name(static_cast<DomainId>(d));
        m->discriminators.push_back(
            std::make_unique<PatchDiscriminator>(m->store, name, cfg, rng));
    }
    if (cfg.mode == ConditionMode::OutputOnly)
        m->classifier = std::make_unique<DomainClassifier>(m->store, cfg, rng);
    return m;
}

Tensor Model::translate(const Tensor& x, DomainId source, DomainId target, bool training) {
    const Tensor z = encoder->forward(x, training, nullptr);
    return decoder->forward(z, training, registry.index(source, target), nullptr);
}

ParamCountReport count_params(const Model& m) {
    ParamCountReport r;
    r.encoder = m.store.count_trainable("encoder.");
    r.decoder = m.store.count_trainable("decoder.");
    r.generator = r.encoder + r.decoder;
    r.discriminators = m.store.count_trainable("disc.");
    r.classifier = m.store.count_trainable("classifier.");
    r.cbn_tables = cbn_param_count(m.cfg);
    return r;
}

} // namespace dcn::nn
