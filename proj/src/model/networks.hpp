#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "model/layers.hpp"

namespace dcn::nn {

// Translation domains with stable ordinals; checkpoints depend on this
// ordering.
enum class DomainId : int { R = 0, D = 1, S = 2 };

constexpr int kNumDomains = 3;

inline const char* domain_name(DomainId d) {
    switch (d) {
        case DomainId::R: return "r";
        case DomainId::D: return "d";
        case DomainId::S: return "s";
    }
    return "?";
}

std::optional<DomainId> domain_from_char(char c);

// OutputOnly conditions the decoder on the target domain alone (N rows);
// InputOutput conditions on the (source, target) pair (N*N rows).
enum class ConditionMode { OutputOnly, InputOutput };

inline const char* condition_mode_name(ConditionMode m) {
    return m == ConditionMode::OutputOnly ? "dcn0" : "dcn";
}
std::optional<ConditionMode> condition_mode_from_string(const std::string& s);

// Bijection from (source, target) pairs onto [0, set size).
struct ConditionRegistry {
    ConditionMode mode = ConditionMode::InputOutput;
    int n_domains = kNumDomains;

    int set_size() const {
        return mode == ConditionMode::OutputOnly ? n_domains : n_domains * n_domains;
    }
    int index(DomainId source, DomainId target) const;
};

struct NetworkConfig {
    int image_size = 256;
    int base_channels = 64;
    int n_resnet_blocks_total = 9;
    int encoder_blocks = 4;
    int n_domains = kNumDomains;
    ConditionMode mode = ConditionMode::InputOutput;
    int disc_base_channels = 64;
    float bn_eps = 1e-5f;
    float bn_momentum = 0.1f;
    float init_stddev = 0.02f;

    void validate() const;
    int latent_channels() const { return 4 * base_channels; }
    int decoder_blocks() const { return n_resnet_blocks_total - encoder_blocks; }
    ConditionRegistry registry() const { return {mode, n_domains}; }
};

// Channel width of every normalization layer in the decoder, in layer order.
std::vector<int> decoder_norm_channels(const NetworkConfig& cfg);

// Total scale/shift parameters held by the decoder's conditional norm layers:
// sum over layers of 2 * channels * condition-set-size.
int64_t cbn_param_count(const NetworkConfig& cfg);

// 7x7 stem, two stride-2 downsamplers, then the first `encoder_blocks`
// residual blocks; all normalization unconditional. Output is the latent
// code: channels = 4*base, spatial = input/4.
class Encoder {
public:
    Encoder(ParamStore& store, const NetworkConfig& cfg, Rng& rng);
    Tensor forward(const Tensor& x, bool training, CtxPtr* ctx);
    Tensor backward(const Tensor& gy, Ctx& ctx);

private:
    Sequential seq_;
};

// The remaining residual blocks, two upsample+conv stages and a 7x7 tanh
// output head. Every normalization layer is conditional, keyed by one
// condition index per call.
class Decoder {
public:
    Decoder(ParamStore& store, const NetworkConfig& cfg, Rng& rng);
    Tensor forward(const Tensor& z, bool training, int cond, CtxPtr* ctx);
    Tensor backward(const Tensor& gy, Ctx& ctx);

private:
    Sequential seq_;
};

// 70x70-receptive-field patch critic: three stride-2 and one stride-1 4x4
// convolutions, then a 1-channel score head. One instance per domain.
class PatchDiscriminator {
public:
    PatchDiscriminator(ParamStore& store, const std::string& name, const NetworkConfig& cfg, Rng& rng);
    Tensor forward(const Tensor& x, bool training, CtxPtr* ctx);
    Tensor backward(const Tensor& gy, Ctx& ctx);

private:
    Sequential seq_;
};

// Small conv stack + global average pool + linear head over latent codes;
// scores which domain a latent came from.
class DomainClassifier {
public:
    DomainClassifier(ParamStore& store, const NetworkConfig& cfg, Rng& rng);
    Tensor forward(const Tensor& z, bool training, CtxPtr* ctx);
    Tensor backward(const Tensor& gy, Ctx& ctx);

private:
    int latent_channels_;
    Sequential seq_;
};

// Parameter bundle for one conditioning mode: the shared encoder-decoder pair
// plus per-domain critics and, for OutputOnly, the latent domain classifier.
struct Model {
    NetworkConfig cfg;
    ConditionRegistry registry;
    ParamStore store;
    std::unique_ptr<Encoder> encoder;
    std::unique_ptr<Decoder> decoder;
    std::vector<std::unique_ptr<PatchDiscriminator>> discriminators; // one per domain
    std::unique_ptr<DomainClassifier> classifier;                    // OutputOnly only

    static std::unique_ptr<Model> build(const NetworkConfig& cfg, uint64_t seed);

    PatchDiscriminator& disc(DomainId d) { return *discriminators[static_cast<size_t>(d)]; }

    // Full source->target translation in a single forward (no gradients).
    Tensor translate(const Tensor& x, DomainId source, DomainId target, bool training);
};

struct ParamCountReport {
    int64_t encoder = 0;
    int64_t decoder = 0;
    int64_t generator = 0; // encoder + decoder: the headline translation-network size
    int64_t discriminators = 0;
    int64_t classifier = 0;
    int64_t cbn_tables = 0; // closed-form cross-check
};

ParamCountReport count_params(const Model& m);

} // namespace dcn::nn
