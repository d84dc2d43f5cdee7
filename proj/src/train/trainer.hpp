#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "data/data.hpp"
#include "loss/losses.hpp"
#include "model/networks.hpp"
#include "train/config.hpp"
#include "train/optimizer.hpp"

namespace dcn::train {

enum class PairSet { RD, RS };

// Even iterations draw from the r-d pair set, odd iterations from r-s, so any
// even-length window visits both sets equally.
PairSet select_pair_set(int64_t iter);

// Constant for the first half of training, then linear decay to zero.
double lr_at(int64_t iter, const loss::HyperParams& hp);

// One sample's network-range encodings; only the modalities its split allows
// are populated.
struct TrainSample {
    std::string id;
    Tensor rgb;   // 1x3xHxW or empty
    Tensor depth; // colormapped depth, 1x3xHxW or empty
    Tensor sem;   // palette colors, 1x3xHxW or empty
};

struct TrainerData {
    std::vector<TrainSample> rd;
    std::vector<TrainSample> rs;
    std::vector<data::PairedSample> test; // evaluation keeps the codec forms
};

// Encodes samples at the training resolution and assigns them to splits,
// dropping the modality a split must not see.
TrainerData build_trainer_data(const std::vector<data::PairedSample>& samples,
                               const data::Splits& splits, const TrainConfig& cfg,
                               const codec::Palette& palette, const codec::Colormap& colormap);

// Loads a dataset folder and split manifest as configured.
TrainerData load_trainer_data(const TrainConfig& cfg, const codec::Palette& palette,
                              const codec::Colormap& colormap);

struct TrainState {
    TrainConfig cfg;
    codec::Palette palette;
    codec::Colormap colormap;
    std::unique_ptr<nn::Model> model;
    Adam opt_g;      // encoder + decoder, supervised objective
    Adam opt_d;      // the per-domain critics
    Adam opt_inv;    // classifier + encoder, adversarial invariance (dcn0)
    Adam opt_pseudo; // decoder, pseudo-pair step (dcn)
    int64_t iteration = 0;
    data::BatchIterator it_rd, it_rs, it_pseudo;
    TrainerData data;

    static std::unique_ptr<TrainState> create(const TrainConfig& cfg, TrainerData data);
    // Variant with explicit codec tables (resume path: the checkpoint's
    // tables win over whatever the config would resolve to).
    static std::unique_ptr<TrainState> create(const TrainConfig& cfg, TrainerData data,
                                              codec::Palette palette, codec::Colormap colormap);

    // Stacks samples of one split into per-domain batch tensors.
    Tensor batch_tensor(PairSet set, std::span<const int> indices, nn::DomainId domain) const;
};

// Critic update followed by the generator update on one paired batch:
// adversarial terms for both directions, both reconstruction directions and
// both identity terms. Returns the measured components (cls/pseudo zero).
loss::LossReport train_step_supervised(TrainState& st, const Tensor& a, const Tensor& b,
                                       PairSet set, double lr);

// Domain classifier + encoder adversarial update through gradient reversal
// (OutputOnly mode). Returns the classification loss.
double train_step_invariance(TrainState& st, const Tensor& images, std::span<const int> labels,
                             double lr);

// Updatable set for the pseudo-pair step: the decoder conditional-norm
// scale/shift rows of the (d -> s) condition, everything else frozen.
FreezeMask freeze_mask_ds(const TrainState& st);
// Ablation alternative: the whole decoder.
FreezeMask full_decoder_mask(const TrainState& st);

// Pseudo-pair update (InputOutput mode): translate a paired (r, d) sample to
// the semantic domain through both sources, penalize their disagreement, and
// update only what the freeze mask allows. The r-branch target is treated as
// fixed (no gradients flow through it).
double train_step_pseudo(TrainState& st, const Tensor& r, const Tensor& d, double lr);

struct RunResult {
    std::string final_checkpoint;
    std::string log_path;
    int64_t iterations = 0;
};

// Full schedule: alternating supervised steps, plus the mode's auxiliary step
// each iteration, periodic checkpoints, CSV logging. Deterministic in the
// seed. resume_ckpt may be empty.
RunResult run_training(const TrainConfig& cfg, const std::string& run_dir,
                       const std::string& resume_ckpt);

// --- checkpointing -----------------------------------------------------------

void save_state(const TrainState& st, const std::string& path);
std::unique_ptr<TrainState> load_state(const std::string& path, TrainerData data);

// Inference-only view of a checkpoint: the model plus the codec tables it was
// trained with.
struct InferenceModel {
    TrainConfig cfg;
    codec::Palette palette;
    codec::Colormap colormap;
    std::unique_ptr<nn::Model> model;
    int64_t iteration = 0;

    static std::unique_ptr<InferenceModel> open(const std::string& ckpt_path);

    //

    codec::RgbImage translate_image(const codec::RgbImage& input, nn::DomainId source,
                                    nn::DomainId target);
};

// --- latent-classifier experiments -------------------------------------------

// Pool of single-image batches with domain labels, drawn from the training
// splits (r and d images from the r-d split, s images from the r-s split).
struct LabeledImages {
    std::vector<Tensor> images; // each 1x3xHxW
    std::vector<int> labels;
};

LabeledImages build_domain_pool(const TrainerData& data, int max_per_domain);

// Trains only the classifier on frozen-encoder latents.
void classifier_warmup(TrainState& st, const LabeledImages& pool, int steps, int batch_size,
                       double lr);

// Fraction of pool samples whose latent the classifier assigns to the right
// domain (inference-mode encoder).
double classifier_accuracy(TrainState& st, const LabeledImages& pool);

// Repeated adversarial invariance steps over the pool.
void run_invariance_steps(TrainState& st, const LabeledImages& pool, int steps, int batch_size,
                          double lr);

} // namespace dcn::train
