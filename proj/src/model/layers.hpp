#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace dcn::nn {

// Named parameter array. `trainable=false` marks persistent buffers (batch
// norm running statistics) that are checkpointed but never counted or
// optimized.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;
};

// Owns every parameter of a model in registration order. Registration order
// is construction order, which keeps optimizer walks and checkpoints
// deterministic.
class ParamStore {
public:
    Param* add(std::string name, Tensor init, bool trainable = true);
    Param* find(std::string_view name) const;
    const std::vector<std::unique_ptr<Param>>& params() const { return params_; }

    void zero_grad();
    void zero_grad(std::string_view prefix);
    int64_t count_trainable(std::string_view prefix = "") const;
    bool all_finite() const;

private:
    std::vector<std::unique_ptr<Param>> params_;
};

// Per-call activation cache. Every forward that will be backpropagated gets
// its own context, so a module can run several forward passes (GAN branches,
// identity branches) before any backward consumes them.
struct Ctx {
    virtual ~Ctx() = default;
};
using CtxPtr = std::unique_ptr<Ctx>;

class Layer {
public:
    virtual ~Layer() = default;

    // `cond` selects the conditional-normalization row; layers without
    // conditioning ignore it. Pass ctx=nullptr for inference-only forwards.
    virtual Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) = 0;

    // Accumulates parameter gradients and returns the input gradient.
    virtual Tensor backward(const Tensor& gy, Ctx& ctx) = 0;
};

// --- convolution ------------------------------------------------------------

class Conv2d final : public Layer {
public:
    Conv2d(ParamStore& store, const std::string& name, int in_c, int out_c, int kernel,
           int stride, int pad, Rng& rng, float init_stddev);

    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;

    int out_size(int in) const { return (in + 2 * pad_ - kernel_) / stride_ + 1; }

private:
    int in_c_, out_c_, kernel_, stride_, pad_;
    Param* weight_; // out_c x in_c x k x k
    Param* bias_;   // out_c
    std::vector<float> col_; // im2col workspace
};

// --- normalization ----------------------------------------------------------

class BatchNorm2d final : public Layer {
public:
    BatchNorm2d(ParamStore& store, const std::string& name, int channels, float eps, float momentum);

    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;

private:
    int channels_;
    float eps_, momentum_;
    Param* gamma_;
    Param* beta_;
    Param* running_mean_;
    Param* running_var_;
};

// Batch normalization whose affine scale/shift is a per-condition embedding
// row; the normalization statistics (batch and running) are shared across
// conditions.
class CondBatchNorm2d final : public Layer {
public:
    CondBatchNorm2d(ParamStore& store, const std::string& name, int channels, int n_conditions,
                    float eps, float momentum);

    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;

    int channels() const { return channels_; }
    Param* gamma_table() const { return gamma_; }
    Param* beta_table() const { return beta_; }

private:
    int channels_, n_conditions_;
    float eps_, momentum_;
    Param* gamma_; // n_conditions x channels
    Param* beta_;  // n_conditions x channels
    Param* running_mean_;
    Param* running_var_;
};

// --- activations ------------------------------------------------------------

class ReLU final : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;
};

class LeakyReLU final : public Layer {
public:
    explicit LeakyReLU(float slope) : slope_(slope) {}
    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;

private:
    float slope_;
};

class Tanh final : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;
};

// --- shape ops --------------------------------------------------------------

class ReflectionPad2d final : public Layer {
public:
    explicit ReflectionPad2d(int pad) : pad_(pad) {}
    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;

private:
    int pad_;
};

class UpsampleNearest2x final : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;
};

class GlobalAvgPool final : public Layer {
public:
    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;
};

class Linear final : public Layer {
public:
    Linear(ParamStore& store, const std::string& name, int in_features, int out_features,
           Rng& rng, float init_stddev);

    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;

private:
    int in_features_, out_features_;
    Param* weight_; // out x in
    Param* bias_;   // out
};

// --- composition ------------------------------------------------------------

struct SeqCtx final : Ctx {
    std::vector<CtxPtr> items;
};

class Sequential {
public:
    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx);
    Tensor backward(const Tensor& gy, Ctx& ctx);

    size_t size() const { return layers_.size(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Residual block: reflection-padded 3x3 conv, norm, relu, reflection-padded
// 3x3 conv, norm, plus the identity skip. The norm layers are plain batch
// norm in the encoder and conditional batch norm in the decoder.
class ResBlock final : public Layer {
public:
    ResBlock(ParamStore& store, const std::string& name, int channels, int n_conditions,
             float eps, float momentum, Rng& rng, float init_stddev);

    Tensor forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) override;
    Tensor backward(const Tensor& gy, Ctx& ctx) override;

private:
    Sequential branch_;
};

// --- gradient reversal -------------------------------------------------------

// Forward identity; backward multiplies the upstream gradient by -lambda so
// whatever sits below this point maximizes the loss the layers above it
// minimize.
Tensor grad_reverse(const Tensor& x, float lambda);
Tensor grad_reverse_backward(const Tensor& gy, float lambda);

} // namespace dcn::nn
