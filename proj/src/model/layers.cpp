#include "model/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace dcn::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXf>;
using CMapVec = Eigen::Map<const Eigen::VectorXf>;

Tensor gaussian_tensor(std::vector<int> shape, Rng& rng, float stddev) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(rng.normal(0.0, stddev));
    return t;
}

int reflect_index(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

} // namespace

// --- ParamStore ---------------------------------------------------------------

Param* ParamStore::add(std::string name, Tensor init, bool trainable) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    auto p = std::make_unique<Param>();
    p->name = std::move(name);
    p->grad = Tensor(init.shape());
    p->value = std::move(init);
    p->trainable = trainable;
    params_.push_back(std::move(p));
    return params_.back().get();
}

Param* ParamStore::find(std::string_view name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

void ParamStore::zero_grad() {
    for (const auto& p : params_) p->grad.zero();
}

void ParamStore::zero_grad(std::string_view prefix) {
    for (const auto& p : params_)
        if (p->name.starts_with(prefix)) p->grad.zero();
}

int64_t ParamStore::count_trainable(std::string_view prefix) const {
    int64_t n = 0;
    for (const auto& p : params_)
        if (p->trainable && p->name.starts_with(prefix)) n += p->value.numel();
    return n;
}

bool ParamStore::all_finite() const {
    for (const auto& p : params_)
        if (!p->value.all_finite()) return false;
    return true;
}

// --- Conv2d ---------------------------------------------------------------------

namespace {

struct ConvCtx final : Ctx {
    Tensor x;
};

} // namespace

Conv2d::Conv2d(ParamStore& store, const std::string& name, int in_c, int out_c, int kernel,
               int stride, int pad, Rng& rng, float init_stddev)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), pad_(pad) {
    weight_ = store.add(name + ".weight", gaussian_tensor({out_c, in_c, kernel, kernel}, rng, init_stddev));
    bias_ = store.add(name + ".bias", Tensor({out_c}));
}

Tensor Conv2d::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    if (x.ndim() != 4 || x.dim(1) != in_c_)
        throw InputError("conv expects Nx" + std::to_string(in_c_) + "xHxW input, got " + x.shape_string());
    const int n_batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    if (oh < 1 || ow < 1) throw InputError("conv input too small: " + x.shape_string());

    const int k_rows = in_c_ * kernel_ * kernel_;
    const int l_cols = oh * ow;
    col_.resize(static_cast<size_t>(k_rows) * l_cols);

    Tensor y({n_batch, out_c_, oh, ow});
    CMapRM wmat(weight_->value.data(), out_c_, k_rows);
    CMapVec bvec(bias_->value.data(), out_c_);

    for (int n = 0; n < n_batch; ++n) {
        const float* xs = x.data() + static_cast<int64_t>(n) * in_c_ * h * w;
        // im2col
        float* cp = col_.data();
        for (int ic = 0; ic < in_c_; ++ic) {
            const float* xc = xs + static_cast<int64_t>(ic) * h * w;
            for (int ky = 0; ky < kernel_; ++ky)
                for (int kx = 0; kx < kernel_; ++kx) {
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= h) {
                            std::fill(cp, cp + ow, 0.0f);
                            cp += ow;
                            continue;
                        }
                        const float* xrow = xc + static_cast<int64_t>(iy) * w;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride_ + kx - pad_;
                            *cp++ = (ix >= 0 && ix < w) ? xrow[ix] : 0.0f;
                        }
                    }
                }
        }
        MapRM ymat(y.data() + static_cast<int64_t>(n) * out_c_ * l_cols, out_c_, l_cols);
        CMapRM cmat(col_.data(), k_rows, l_cols);
        ymat.noalias() = wmat * cmat;
        ymat.colwise() += bvec;
    }

    if (ctx) {
        auto c = std::make_unique<ConvCtx>();
        c->x = x;
        *ctx = std::move(c);
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const ConvCtx&>(ctx);
    const Tensor& x = c.x;
    const int n_batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    const int k_rows = in_c_ * kernel_ * kernel_;
    const int l_cols = oh * ow;
    col_.resize(static_cast<size_t>(k_rows) * l_cols);
    std::vector<float> dcol(static_cast<size_t>(k_rows) * l_cols);

    Tensor dx(x.shape());
    CMapRM wmat(weight_->value.data(), out_c_, k_rows);
    MapRM dwmat(weight_->grad.data(), out_c_, k_rows);
    MapVec dbvec(bias_->grad.data(), out_c_);

    for (int n = 0; n < n_batch; ++n) {
        const float* xs = x.data() + static_cast<int64_t>(n) * in_c_ * h * w;
        float* cp = col_.data();
        for (int ic = 0; ic < in_c_; ++ic) {
            const float* xc = xs + static_cast<int64_t>(ic) * h * w;
            for (int ky = 0; ky < kernel_; ++ky)
                for (int kx = 0; kx < kernel_; ++kx)
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= h) {
                            std::fill(cp, cp + ow, 0.0f);
                            cp += ow;
                            continue;
                        }
                        const float* xrow = xc + static_cast<int64_t>(iy) * w;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride_ + kx - pad_;
                            *cp++ = (ix >= 0 && ix < w) ? xrow[ix] : 0.0f;
                        }
                    }
        }
        CMapRM gymat(gy.data() + static_cast<int64_t>(n) * out_c_ * l_cols, out_c_, l_cols);
        CMapRM cmat(col_.data(), k_rows, l_cols);
        dwmat.noalias() += gymat * cmat.transpose();
        dbvec.noalias() += gymat.rowwise().sum();

        MapRM dcmat(dcol.data(), k_rows, l_cols);
        dcmat.noalias() = wmat.transpose() * gymat;

        // col2im
        float* dxs = dx.data() + static_cast<int64_t>(n) * in_c_ * h * w;
        const float* dcp = dcol.data();
        for (int ic = 0; ic < in_c_; ++ic) {
            float* dxc = dxs + static_cast<int64_t>(ic) * h * w;
            for (int ky = 0; ky < kernel_; ++ky)
                for (int kx = 0; kx < kernel_; ++kx)
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= h) {
                            dcp += ow;
                            continue;
                        }
                        float* dxrow = dxc + static_cast<int64_t>(iy) * w;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride_ + kx - pad_;
                            if (ix >= 0 && ix < w) dxrow[ix] += *dcp;
                            ++dcp;
                        }
                    }
        }
    }
    return dx;
}

// --- batch normalization ---------------------------------------------------------

namespace {

struct NormCtx final : Ctx {
    bool training = true;
    int cond = 0;
    Tensor x_hat;               // normalized input (training mode)
    std::vector<float> inv_std; // per channel
};

// Shared normalization core for both norm layers. gamma/beta point at the
// row in use; running stats updated in training mode only.
Tensor norm_forward(const Tensor& x, int channels, float eps, float momentum, bool training,
                    const float* gamma, const float* beta, float* run_mean, float* run_var,
                    NormCtx* ctx) {
    if (x.ndim() != 4 || x.dim(1) != channels)
        throw InputError("norm expects Nx" + std::to_string(channels) + "xHxW input, got " + x.shape_string());
    const int n_batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t m = static_cast<int64_t>(n_batch) * h * w;
    if (training && m < 2) throw InputError("batch norm needs at least 2 values per channel in training mode");

    Tensor y(x.shape());
    const int64_t plane = static_cast<int64_t>(h) * w;

    if (ctx) {
        ctx->training = training;
        ctx->inv_std.assign(static_cast<size_t>(channels), 0.0f);
        if (training) ctx->x_hat = Tensor(x.shape());
    }

    for (int c = 0; c < channels; ++c) {
        float mean, inv_std;
        if (training) {
            double sum = 0.0;
            for (int n = 0; n < n_batch; ++n) {
                const float* xp = x.data() + (static_cast<int64_t>(n) * channels + c) * plane;
                for (int64_t i = 0; i < plane; ++i) sum += xp[i];
            }
            mean = static_cast<float>(sum / static_cast<double>(m));
            double ss = 0.0;
            for (int n = 0; n < n_batch; ++n) {
                const float* xp = x.data() + (static_cast<int64_t>(n) * channels + c) * plane;
                for (int64_t i = 0; i < plane; ++i) {
                    const double d = xp[i] - mean;
                    ss += d * d;
                }
            }
            const float var = static_cast<float>(ss / static_cast<double>(m));
            inv_std = 1.0f / std::sqrt(var + eps);
            run_mean[c] = (1.0f - momentum) * run_mean[c] + momentum * mean;
            run_var[c] = (1.0f - momentum) * run_var[c] + momentum * var;
        } else {
            mean = run_mean[c];
            inv_std = 1.0f / std::sqrt(run_var[c] + eps);
        }

        const float g = gamma[c], b = beta[c];
        for (int n = 0; n < n_batch; ++n) {
            const int64_t off = (static_cast<int64_t>(n) * channels + c) * plane;
            const float* xp = x.data() + off;
            float* yp = y.data() + off;
            float* hp = (ctx && training) ? ctx->x_hat.data() + off : nullptr;
            for (int64_t i = 0; i < plane; ++i) {
                const float xh = (xp[i] - mean) * inv_std;
                if (hp) hp[i] = xh;
                yp[i] = g * xh + b;
            }
        }
        if (ctx) ctx->inv_std[static_cast<size_t>(c)] = inv_std;
    }
    return y;
}

// Training-mode backward through the batch statistics; accumulates dgamma and
// dbeta for the row in use and returns dx.
Tensor norm_backward(const Tensor& gy, const NormCtx& ctx, int channels, const float* gamma,
                     float* dgamma, float* dbeta) {
    const Tensor& x_hat = ctx.x_hat;
    const int n_batch = gy.dim(0), h = gy.dim(2), w = gy.dim(3);
    const int64_t m = static_cast<int64_t>(n_batch) * h * w;
    const int64_t plane = static_cast<int64_t>(h) * w;

    Tensor dx(gy.shape());
    for (int c = 0; c < channels; ++c) {
        double sum_gy = 0.0, sum_gy_xh = 0.0;
        for (int n = 0; n < n_batch; ++n) {
            const int64_t off = (static_cast<int64_t>(n) * channels + c) * plane;
            const float* gp = gy.data() + off;
            const float* hp = x_hat.data() + off;
            for (int64_t i = 0; i < plane; ++i) {
                sum_gy += gp[i];
                sum_gy_xh += static_cast<double>(gp[i]) * hp[i];
            }
        }
        dgamma[c] += static_cast<float>(sum_gy_xh);
        dbeta[c] += static_cast<float>(sum_gy);

        const float scale = gamma[c] * ctx.inv_std[static_cast<size_t>(c)] / static_cast<float>(m);
        const float gy_total = static_cast<float>(sum_gy);
        const float gy_xh_total = static_cast<float>(sum_gy_xh);
        for (int n = 0; n < n_batch; ++n) {
            const int64_t off = (static_cast<int64_t>(n) * channels + c) * plane;
            const float* gp = gy.data() + off;
            const float* hp = x_hat.data() + off;
            float* dp = dx.data() + off;
            for (int64_t i = 0; i < plane; ++i)
                dp[i] = scale * (static_cast<float>(m) * gp[i] - gy_total - hp[i] * gy_xh_total);
        }
    }
    return dx;
}

} // namespace

BatchNorm2d::BatchNorm2d(ParamStore& store, const std::string& name, int channels, float eps,
                         float momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
    gamma_ = store.add(name + ".gamma", Tensor::full({channels}, 1.0f));
    beta_ = store.add(name + ".beta", Tensor({channels}));
    running_mean_ = store.add(name + ".running_mean", Tensor({channels}), /*trainable=*/false);
    running_var_ = store.add(name + ".running_var", Tensor::full({channels}, 1.0f), /*trainable=*/false);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training, int /*cond*/, CtxPtr* ctx) {
    std::unique_ptr<NormCtx> c;
    if (ctx) c = std::make_unique<NormCtx>();
    Tensor y = norm_forward(x, channels_, eps_, momentum_, training, gamma_->value.data(),
                            beta_->value.data(), running_mean_->value.data(),
                            running_var_->value.data(), c.get());
    if (ctx) *ctx = std::move(c);
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& gy, Ctx& ctx) {
    auto& c = static_cast<NormCtx&>(ctx);
    if (!c.training) {
        // Affine-only path through frozen statistics.
        Tensor dx(gy.shape());
        const int64_t plane = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
        for (int n = 0; n < gy.dim(0); ++n)
            for (int ch = 0; ch < channels_; ++ch) {
                const float s = gamma_->value[ch] * c.inv_std[static_cast<size_t>(ch)];
                const int64_t off = (static_cast<int64_t>(n) * channels_ + ch) * plane;
                for (int64_t i = 0; i < plane; ++i) dx.data()[off + i] = gy.data()[off + i] * s;
            }
        return dx;
    }
    return norm_backward(gy, c, channels_, gamma_->value.data(), gamma_->grad.data(),
                         beta_->grad.data());
}

CondBatchNorm2d::CondBatchNorm2d(ParamStore& store, const std::string& name, int channels,
                                 int n_conditions, float eps, float momentum)
    : channels_(channels), n_conditions_(n_conditions), eps_(eps), momentum_(momentum) {
    gamma_ = store.add(name + ".gamma", Tensor::full({n_conditions, channels}, 1.0f));
    beta_ = store.add(name + ".beta", Tensor({n_conditions, channels}));
    running_mean_ = store.add(name + ".running_mean", Tensor({channels}), /*trainable=*/false);
    running_var_ = store.add(name + ".running_var", Tensor::full({channels}, 1.0f), /*trainable=*/false);
}

Tensor CondBatchNorm2d::forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) {
    if (cond < 0 || cond >= n_conditions_)
        throw ConfigError("condition index " + std::to_string(cond) + " out of range [0, " +
                          std::to_string(n_conditions_) + ")");
    std::unique_ptr<NormCtx> c;
    if (ctx) {
        c = std::make_unique<NormCtx>();
        c->cond = cond;
    }
    const int64_t row = static_cast<int64_t>(cond) * channels_;
    Tensor y = norm_forward(x, channels_, eps_, momentum_, training, gamma_->value.data() + row,
                            beta_->value.data() + row, running_mean_->value.data(),
                            running_var_->value.data(), c.get());
    if (ctx) *ctx = std::move(c);
    return y;
}

Tensor CondBatchNorm2d::backward(const Tensor& gy, Ctx& ctx) {
    auto& c = static_cast<NormCtx&>(ctx);
    const int64_t row = static_cast<int64_t>(c.cond) * channels_;
    if (!c.training) {
        Tensor dx(gy.shape());
        const int64_t plane = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
        for (int n = 0; n < gy.dim(0); ++n)
            for (int ch = 0; ch < channels_; ++ch) {
                const float s = gamma_->value[row + ch] * c.inv_std[static_cast<size_t>(ch)];
                const int64_t off = (static_cast<int64_t>(n) * channels_ + ch) * plane;
                for (int64_t i = 0; i < plane; ++i) dx.data()[off + i] = gy.data()[off + i] * s;
            }
        return dx;
    }
    return norm_backward(gy, c, channels_, gamma_->value.data() + row, gamma_->grad.data() + row,
                         beta_->grad.data() + row);
}

// --- activations -------------------------------------------------------------------

namespace {

struct MaskCtx final : Ctx {
    std::vector<uint8_t> positive;
};

struct TanhCtx final : Ctx {
    Tensor y;
};

} // namespace

Tensor ReLU::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    Tensor y(x.shape());
    std::unique_ptr<MaskCtx> c;
    if (ctx) {
        c = std::make_unique<MaskCtx>();
        c->positive.resize(static_cast<size_t>(x.numel()));
    }
    for (int64_t i = 0; i < x.numel(); ++i) {
        const bool pos = x[i] > 0.0f;
        y[i] = pos ? x[i] : 0.0f;
        if (c) c->positive[static_cast<size_t>(i)] = pos;
    }
    if (ctx) *ctx = std::move(c);
    return y;
}

Tensor ReLU::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const MaskCtx&>(ctx);
    Tensor dx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i)
        dx[i] = c.positive[static_cast<size_t>(i)] ? gy[i] : 0.0f;
    return dx;
}

Tensor LeakyReLU::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    Tensor y(x.shape());
    std::unique_ptr<MaskCtx> c;
    if (ctx) {
        c = std::make_unique<MaskCtx>();
        c->positive.resize(static_cast<size_t>(x.numel()));
    }
    for (int64_t i = 0; i < x.numel(); ++i) {
        const bool pos = x[i] > 0.0f;
        y[i] = pos ? x[i] : slope_ * x[i];
        if (c) c->positive[static_cast<size_t>(i)] = pos;
    }
    if (ctx) *ctx = std::move(c);
    return y;
}

Tensor LeakyReLU::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const MaskCtx&>(ctx);
    Tensor dx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i)
        dx[i] = c.positive[static_cast<size_t>(i)] ? gy[i] : slope_ * gy[i];
    return dx;
}

Tensor Tanh::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    Tensor y(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
    if (ctx) {
        auto c = std::make_unique<TanhCtx>();
        c->y = y;
        *ctx = std::move(c);
    }
    return y;
}

Tensor Tanh::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const TanhCtx&>(ctx);
    Tensor dx(gy.shape());
    for (int64_t i = 0; i < gy.numel(); ++i) dx[i] = gy[i] * (1.0f - c.y[i] * c.y[i]);
    return dx;
}

// --- shape ops ------------------------------------------------------------------------

namespace {

struct ShapeCtx final : Ctx {
    std::vector<int> in_shape;
};

} // namespace

Tensor ReflectionPad2d::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    const int n_batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h <= pad_ || w <= pad_) throw InputError("input too small for reflection pad");
    Tensor y({n_batch, c, h + 2 * pad_, w + 2 * pad_});
    for (int n = 0; n < n_batch; ++n)
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < h + 2 * pad_; ++oy) {
                const int iy = reflect_index(oy - pad_, h);
                for (int ox = 0; ox < w + 2 * pad_; ++ox)
                    y.at(n, ch, oy, ox) = x.at(n, ch, iy, reflect_index(ox - pad_, w));
            }
    if (ctx) {
        auto sc = std::make_unique<ShapeCtx>();
        sc->in_shape = x.shape();
        *ctx = std::move(sc);
    }
    return y;
}

Tensor ReflectionPad2d::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const ShapeCtx&>(ctx);
    Tensor dx(c.in_shape);
    const int n_batch = dx.dim(0), ch_n = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
    for (int n = 0; n < n_batch; ++n)
        for (int ch = 0; ch < ch_n; ++ch)
            for (int oy = 0; oy < h + 2 * pad_; ++oy) {
                const int iy = reflect_index(oy - pad_, h);
                for (int ox = 0; ox < w + 2 * pad_; ++ox)
                    dx.at(n, ch, iy, reflect_index(ox - pad_, w)) += gy.at(n, ch, oy, ox);
            }
    return dx;
}

Tensor UpsampleNearest2x::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    const int n_batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor y({n_batch, c, 2 * h, 2 * w});
    for (int n = 0; n < n_batch; ++n)
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < 2 * h; ++oy)
                for (int ox = 0; ox < 2 * w; ++ox)
                    y.at(n, ch, oy, ox) = x.at(n, ch, oy / 2, ox / 2);
    if (ctx) {
        auto sc = std::make_unique<ShapeCtx>();
        sc->in_shape = x.shape();
        *ctx = std::move(sc);
    }
    return y;
}

Tensor UpsampleNearest2x::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const ShapeCtx&>(ctx);
    Tensor dx(c.in_shape);
    const int n_batch = dx.dim(0), ch_n = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
    for (int n = 0; n < n_batch; ++n)
        for (int ch = 0; ch < ch_n; ++ch)
            for (int oy = 0; oy < 2 * h; ++oy)
                for (int ox = 0; ox < 2 * w; ++ox)
                    dx.at(n, ch, oy / 2, ox / 2) += gy.at(n, ch, oy, ox);
    return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    const int n_batch = x.dim(0), c = x.dim(1);
    const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    Tensor y({n_batch, c});
    for (int n = 0; n < n_batch; ++n)
        for (int ch = 0; ch < c; ++ch) {
            double sum = 0.0;
            const float* xp = x.data() + (static_cast<int64_t>(n) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) sum += xp[i];
            y[static_cast<int64_t>(n) * c + ch] = static_cast<float>(sum / static_cast<double>(plane));
        }
    if (ctx) {
        auto sc = std::make_unique<ShapeCtx>();
        sc->in_shape = x.shape();
        *ctx = std::move(sc);
    }
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const ShapeCtx&>(ctx);
    Tensor dx(c.in_shape);
    const int n_batch = dx.dim(0), ch_n = dx.dim(1);
    const int64_t plane = static_cast<int64_t>(dx.dim(2)) * dx.dim(3);
    const float inv = 1.0f / static_cast<float>(plane);
    for (int n = 0; n < n_batch; ++n)
        for (int ch = 0; ch < ch_n; ++ch) {
            const float g = gy[static_cast<int64_t>(n) * ch_n + ch] * inv;
            float* dp = dx.data() + (static_cast<int64_t>(n) * ch_n + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) dp[i] = g;
        }
    return dx;
}

// --- Linear ------------------------------------------------------------------------------

namespace {

struct LinearCtx final : Ctx {
    Tensor x;
};

} // namespace

Linear::Linear(ParamStore& store, const std::string& name, int in_features, int out_features,
               Rng& rng, float init_stddev)
    : in_features_(in_features), out_features_(out_features) {
    weight_ = store.add(name + ".weight", gaussian_tensor({out_features, in_features}, rng, init_stddev));
    bias_ = store.add(name + ".bias", Tensor({out_features}));
}

Tensor Linear::forward(const Tensor& x, bool /*training*/, int /*cond*/, CtxPtr* ctx) {
    if (x.ndim() != 2 || x.dim(1) != in_features_)
        throw InputError("linear expects Nx" + std::to_string(in_features_) + " input, got " + x.shape_string());
    const int n_batch = x.dim(0);
    Tensor y({n_batch, out_features_});
    CMapRM xm(x.data(), n_batch, in_features_);
    CMapRM wm(weight_->value.data(), out_features_, in_features_);
    MapRM ym(y.data(), n_batch, out_features_);
    ym.noalias() = xm * wm.transpose();
    ym.rowwise() += CMapVec(bias_->value.data(), out_features_).transpose();
    if (ctx) {
        auto c = std::make_unique<LinearCtx>();
        c->x = x;
        *ctx = std::move(c);
    }
    return y;
}

Tensor Linear::backward(const Tensor& gy, Ctx& ctx) {
    const auto& c = static_cast<const LinearCtx&>(ctx);
    const int n_batch = c.x.dim(0);
    CMapRM xm(c.x.data(), n_batch, in_features_);
    CMapRM gym(gy.data(), n_batch, out_features_);
    MapRM dwm(weight_->grad.data(), out_features_, in_features_);
    MapVec dbv(bias_->grad.data(), out_features_);
    dwm.noalias() += gym.transpose() * xm;
    dbv.noalias() += gym.colwise().sum().transpose();

    Tensor dx({n_batch, in_features_});
    MapRM dxm(dx.data(), n_batch, in_features_);
    CMapRM wm(weight_->value.data(), out_features_, in_features_);
    dxm.noalias() = gym * wm;
    return dx;
}

// --- composition ----------------------------------------------------------------------------

Tensor Sequential::forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) {
    std::unique_ptr<SeqCtx> sc;
    if (ctx) {
        sc = std::make_unique<SeqCtx>();
        sc->items.resize(layers_.size());
    }
    Tensor cur = x;
    for (size_t i = 0; i < layers_.size(); ++i)
        cur = layers_[i]->forward(cur, training, cond, sc ? &sc->items[i] : nullptr);
    if (ctx) *ctx = std::move(sc);
    return cur;
}

Tensor Sequential::backward(const Tensor& gy, Ctx& ctx) {
    auto& sc = static_cast<SeqCtx&>(ctx);
    Tensor cur = gy;
    for (size_t i = layers_.size(); i-- > 0;)
        cur = layers_[i]->backward(cur, *sc.items[i]);
    return cur;
}

// --- ResBlock ----------------------------------------------------------------------------------

ResBlock::ResBlock(ParamStore& store, const std::string& name, int channels, int n_conditions,
                   float eps, float momentum, Rng& rng, float init_stddev) {
    auto norm = [&](const std::string& norm_name) -> std::unique_ptr<Layer> {
        if (n_conditions > 0)
            return std::make_unique<CondBatchNorm2d>(store, norm_name, channels, n_conditions, eps, momentum);
        return std::make_unique<BatchNorm2d>(store, norm_name, channels, eps, momentum);
    };
    branch_.add(std::make_unique<ReflectionPad2d>(1));
    branch_.add(std::make_unique<Conv2d>(store, name + ".conv1", channels, channels, 3, 1, 0, rng, init_stddev));
    branch_.add(norm(name + ".norm1"));
    branch_.add(std::make_unique<ReLU>());
    branch_.add(std::make_unique<ReflectionPad2d>(1));
    branch_.add(std::make_unique<Conv2d>(store, name + ".conv2", channels, channels, 3, 1, 0, rng, init_stddev));
    branch_.add(norm(name + ".norm2"));
}

Tensor ResBlock::forward(const Tensor& x, bool training, int cond, CtxPtr* ctx) {
    CtxPtr branch_ctx;
    Tensor y = branch_.forward(x, training, cond, ctx ? &branch_ctx : nullptr);
    y += x;
    if (ctx) *ctx = std::move(branch_ctx);
    return y;
}

Tensor ResBlock::backward(const Tensor& gy, Ctx& ctx) {
    Tensor dx = branch_.backward(gy, ctx);
    dx += gy; // identity skip
    return dx;
}

// --- gradient reversal -----------------------------------------------------------------------------

Tensor grad_reverse(const Tensor& x, float lambda) {
    if (lambda < 0.0f) throw ConfigError("gradient reversal scale must be nonnegative");
    return x;
}

Tensor grad_reverse_backward(const Tensor& gy, float lambda) {
    Tensor g = gy;
    g *= -lambda;
    return g;
}

} // namespace dcn::nn
