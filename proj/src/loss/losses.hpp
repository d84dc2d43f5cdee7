#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "core/error.hpp"
#include "core/tensor.hpp"
#include "model/networks.hpp"

namespace dcn::loss {

// Loss weights and schedule/scale settings shared by every training mode.
struct HyperParams {
    double lambda_l1 = 10.0;
    double lambda_idt = 5.0;
    double lambda_r = 1.0;
    double lambda_d = 1.0;
    double lambda_s = 1.0;
    double lambda_cls = 1.0;
    double base_lr = 2e-4;
    int64_t total_iters = 240000;
    int batch_size = 1;
    int image_size = 256;

    void validate() const;
    double lambda_dom(nn::DomainId d) const;
};

// Per-iteration component values. `cls` and `pseudo` stay zero unless that
// step type ran this iteration.
struct LossReport {
    double gan_g = 0.0;
    double gan_d = 0.0;
    double l1 = 0.0;
    double idt = 0.0;
    double cls = 0.0;
    double pseudo = 0.0;
    double total = 0.0;

    static const char* csv_header(); // iteration,step_type,... ,total
    std::string csv_row(int64_t iteration, const char* step_type) const;
};

// Composition of the per-step objective: the generator terms weighted by
// their lambdas plus whichever auxiliary step values are present.
double total_loss(const LossReport& parts, const HyperParams& hp);

// ---------------------------------------------------------------------------
// Template cores. Everything below is defined for float and double; the
// double instantiations back the finite-difference gradient tests.
// ---------------------------------------------------------------------------

// Weighted mean absolute difference.
template <class T>
double l1_mean(std::span<const T> pred, std::span<const T> target, double weight) {
    if (pred.size() != target.size()) throw InputError("L1 inputs must have equal size");
    if (pred.empty()) throw InputError("L1 inputs must be nonempty");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) acc += std::abs(double(pred[i]) - double(target[i]));
    return weight * acc / double(pred.size());
}

// d/d(pred) of l1_mean, accumulated into gpred with an extra scale factor.
template <class T>
void l1_mean_grad(std::span<const T> pred, std::span<const T> target, double weight, double scale,
                  std::span<T> gpred) {
    const double g = weight * scale / double(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = double(pred[i]) - double(target[i]);
        gpred[i] += T(d > 0.0 ? g : (d < 0.0 ? -g : 0.0));
    }
}

template <class T>
double mean_of(std::span<const T> v) {
    double s = 0.0;
    for (const T x : v) s += double(x);
    return s / double(v.size());
}

// Relativistic average least-squares critic objective: real scores should sit
// one unit above the mean fake score and fake scores one unit below the mean
// real score.
template <class T>
double ralsgan_d_core(std::span<const T> real, std::span<const T> fake) {
    if (real.empty() || fake.empty()) throw InputError("score batches must be nonempty");
    const double mr = mean_of(real), mf = mean_of(fake);
    double a = 0.0, b = 0.0;
    for (const T r : real) {
        const double t = double(r) - mf - 1.0;
        a += t * t;
    }
    for (const T f : fake) {
        const double t = double(f) - mr + 1.0;
        b += t * t;
    }
    return a / double(real.size()) + b / double(fake.size());
}

// Gradients of ralsgan_d_core with respect to both score sets (accumulated,
// scaled). Both terms couple through the means, so each side receives a
// direct and a mean-coupled contribution.
template <class T>
void ralsgan_d_grad_core(std::span<const T> real, std::span<const T> fake, double scale,
                         std::span<T> greal, std::span<T> gfake) {
    const double nr = double(real.size()), nf = double(fake.size());
    const double mr = mean_of(real), mf = mean_of(fake);
    // mean residuals
    double res_r = 0.0; // mean over real of (r - mf - 1)
    for (const T r : real) res_r += double(r) - mf - 1.0;
    res_r /= nr;
    double res_f = 0.0; // mean over fake of (f - mr + 1)
    for (const T f : fake) res_f += double(f) - mr + 1.0;
    res_f /= nf;

    for (size_t i = 0; i < real.size(); ++i) {
        const double direct = 2.0 * (double(real[i]) - mf - 1.0) / nr;
        const double coupled = -2.0 * res_f / nr; // through mr in the fake term
        greal[i] += T(scale * (direct + coupled));
    }
    for (size_t i = 0; i < fake.size(); ++i) {
        const double direct = 2.0 * (double(fake[i]) - mr + 1.0) / nf;
        const double coupled = -2.0 * res_r / nf; // through mf in the real term
        gfake[i] += T(scale * (direct + coupled));
    }
}

// Generator objective is the critic objective with the roles swapped.
template <class T>
double ralsgan_g_core(std::span<const T> real, std::span<const T> fake) {
    return ralsgan_d_core(fake, real);
}

template <class T>
void ralsgan_g_grad_core(std::span<const T> real, std::span<const T> fake, double scale,
                         std::span<T> greal, std::span<T> gfake) {
    ralsgan_d_grad_core(fake, real, scale, gfake, greal);
}

// Mean softmax cross-entropy over a batch of logit rows.
template <class T>
double cross_entropy_core(std::span<const T> logits, int n_classes, std::span<const int> labels) {
    if (n_classes < 1) throw InputError("cross entropy needs at least one class");
    const size_t n = labels.size();
    if (logits.size() != n * size_t(n_classes)) throw InputError("logit batch shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const int label = labels[i];
        if (label < 0 || label >= n_classes) throw InputError("label out of range");
        const T* row = logits.data() + i * size_t(n_classes);
        double mx = double(row[0]);
        for (int c = 1; c < n_classes; ++c) mx = std::max(mx, double(row[c]));
        double lse = 0.0;
        for (int c = 0; c < n_classes; ++c) lse += std::exp(double(row[c]) - mx);
        acc += std::log(lse) + mx - double(row[label]);
    }
    return acc / double(n);
}

// d/d(logits): (softmax - onehot) / batch, accumulated with a scale factor.
template <class T>
void cross_entropy_grad_core(std::span<const T> logits, int n_classes, std::span<const int> labels,
                             double scale, std::span<T> glogits) {
    const size_t n = labels.size();
    for (size_t i = 0; i < n; ++i) {
        const T* row = logits.data() + i * size_t(n_classes);
        T* grow = glogits.data() + i * size_t(n_classes);
        double mx = double(row[0]);
        for (int c = 1; c < n_classes; ++c) mx = std::max(mx, double(row[c]));
        double lse = 0.0;
        for (int c = 0; c < n_classes; ++c) lse += std::exp(double(row[c]) - mx);
        for (int c = 0; c < n_classes; ++c) {
            const double p = std::exp(double(row[c]) - mx) / lse;
            grow[c] += T(scale / double(n) * (p - (c == labels[i] ? 1.0 : 0.0)));
        }
    }
}

// ---------------------------------------------------------------------------
// Tensor-facing wrappers used by the trainer.
// ---------------------------------------------------------------------------

namespace detail {
inline std::span<const float> cspan(const Tensor& t) { return {t.data(), size_t(t.numel())}; }
inline std::span<float> span(Tensor& t) { return {t.data(), size_t(t.numel())}; }
} // namespace detail

double l1_recon(const Tensor& pred, const Tensor& target, double lambda_dom);
void l1_recon_grad(const Tensor& pred, const Tensor& target, double lambda_dom, double scale,
                   Tensor& gpred);

// Identity mapping penalty; numerically identical to l1_recon, kept as its
// own entry point because it is a distinct objective.
double identity_loss(const Tensor& gen_same_domain, const Tensor& input_img, double lambda_dom);

double ralsgan_d(const Tensor& real_scores, const Tensor& fake_scores);
void ralsgan_d_grad(const Tensor& real_scores, const Tensor& fake_scores, double scale,
                    Tensor& greal, Tensor& gfake);
double ralsgan_g(const Tensor& real_scores, const Tensor& fake_scores);
void ralsgan_g_grad(const Tensor& real_scores, const Tensor& fake_scores, double scale,
                    Tensor& greal, Tensor& gfake);

double domain_cls_loss(const Tensor& logits, std::span<const int> labels);
double domain_cls_loss(const Tensor& logits, nn::DomainId true_domain);
void domain_cls_grad(const Tensor& logits, std::span<const int> labels, double scale,
                     Tensor& glogits);

double pseudo_pair_loss(const Tensor& sem_from_rgb, const Tensor& sem_from_depth);
void pseudo_pair_grad(const Tensor& sem_target, const Tensor& sem_pred, double scale,
                      Tensor& gpred);

} // namespace dcn::loss
