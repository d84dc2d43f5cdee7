#include "loss/losses.hpp"

#include <cstdio>
#include <string>

namespace dcn::loss {

void HyperParams::validate() const {
    for (const double l : {lambda_l1, lambda_idt, lambda_r, lambda_d, lambda_s, lambda_cls})
        if (l < 0.0) throw ConfigError("loss weights must be nonnegative");
    if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
    if (total_iters < 2 || total_iters % 2 != 0)
        throw ConfigError("total_iters must be a positive even number");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
}

double HyperParams::lambda_dom(nn::DomainId d) const {
    switch (d) {
        case nn::DomainId::R: return lambda_r;
        case nn::DomainId::D: return lambda_d;
        case nn::DomainId::S: return lambda_s;
    }
    throw ConfigError("unknown domain");
}

const char* LossReport::csv_header() {
    return "iteration,step_type,gan_g,gan_d,l1,idt,cls,pseudo,total";
}

std::string LossReport::csv_row(int64_t iteration, const char* step_type) const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%lld,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                  static_cast<long long>(iteration), step_type, gan_g, gan_d, l1, idt, cls, pseudo,
                  total);
    return buf;
}

double total_loss(const LossReport& parts, const HyperParams& hp) {
    return parts.gan_g + hp.lambda_l1 * parts.l1 + hp.lambda_idt * parts.idt + parts.cls +
           parts.pseudo;
}

double l1_recon(const Tensor& pred, const Tensor& target, double lambda_dom) {
    pred.check_same_shape(target);
    return l1_mean(detail::cspan(pred), detail::cspan(target), lambda_dom);
}

void l1_recon_grad(const Tensor& pred, const Tensor& target, double lambda_dom, double scale,
                   Tensor& gpred) {
    pred.check_same_shape(target);
    pred.check_same_shape(gpred);
    l1_mean_grad(detail::cspan(pred), detail::cspan(target), lambda_dom, scale,
                 detail::span(gpred));
}

double identity_loss(const Tensor& gen_same_domain, const Tensor& input_img, double lambda_dom) {
    return l1_recon(gen_same_domain, input_img, lambda_dom);
}

double ralsgan_d(const Tensor& real_scores, const Tensor& fake_scores) {
    return ralsgan_d_core(detail::cspan(real_scores), detail::cspan(fake_scores));
}

void ralsgan_d_grad(const Tensor& real_scores, const Tensor& fake_scores, double scale,
                    Tensor& greal, Tensor& gfake) {
    real_scores.check_same_shape(greal);
    fake_scores.check_same_shape(gfake);
    ralsgan_d_grad_core(detail::cspan(real_scores), detail::cspan(fake_scores), scale,
                        detail::span(greal), detail::span(gfake));
}

double ralsgan_g(const Tensor& real_scores, const Tensor& fake_scores) {
    return ralsgan_g_core(detail::cspan(real_scores), detail::cspan(fake_scores));
}

void ralsgan_g_grad(const Tensor& real_scores, const Tensor& fake_scores, double scale,
                    Tensor& greal, Tensor& gfake) {
    real_scores.check_same_shape(greal);
    fake_scores.check_same_shape(gfake);
    ralsgan_g_grad_core(detail::cspan(real_scores), detail::cspan(fake_scores), scale,
                        detail::span(greal), detail::span(gfake));
}

double domain_cls_loss(const Tensor& logits, std::span<const int> labels) {
    if (logits.ndim() != 2) throw InputError("logits must be a NxC tensor");
    if (static_cast<size_t>(logits.dim(0)) != labels.size())
        throw InputError("logit batch does not match label count");
    return cross_entropy_core(detail::cspan(logits), logits.dim(1), labels);
}

double domain_cls_loss(const Tensor& logits, nn::DomainId true_domain) {
    std::vector<int> labels(static_cast<size_t>(logits.dim(0)), static_cast<int>(true_domain));
    return domain_cls_loss(logits, labels);
}

void domain_cls_grad(const Tensor& logits, std::span<const int> labels, double scale,
                     Tensor& glogits) {
    logits.check_same_shape(glogits);
    cross_entropy_grad_core(detail::cspan(logits), logits.dim(1), labels, scale,
                            detail::span(glogits));
}

double pseudo_pair_loss(const Tensor& sem_from_rgb, const Tensor& sem_from_depth) {
    sem_from_rgb.check_same_shape(sem_from_depth);
    return l1_mean(detail::cspan(sem_from_depth), detail::cspan(sem_from_rgb), 1.0);
}

void pseudo_pair_grad(const Tensor& sem_target, const Tensor& sem_pred, double scale,
                      Tensor& gpred) {
    l1_mean_grad(detail::cspan(sem_pred), detail::cspan(sem_target), 1.0, scale,
                 detail::span(gpred));
}

} // namespace dcn::loss
