#pragma once

#include <unordered_map>
#include <vector>

#include "model/layers.hpp"

namespace dcn::train {

// Contiguous element range of a parameter array that a masked step may
// update. Conditional-norm tables are row-major, so one condition row is one
// such range.
struct SliceMask {
    int64_t begin = 0;
    int64_t end = 0;
};

// Parameters absent from the map are frozen outright.
struct FreezeMask {
    std::unordered_map<const nn::Param*, SliceMask> updatable;

    int64_t updatable_count() const {
        int64_t n = 0;
        for (const auto& [p, s] : updatable) n += s.end - s.begin;
        return n;
    }
};

// Adam over a fixed parameter list. Masked steps touch only the allowed
// element ranges: values, moments and nothing else, so frozen parameters stay
// bit-identical.
class Adam {
public:
    struct Slot {
        nn::Param* param = nullptr;
        Tensor m;
        Tensor v;
    };

    Adam() = default;
    explicit Adam(std::vector<nn::Param*> params, double beta1 = 0.5, double beta2 = 0.999,
                  double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (nn::Param* p : params) {
            Slot s;
            s.param = p;
            s.m = Tensor(p->value.shape());
            s.v = Tensor(p->value.shape());
            slots_.push_back(std::move(s));
        }
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (Slot& s : slots_) update_range(s, lr, bc1, bc2, 0, s.param->value.numel());
    }

    void step_masked(double lr, const FreezeMask& mask) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (Slot& s : slots_) {
            const auto it = mask.updatable.find(s.param);
            if (it == mask.updatable.end()) continue;
            update_range(s, lr, bc1, bc2, it->second.begin, it->second.end);
        }
    }

    int64_t t() const { return t_; }
    void set_t(int64_t t) { t_ = t; }
    std::vector<Slot>& slots() { return slots_; }
    const std::vector<Slot>& slots() const { return slots_; }

private:
    void update_range(Slot& s, double lr, double bc1, double bc2, int64_t begin, int64_t end) {
        const float* g = s.param->grad.data();
        float* value = s.param->value.data();
        float* m = s.m.data();
        float* v = s.v.data();
        for (int64_t i = begin; i < end; ++i) {
            m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * g[i]);
            v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * double(g[i]) * g[i]);
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            value[i] = static_cast<float>(value[i] - lr * m_hat / (std::sqrt(v_hat) + eps_));
        }
    }

    double beta1_ = 0.5;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    int64_t t_ = 0;
    std::vector<Slot> slots_;
};

} // namespace dcn::train
