#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "stimpute/rng.hpp"
#include "stimpute/tensor.hpp"

namespace stimpute {

/// One named learnable tensor with its gradient and Adam moments.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    bool trainable = true;  // key-head parameters are updated by momentum instead
};

class ParameterStore {
public:
    Parameter& create(const std::string& name, std::initializer_list<int64_t> shape) {
        if (find(name)) throw std::invalid_argument("duplicate parameter: " + name);
        auto p = std::make_unique<Parameter>();
        p->name = name;
        p->value = Tensor(shape);
        p->grad = Tensor(shape);
        p->adam_m = Tensor(shape);
        p->adam_v = Tensor(shape);
        params_.push_back(std::move(p));
        return *params_.back();
    }

    Parameter* find(const std::string& name) {
        for (auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    Parameter& get(const std::string& name) {
        Parameter* p = find(name);
        if (!p) throw std::out_of_range("no such parameter: " + name);
        return *p;
    }

    const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }

    void zero_grads() {
        for (auto& p : params_) p->grad.zero();
    }

    int64_t total_size() const {
        int64_t n = 0;
        for (auto& p : params_) n += p->value.size();
        return n;
    }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

/// Adam with L2 weight decay folded into the gradient.
class AdamOptimizer {
public:
    AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                  double weight_decay = 0.0)
        : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

    void step(ParameterStore& store, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (auto& p : store.all()) {
            if (!p->trainable) continue;
            for (int64_t i = 0; i < p->value.size(); ++i) {
                const double g = p->grad[i] + weight_decay_ * p->value[i];
                p->adam_m[i] = beta1_ * p->adam_m[i] + (1.0 - beta1_) * g;
                p->adam_v[i] = beta2_ * p->adam_v[i] + (1.0 - beta2_) * g * g;
                const double mhat = p->adam_m[i] / bc1;
                const double vhat = p->adam_v[i] / bc2;
                p->value[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    int64_t steps_taken() const { return t_; }

private:
    double beta1_, beta2_, eps_, weight_decay_;
    int64_t t_ = 0;
};

/// Cosine-annealed learning rate over a fixed horizon.
inline double cosine_lr(double base_lr, int64_t step, int64_t total_steps,
                        double min_lr = 0.0) {
    if (total_steps <= 1) return base_lr;
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    const double c = 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
    return min_lr + (base_lr - min_lr) * c;
}

/// Fan-in scaled uniform init, the convention used across the model modules.
inline void init_uniform_fanin(Parameter& p, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
    rng.fill_uniform(p.value, -bound, bound);
}

}  // namespace stimpute
