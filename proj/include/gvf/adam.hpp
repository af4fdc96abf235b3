#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gvf/tensor.hpp"

namespace gvf {

// Bias-corrected Adam with a linear learning-rate warmup ramp:
// effective rate at step s (1-based) is lr * min(1, s / warmup_steps).
struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t warmup_steps = 1000;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.learning_rate <= 0.0)
            throw std::invalid_argument("Adam: learning rate must be positive");
    }

    const AdamConfig& config() const { return cfg_; }
    std::size_t step_count() const { return step_; }

    double effective_rate(std::size_t step) const {
        if (cfg_.warmup_steps == 0) return cfg_.learning_rate;
        double ramp = static_cast<double>(step) / static_cast<double>(cfg_.warmup_steps);
        return cfg_.learning_rate * std::min(1.0, ramp);
    }

    // Updates every parameter in place. Parameter and gradient lists are
    // index-aligned; moment buffers are created lazily on the first call.
    void step(std::vector<Tensor*> params, const std::vector<const Tensor*>& grads) {
        if (params.size() != grads.size())
            throw std::invalid_argument("Adam: param/grad count mismatch");
        if (m_.empty()) {
            for (const Tensor* p : params) {
                m_.emplace_back(p->shape());
                v_.emplace_back(p->shape());
            }
        }
        if (m_.size() != params.size())
            throw std::invalid_argument("Adam: parameter set changed between steps");
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(m_[i]))
                throw std::invalid_argument("Adam: shape mismatch at parameter " +
                                            std::to_string(i));
            for (std::size_t j = 0; j < grads[i]->size(); ++j)
                if (!std::isfinite((*grads[i])[j]))
                    throw std::runtime_error("Adam: non-finite gradient at step " +
                                             std::to_string(step_ + 1));
        }
        ++step_;
        const double lr = effective_rate(step_);
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = *params[i];
            const Tensor& g = *grads[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
                v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
                double mhat = m_[i][j] / bc1;
                double vhat = v_[i][j] / bc2;
                p[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    std::size_t step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace gvf
