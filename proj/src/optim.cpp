#include "attnfuse/optim.hpp"

#include <cmath>

namespace attnfuse {

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0f)) throw ConfigError("learning_rate must be > 0");
    if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("momentum must be in [0,1)");
    if (!(weight_decay >= 0.0f)) throw ConfigError("weight_decay must be >= 0");
    if (lr_decay_epoch < 1) throw ConfigError("lr_decay_epoch must be >= 1");
    if (!(lr_decay_factor > 0.0f && lr_decay_factor <= 1.0f)) throw ConfigError("lr_decay_factor must be in (0,1]");
}

float learning_rate_at(const OptimizerConfig& cfg, int epoch) {
    const int drops = epoch > 0 ? (epoch - 1) / cfg.lr_decay_epoch : 0;
    double lr = cfg.learning_rate;
    for (int i = 0; i < drops; ++i) lr *= cfg.lr_decay_factor;
    return static_cast<float>(lr);
}

void sgd_step(std::span<Parameter* const> params, const OptimizerConfig& cfg, float lr) {
    for (Parameter* p : params) {
        if (p->frozen) continue;
        if (p->grad.shape() != p->value.shape()) {
            throw DimensionError("sgd_step: gradient shape " + shape_string(p->grad.shape()) + " for parameter '" +
                                 p->name + "' does not match " + shape_string(p->value.shape()));
        }
        for (std::size_t i = 0; i < p->grad.size(); ++i) {
            if (!std::isfinite(p->grad[i])) {
                throw NumericalError("sgd_step: non-finite gradient in parameter '" + p->name + "' at index " +
                                     std::to_string(i));
            }
        }
    }
    for (Parameter* p : params) {
        if (p->frozen) continue;
        const float wd = (p->is_bias && !cfg.decay_bias) ? 0.0f : cfg.weight_decay;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const float g = p->grad[i] + wd * p->value[i];
            p->momentum[i] = cfg.momentum * p->momentum[i] + g;
            p->value[i] -= lr * p->momentum[i];
        }
    }
}

}  // namespace attnfuse
