#pragma once

#include <span>
#include <string>

#include "attnfuse/tensor.hpp"

namespace attnfuse {

/// A trainable tensor with its SGD state. A frozen parameter is never touched
/// by sgd_step, neither its value nor its momentum buffer.
struct Parameter {
    Parameter() = default;
    Parameter(std::string name, Tensor value)
        : name(std::move(name)), value(std::move(value)), grad(this->value.shape()), momentum(this->value.shape()) {}

    std::string name;
    Tensor value;
    Tensor grad;
    Tensor momentum;
    bool frozen = false;
    bool is_bias = false;

    void zero_grad() { grad.fill(0.0f); }
    void reset_momentum() { momentum.fill(0.0f); }
};

struct OptimizerConfig {
    float learning_rate = 0.01f;
    float momentum = 0.9f;
    float weight_decay = 1e-4f;
    int lr_decay_epoch = 30;
    float lr_decay_factor = 0.1f;
    // Whether weight decay also applies to bias vectors.
    bool decay_bias = true;

    void validate() const;
};

/// Step schedule: the rate is multiplied by lr_decay_factor after every
/// lr_decay_epoch epochs. Epochs are 1-based.
float learning_rate_at(const OptimizerConfig& cfg, int epoch);

/// Classical momentum SGD with L2 weight decay folded into the gradient:
///   g' = g + wd*w;  v = mu*v + g';  w = w - lr*v
/// Throws NumericalError naming the parameter if any gradient is non-finite.
void sgd_step(std::span<Parameter* const> params, const OptimizerConfig& cfg, float lr);

}  // namespace attnfuse
