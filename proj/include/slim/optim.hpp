#pragma once

#include <vector>

#include "slim/tensor.hpp"

namespace slim {

/// Adam with bias correction. step() consumes and clears the gradients of the
/// registered parameters; moment buffers live for the lifetime of the
/// optimizer.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor> params, real lr, real beta1 = 0.9, real beta2 = 0.999,
                  real eps = 1e-8);

    void step();
    void zero_grad();

    real lr() const { return lr_; }
    void set_lr(real lr) { lr_ = lr; }
    std::size_t steps_taken() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<real>> m_;
    std::vector<std::vector<real>> v_;
    real lr_;
    real beta1_;
    real beta2_;
    real eps_;
    std::size_t t_ = 0;
};

/// Scale gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
real clip_global_norm(std::vector<Tensor>& params, real max_norm);

} // namespace slim
