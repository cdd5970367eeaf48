#include "slim/optim.hpp"

#include <cmath>

#include "slim/errors.hpp"

namespace slim {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, real lr, real beta1, real beta2, real eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (params_.empty()) throw ContractError("AdamOptimizer: no parameters");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        if (!p.requires_grad())
            throw StateError("AdamOptimizer: parameter does not track gradients");
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamOptimizer::step() {
    ++t_;
    real bc1 = 1.0 - std::pow(beta1_, static_cast<real>(t_));
    real bc2 = 1.0 - std::pow(beta2_, static_cast<real>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = params_[k];
        auto& g = p.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        auto& w = p.values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            real mhat = m[i] / bc1;
            real vhat = v[i] / bc2;
            w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
        p.zero_grad();
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

real clip_global_norm(std::vector<Tensor>& params, real max_norm) {
    real sq = 0.0;
    for (auto& p : params) {
        for (real g : p.grad()) sq += g * g;
    }
    real norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        real s = max_norm / norm;
        for (auto& p : params)
            for (real& g : p.grad()) g *= s;
    }
    return norm;
}

} // namespace slim
