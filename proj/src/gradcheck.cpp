#include "slim/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace slim {

real grad_check(const std::function<Tensor(Tape&)>& f, const std::vector<Tensor>& params, real h) {
    for (auto p : params) p.zero_grad();
    std::vector<std::vector<real>> analytic;
    {
        Tape tape;
        Tensor loss = f(tape);
        tape.backward(loss);
        analytic.reserve(params.size());
        for (const auto& p : params) analytic.push_back(p.grad());
    }
    real worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor p = params[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            real orig = p.values()[i];
            p.values()[i] = orig + h;
            real lp;
            {
                Tape t(false);
                lp = f(t).item();
            }
            p.values()[i] = orig - h;
            real lm;
            {
                Tape t(false);
                lm = f(t).item();
            }
            p.values()[i] = orig;
            real numeric = (lp - lm) / (2.0 * h);
            real a = analytic[k][i];
            real err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), real{1}});
            worst = std::max(worst, err);
        }
    }
    for (auto p : params) p.zero_grad();
    return worst;
}

} // namespace slim
