#pragma once

#include <functional>
#include <vector>

#include "slim/tensor.hpp"

namespace slim {

/// Compare backward() gradients of a scalar function against central finite
/// differences with step h, elementwise over every parameter. The function
/// must be deterministic (dropout off). Relative error uses a denominator
/// floor of 1 so near-zero gradients are compared absolutely.
/// Returns the worst relative error seen.
real grad_check(const std::function<Tensor(Tape&)>& f, const std::vector<Tensor>& params,
                real h = 1e-4);

} // namespace slim
