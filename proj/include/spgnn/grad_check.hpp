#pragma once

#include <functional>
#include <vector>

#include "spgnn/autograd.hpp"

namespace spgnn {

/// Central-difference verification of reverse-mode gradients. `build`
/// must construct the scalar loss on the given graph from the current
/// Parameter values; it is re-invoked on perturbed values. Returns the
/// maximum over all coordinates of |analytic - numeric| /
/// max(1, |analytic|, |numeric|).
double grad_check(const std::function<Var(Graph&)>& build,
                  const std::vector<Parameter*>& params, double eps);

}  // namespace spgnn
