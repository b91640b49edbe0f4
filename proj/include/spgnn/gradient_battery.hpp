#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spgnn {

struct GradCaseResult {
    std::string name;
    double max_err = 0.0;  // worst central-difference relative error over all seeds
};

// Central-difference verification of every differentiable operation, one
// named case per operation family. Each case runs `seeds` random instances
// (eps 1e-3) and reports the worst relative error; well under a minute on
// one core.
std::vector<GradCaseResult> run_gradient_battery(int seeds = 5, std::uint64_t seed0 = 1000);

}  // namespace spgnn
