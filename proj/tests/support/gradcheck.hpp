#pragma once

// Central-difference gradient oracle, independent of the reverse-mode path
// it checks. Rebuilds the forward from scratch at every probe point.

#include <cmath>
#include <functional>
#include <vector>

#include "stf/tensor.hpp"

namespace stf::test {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

// loss: evaluates the scalar loss from the current leaf values.
// leaves: tensors the loss depends on; analytic: matching gradients.
inline GradCheckResult finite_difference_check(
    const std::function<double(const std::vector<Tensor>&)>& loss, std::vector<Tensor> leaves,
    const std::vector<Tensor>& analytic, double step = 1e-5) {
    GradCheckResult result;
    for (std::size_t p = 0; p < leaves.size(); ++p) {
        for (std::size_t i = 0; i < leaves[p].size(); ++i) {
            const double original = leaves[p][i];
            leaves[p][i] = original + step;
            const double up = loss(leaves);
            leaves[p][i] = original - step;
            const double down = loss(leaves);
            leaves[p][i] = original;
            const double numeric = (up - down) / (2.0 * step);
            const double rel = std::fabs(analytic[p][i] - numeric) / (std::fabs(numeric) + 1e-8);
            result.max_rel_error = std::max(result.max_rel_error, rel);
            ++result.checked;
        }
    }
    return result;
}

}  // namespace stf::test
