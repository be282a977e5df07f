#pragma once

#include <cstdint>
#include <functional>

#include "klvote/loss.hpp"

namespace klvote {

/// Worst disagreement between analytic and central-difference gradients
/// within one loss branch.
struct BranchCheck {
  std::size_t cases = 0;
  double max_rel_error = 0.0;
  // Location of the worst case.
  double x_e = 0.0;
  double alpha = 0.0;
  double x_g = 0.0;
};

struct GradcheckReport {
  BranchCheck quadratic;
  BranchCheck linear;
  double tolerance = 0.0;
  bool passed() const noexcept {
    return quadratic.max_rel_error <= tolerance && linear.max_rel_error <= tolerance;
  }
};

using LossFn = std::function<LossOutput(const GaussianPrediction&, double)>;

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t cases_per_branch = 2000;
  double step = 1e-6;
  double tolerance = 1e-6;
  /// Residuals are kept at least this far from the branch point |e| = 1.
  double branch_margin = 1e-3;
};

/// Compares analytic (d_xe, d_alpha) from `loss` against central differences
/// of `loss(...).value`. Relative error is |a - n| / max(1, |a|, |n|), which
/// degrades to an absolute check for gradients near zero.
GradcheckReport gradcheck(const GradcheckOptions& opts, const LossFn& loss = kl_loss);

}  // namespace klvote
