#include "klvote/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "klvote/random.hpp"

namespace klvote {
namespace {

double rel_error(double analytic, double numeric) {
  const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.next_open01(); }

void check_case(const LossFn& loss, const GaussianPrediction& p, double x_g, double h, BranchCheck& out) {
  const LossOutput analytic = loss(p, x_g);
  const double num_xe =
      (loss({p.x_e + h, p.alpha}, x_g).value - loss({p.x_e - h, p.alpha}, x_g).value) / (2.0 * h);
  const double num_alpha =
      (loss({p.x_e, p.alpha + h}, x_g).value - loss({p.x_e, p.alpha - h}, x_g).value) / (2.0 * h);
  const double err = std::max(rel_error(analytic.d_xe, num_xe), rel_error(analytic.d_alpha, num_alpha));
  ++out.cases;
  if (err > out.max_rel_error || out.cases == 1) {
    out.max_rel_error = std::max(out.max_rel_error, err);
    out.x_e = p.x_e;
    out.alpha = p.alpha;
    out.x_g = x_g;
  }
}

}  // namespace

GradcheckReport gradcheck(const GradcheckOptions& opts, const LossFn& loss) {
  GradcheckReport report;
  report.tolerance = opts.tolerance;
  CounterRng rng(opts.seed);
  const double m = opts.branch_margin;

  for (std::size_t i = 0; i < opts.cases_per_branch; ++i) {
    // Quadratic piece: |e| <= 1 - margin.
    const double x_e = uniform(rng, -3.0, 3.0);
    const double alpha = uniform(rng, -3.0, 3.0);
    const double e = uniform(rng, -(1.0 - m), 1.0 - m);
    check_case(loss, {x_e, alpha}, x_e + e, opts.step, report.quadratic);
  }
  for (std::size_t i = 0; i < opts.cases_per_branch; ++i) {
    // Linear piece: 1 + margin <= |e| <= 4.
    const double x_e = uniform(rng, -3.0, 3.0);
    const double alpha = uniform(rng, -3.0, 3.0);
    const double mag = uniform(rng, 1.0 + m, 4.0);
    const double e = rng.next_open01() < 0.5 ? -mag : mag;
    check_case(loss, {x_e, alpha}, x_e + e, opts.step, report.linear);
  }
  return report;
}

}  // namespace klvote
