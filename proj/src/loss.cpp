#include "klvote/loss.hpp"

#include <cmath>

#include "klvote/error.hpp"

namespace klvote {

LossOutput kl_loss(const GaussianPrediction& pred, double x_g) {
  if (!std::isfinite(pred.x_e) || !std::isfinite(pred.alpha) || !std::isfinite(x_g))
    throw InvalidInput("kl_loss: non-finite input");

  const double e = x_g - pred.x_e;
  const double abs_e = std::abs(e);
  const double inv_var = std::exp(-pred.alpha);

  LossOutput out;
  if (abs_e <= 1.0) {
    const double half_sq = 0.5 * e * e;
    out.value = inv_var * half_sq + 0.5 * pred.alpha;
    out.d_xe = -inv_var * e;
    out.d_alpha = -inv_var * half_sq + 0.5;
    out.branch = LossBranch::quadratic;
  } else {
    const double excess = abs_e - 0.5;
    out.value = inv_var * excess + 0.5 * pred.alpha;
    out.d_xe = e > 0.0 ? -inv_var : inv_var;
    out.d_alpha = -inv_var * excess + 0.5;
    out.branch = LossBranch::linear;
  }
  return out;
}

BatchLoss kl_loss_batch(std::span<const GaussianPrediction> preds, std::span<const double> gts) {
  if (preds.size() != gts.size())
    throw InvalidInput("kl_loss_batch: " + std::to_string(preds.size()) + " predictions vs " +
                       std::to_string(gts.size()) + " targets");
  BatchLoss out;
  out.per_coord.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out.per_coord.push_back(kl_loss(preds[i], gts[i]));
    out.total += out.per_coord.back().value;
  }
  return out;
}

double sigma_from_alpha(double alpha) noexcept { return std::exp(0.5 * alpha); }

double variance_from_alpha(double alpha) noexcept { return std::exp(alpha); }

double alpha_from_sigma(double sigma) {
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw InvalidInput("sigma must be finite and positive");
  return 2.0 * std::log(sigma);
}

double alpha_from_variance(double variance) {
  if (!std::isfinite(variance) || !(variance > 0.0))
    throw InvalidInput("variance must be finite and positive");
  return std::log(variance);
}

SigmaGradients sigma_gradients(double x_e, double sigma, double x_g) {
  if (!std::isfinite(x_e) || !std::isfinite(x_g) || !std::isfinite(sigma) || !(sigma > 0.0))
    throw InvalidInput("sigma_gradients: invalid input");
  const double diff = x_e - x_g;
  const double var = sigma * sigma;
  return {diff / var, -diff * diff / (var * sigma) + 1.0 / sigma};
}

double closed_form_minimizer(std::span<const double> residuals) {
  if (residuals.empty()) throw InvalidInput("closed_form_minimizer: no residuals");
  double sum_sq = 0.0;
  for (double r : residuals) {
    if (!std::isfinite(r) || std::abs(r) > 1.0)
      throw InvalidInput("closed_form_minimizer: residual outside the quadratic branch");
    sum_sq += r * r;
  }
  if (sum_sq == 0.0) throw InvalidInput("closed_form_minimizer: all residuals zero, variance collapses");
  return std::log(sum_sq / static_cast<double>(residuals.size()));
}

}  // namespace klvote
