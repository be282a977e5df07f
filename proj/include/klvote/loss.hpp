#pragma once

#include <span>
#include <vector>

namespace klvote {

/// Gaussian over one box coordinate: mean x_e, log-variance alpha = log(sigma^2).
struct GaussianPrediction {
  double x_e = 0.0;
  double alpha = 0.0;
};

enum class LossBranch { quadratic, linear };

/// KL regression loss for one coordinate and its gradients w.r.t. (x_e, alpha).
///
/// `value` omits the parameter-free terms log(2*pi)/2 and the entropy of the
/// Dirac target, so it is only comparable against other values computed here.
struct LossOutput {
  double value = 0.0;
  double d_xe = 0.0;
  double d_alpha = 0.0;
  LossBranch branch = LossBranch::quadratic;
};

/// With e = x_g - x_e:
///   |e| <= 1:  exp(-alpha)/2 * e^2 + alpha/2
///   |e| >  1:  exp(-alpha) * (|e| - 1/2) + alpha/2
/// The two pieces meet at |e| = 1 in value and in both gradients; the boundary
/// itself is assigned to the quadratic piece. Throws InvalidInput on non-finite input.
LossOutput kl_loss(const GaussianPrediction& pred, double x_g);

struct BatchLoss {
  std::vector<LossOutput> per_coord;
  double total = 0.0;  ///< left-to-right sum of per_coord values
};

/// Element-wise kl_loss over the coordinates of one box (normally 4).
/// Throws InvalidInput when the lengths differ.
BatchLoss kl_loss_batch(std::span<const GaussianPrediction> preds, std::span<const double> gts);

double sigma_from_alpha(double alpha) noexcept;     ///< exp(alpha / 2)
double variance_from_alpha(double alpha) noexcept;  ///< exp(alpha)
/// Throws InvalidInput unless sigma is finite and positive.
double alpha_from_sigma(double sigma);
/// Throws InvalidInput unless variance is finite and positive.
double alpha_from_variance(double variance);

/// Gradients in the (x_e, sigma) parameterization of the quadratic piece.
/// Only used to cross-check the alpha gradients through the chain rule.
struct SigmaGradients {
  double d_xe = 0.0;
  double d_sigma = 0.0;
};
SigmaGradients sigma_gradients(double x_e, double sigma, double x_g);

/// Stationary alpha of the mean quadratic-piece loss for fixed residuals:
/// log(mean(r^2)). Throws InvalidInput if any |r| > 1 or non-finite, if the
/// sequence is empty, or if every residual is zero (variance collapse).
double closed_form_minimizer(std::span<const double> residuals);

}  // namespace klvote
