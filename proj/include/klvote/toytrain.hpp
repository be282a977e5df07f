#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace klvote {

/// A set of noisy annotations of one coordinate: labels are
/// true_coord + N(0, noise_std^2).
struct SyntheticGroup {
  double true_coord = 0.0;
  double noise_std = 0.1;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
};

struct GroupData {
  std::size_t group_id = 0;
  std::vector<double> labels;
  /// Fraction of labels within distance 1 of true_coord, i.e. residuals that
  /// land in the quadratic piece of the loss at the true optimum.
  double quadratic_fraction = 0.0;
};

/// Draws labels with CounterRng(seed). Throws InvalidInput if n_samples < 2
/// or noise_std is not finite and positive.
std::vector<GroupData> generate_groups(std::span<const SyntheticGroup> groups);

enum class FitStatus {
  converged,          ///< gradient norm fell below grad_tol
  variance_collapse,  ///< alpha dropped below collapse_alpha: residuals vanish
  step_cap,           ///< max_steps reached first
  stalled,            ///< no step size down to 2^-60 * learning_rate decreased the loss
};

const char* to_string(FitStatus s) noexcept;

struct FitOptions {
  double learning_rate = 0.05;
  std::size_t max_steps = 100000;
  double grad_tol = 1e-9;
  double collapse_alpha = -30.0;
  /// alpha starts at N(0, init_alpha_std^2) drawn from CounterRng(init_seed);
  /// x_e starts at 0.
  double init_alpha_std = 1e-4;
  std::uint64_t init_seed = 0;
};

struct TrainState {
  double x_e = 0.0;
  double alpha = 0.0;
  std::size_t step = 0;
  /// Current step size after any halvings.
  double learning_rate = 0.0;
  /// Mean loss at the start and after every accepted step.
  std::vector<double> loss_history;
  double grad_norm = 0.0;
  FitStatus status = FitStatus::step_cap;
};

/// Full-batch gradient descent on the mean KL loss over `labels`, jointly in
/// (x_e, alpha), no momentum. The step size starts at learning_rate and is
/// halved whenever a step would raise the mean loss by more than rounding
/// noise (1e-14 relative); it never grows back, so loss_history is
/// non-increasing up to that noise. Throws Divergence if
/// the loss or a parameter becomes non-finite and no smaller step recovers it,
/// and InvalidInput on empty or non-finite labels.
TrainState fit_group(std::span<const double> labels, const FitOptions& opts = {});

struct ReportRow {
  std::size_t group_id = 0;
  double noise_std = 0.0;
  double true_variance = 0.0;     ///< noise_std^2
  double learned_variance = 0.0;  ///< exp(alpha)
  double ratio = 0.0;             ///< learned / true
  double x_e = 0.0;
  std::size_t steps = 0;
  FitStatus status = FitStatus::converged;
};

struct ToyReport {
  std::vector<ReportRow> rows;
  /// Ordering groups by noise_std, every strict increase in noise comes with a
  /// strict increase in learned variance.
  bool rank_agreement = true;
};

ToyReport report(std::span<const SyntheticGroup> groups, std::span<const TrainState> states);

std::string format_report(const ToyReport& r);

}  // namespace klvote
