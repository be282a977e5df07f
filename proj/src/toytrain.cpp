#include "klvote/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "klvote/error.hpp"
#include "klvote/loss.hpp"
#include "klvote/random.hpp"

namespace klvote {

std::vector<GroupData> generate_groups(std::span<const SyntheticGroup> groups) {
  std::vector<GroupData> out;
  out.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const SyntheticGroup& group = groups[g];
    if (group.n_samples < 2) throw InvalidInput("group " + std::to_string(g) + ": n_samples must be at least 2");
    if (!std::isfinite(group.noise_std) || !(group.noise_std > 0.0))
      throw InvalidInput("group " + std::to_string(g) + ": noise_std must be finite and positive");
    if (!std::isfinite(group.true_coord)) throw InvalidInput("group " + std::to_string(g) + ": true_coord not finite");

    GroupData data;
    data.group_id = g;
    data.labels.reserve(group.n_samples);
    CounterRng rng(group.seed);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < group.n_samples; ++i) {
      const double noise = group.noise_std * rng.next_normal();
      data.labels.push_back(group.true_coord + noise);
      if (std::abs(noise) <= 1.0) ++inside;
    }
    data.quadratic_fraction = static_cast<double>(inside) / static_cast<double>(group.n_samples);
    out.push_back(std::move(data));
  }
  return out;
}

const char* to_string(FitStatus s) noexcept {
  switch (s) {
    case FitStatus::converged:
      return "converged";
    case FitStatus::variance_collapse:
      return "variance_collapse";
    case FitStatus::step_cap:
      return "step_cap";
    case FitStatus::stalled:
      return "stalled";
  }
  return "?";
}

namespace {

struct Objective {
  double value = 0.0;
  double d_xe = 0.0;
  double d_alpha = 0.0;
};

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Mean of kl_loss over the labels. Compensated sums keep the rounding noise in
// the mean near one ulp, so the descent test below can tell real increases
// from noise.
Objective mean_loss(std::span<const double> labels, double x_e, double alpha) {
  CompensatedSum value, d_xe, d_alpha;
  for (double label : labels) {
    const LossOutput l = kl_loss({x_e, alpha}, label);
    value.add(l.value);
    d_xe.add(l.d_xe);
    d_alpha.add(l.d_alpha);
  }
  const double n = static_cast<double>(labels.size());
  return {value.value() / n, d_xe.value() / n, d_alpha.value() / n};
}

constexpr int kMaxHalvings = 60;
constexpr double kRoundoff = 1e-14;

}  // namespace

TrainState fit_group(std::span<const double> labels, const FitOptions& opts) {
  if (labels.empty()) throw InvalidInput("fit_group: no labels");
  for (double l : labels)
    if (!std::isfinite(l)) throw InvalidInput("fit_group: non-finite label");
  if (!(opts.learning_rate > 0.0) || !std::isfinite(opts.learning_rate))
    throw InvalidInput("fit_group: learning_rate must be finite and positive");

  TrainState st;
  CounterRng rng(opts.init_seed);
  st.x_e = 0.0;
  st.alpha = opts.init_alpha_std * rng.next_normal();
  st.learning_rate = opts.learning_rate;

  Objective cur = mean_loss(labels, st.x_e, st.alpha);
  st.loss_history.push_back(cur.value);

  for (;;) {
    st.grad_norm = std::hypot(cur.d_xe, cur.d_alpha);
    if (st.grad_norm < opts.grad_tol) {
      st.status = FitStatus::converged;
      return st;
    }
    if (st.alpha < opts.collapse_alpha) {
      st.status = FitStatus::variance_collapse;
      return st;
    }
    if (st.step >= opts.max_steps) {
      st.status = FitStatus::step_cap;
      return st;
    }

    double lr = st.learning_rate;
    bool accepted = false;
    bool saw_non_finite = false;
    for (int h = 0; h <= kMaxHalvings; ++h, lr *= 0.5) {
      const double x_e = st.x_e - lr * cur.d_xe;
      const double alpha = st.alpha - lr * cur.d_alpha;
      if (!std::isfinite(x_e) || !std::isfinite(alpha)) {
        saw_non_finite = true;
        continue;
      }
      const Objective next = mean_loss(labels, x_e, alpha);
      if (!std::isfinite(next.value)) {
        saw_non_finite = true;
        continue;
      }
      if (next.value <= cur.value + kRoundoff * std::max(1.0, std::abs(cur.value))) {
        st.x_e = x_e;
        st.alpha = alpha;
        st.learning_rate = lr;
        cur = next;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (saw_non_finite) {
        std::ostringstream os;
        os.precision(17);
        os << "fit_group diverged at step " << st.step << " (x_e=" << st.x_e << ", alpha=" << st.alpha << ")";
        throw Divergence(os.str());
      }
      st.status = FitStatus::stalled;
      return st;
    }
    ++st.step;
    st.loss_history.push_back(cur.value);
  }
}

ToyReport report(std::span<const SyntheticGroup> groups, std::span<const TrainState> states) {
  if (groups.size() != states.size()) throw InvalidInput("report: groups and states differ in length");
  ToyReport r;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ReportRow row;
    row.group_id = g;
    row.noise_std = groups[g].noise_std;
    row.true_variance = groups[g].noise_std * groups[g].noise_std;
    row.learned_variance = variance_from_alpha(states[g].alpha);
    row.ratio = row.learned_variance / row.true_variance;
    row.x_e = states[g].x_e;
    row.steps = states[g].step;
    row.status = states[g].status;
    r.rows.push_back(row);
  }

  std::vector<std::size_t> order(r.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.rows[a].noise_std < r.rows[b].noise_std; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const ReportRow& lo = r.rows[order[k - 1]];
    const ReportRow& hi = r.rows[order[k]];
    if (hi.noise_std > lo.noise_std && !(hi.learned_variance > lo.learned_variance)) r.rank_agreement = false;
  }
  return r;
}

std::string format_report(const ToyReport& r) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%5s %10s %12s %14s %9s %11s %7s  %s\n", "group", "noise_std", "noise_var",
                "learned_var", "ratio", "x_e", "steps", "status");
  out += line;
  for (const ReportRow& row : r.rows) {
    std::snprintf(line, sizeof line, "%5zu %10.4f %12.6e %14.6e %9.5f %11.6f %7zu  %s\n", row.group_id, row.noise_std,
                  row.true_variance, row.learned_variance, row.ratio, row.x_e, row.steps, to_string(row.status));
    out += line;
  }
  out += r.rank_agreement ? "rank agreement: yes\n" : "rank agreement: NO\n";
  return out;
}

}  // namespace klvote
