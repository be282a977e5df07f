#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "klvote/eval.hpp"
#include "klvote/suppress.hpp"
#include "klvote/toytrain.hpp"

namespace klvote {

/// Settings for the synthetic variance-recovery run. Group g draws its labels
/// with seed `seed + g`.
struct ToyConfig {
  std::vector<double> noise_stds{0.05, 0.1, 0.2, 0.3};
  std::size_t n_samples = 10000;
  double true_coord = 0.5;
  std::uint64_t seed = 1;
  FitOptions fit;

  std::vector<SyntheticGroup> groups() const;
};

struct RunConfig {
  SuppressConfig suppress;
  EvalConfig eval;
  ToyConfig toy;
  std::string in_path;
  std::string out_path;
};

/// Applies one `key=value` setting. Throws ConfigError for unknown keys and
/// malformed values.
///
/// Keys: sigma_t, soft_nms (off|linear|gaussian), soft_sigma, nms_iou_thresh,
/// score_floor, voting (on|off), vote_pool (initial|remaining), per_class
/// (on|off), in, out, max_dets, noise_stds (comma list), n_samples,
/// true_coord, seed, learning_rate, max_steps.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key=value` lines; `#` starts a comment, blank lines are ignored.
/// Later lines override earlier ones.
void parse_config(std::istream& in, RunConfig& cfg);

/// Throws ParseError if the file cannot be opened.
RunConfig load_config(const std::string& path);

/// Comma-separated reals. Throws ConfigError on malformed input.
std::vector<double> parse_real_list(const std::string& csv);

}  // namespace klvote
