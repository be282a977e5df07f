#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "klvote/geometry.hpp"

namespace klvote {

/// Per-coordinate localization variances sigma^2 for (x1, y1, x2, y2),
/// in squared pixels.
using Variances = std::array<double, 4>;

struct Detection {
  Box box;
  double score = 0.0;
  int class_id = 0;
  /// Absent for plain detector output; required whenever voting is on.
  std::optional<Variances> var;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class SoftNms { off, linear, gaussian };

/// Which boxes a selected detection votes against.
enum class VotePool {
  initial,    ///< every detection of the class as given on input (default)
  remaining,  ///< the selected detection plus the not-yet-selected ones
};

/// Defaults: sigma_t = 0.02, Gaussian soft-NMS with width 0.5, scores below
/// 0.001 dropped after decay, voting on. Useful sigma_t values lie roughly in
/// [0.005, 0.05].
struct SuppressConfig {
  double sigma_t = 0.02;
  SoftNms soft_nms = SoftNms::gaussian;
  double soft_sigma = 0.5;
  double nms_iou_thresh = 0.5;
  double score_floor = 0.001;
  bool voting = true;
  VotePool vote_pool = VotePool::initial;
  /// When false all classes are suppressed together as one.
  bool per_class = true;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

/// Greedy NMS over detections of a single class. Keeps the highest score,
/// removes neighbors with IoU > thresh, repeats. Score ties go to the lower
/// input index. Output is in selection order (descending score).
std::vector<Detection> hard_nms(std::span<const Detection> dets, double thresh);

/// Soft-NMS rescoring of a neighbor at overlap `overlap` with the selected box.
///   linear:   score * (1 - iou) when iou > nms_iou_thresh, else score
///   gaussian: score * exp(-iou^2 / soft_sigma)
///   off:      score
double soft_nms_decay(double score, double overlap, const SuppressConfig& cfg) noexcept;

/// Variance voting. Each coordinate of the selected box becomes
///
///   x = sum_i p_i x_i / var_i  /  sum_i p_i / var_i,
///   p_i = exp(-(1 - IoU(b_i, b))^2 / sigma_t),
///
/// over pool members with IoU(b_i, b) > 0. Scores play no part. If the
/// selected box has zero area (so nothing overlaps it) or every weight
/// underflows, the selected box is returned as is.
/// Throws ConfigError if a contributing detection has no variances.
Box var_vote(const Detection& selected, std::span<const Detection> pool, double sigma_t);

struct SuppressedDetection {
  std::size_t source_index = 0;  ///< position in the pipeline input
  Detection det;
};

/// Full suppression loop, per class unless cfg.per_class is false:
///   pick the remaining detection with the highest current score,
///   decay (soft modes) or delete (hard mode) the remaining overlaps,
///   optionally replace the picked box by its vote, emit it.
/// Soft modes drop detections whose decayed score ends below score_floor,
/// after the loop. Output is sorted by final score, descending (stable).
/// Throws ConfigError on an invalid config, on invalid detections, or when
/// voting is on and some detection lacks variances.
std::vector<SuppressedDetection> suppress_indexed(std::span<const Detection> dets, const SuppressConfig& cfg);

std::vector<Detection> suppress_pipeline(std::span<const Detection> dets, const SuppressConfig& cfg);

}  // namespace klvote
