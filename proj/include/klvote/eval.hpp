#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "klvote/geometry.hpp"

namespace klvote {

/// Object size bands by box area, COCO cutoffs: small < 32^2 <= medium < 96^2 <= large.
enum class AreaBand { small, medium, large };

AreaBand area_band(double area) noexcept;
const char* to_string(AreaBand band) noexcept;

struct GroundTruthBox {
  Box box;
  int class_id = 0;
  std::int64_t image_id = 0;

  AreaBand band() const noexcept { return area_band(box.area()); }
};

struct EvalDetection {
  Box box;
  double score = 0.0;
  int class_id = 0;
  std::int64_t image_id = 0;
};

/// Greedy matching within one (image, class). Detections are visited by score,
/// descending (lower index first on ties); each takes the unmatched ground truth
/// with the highest IoU >= iou_thresh, lower ground-truth index on ties.
/// Result is aligned with `dets`.
std::vector<std::optional<std::size_t>> match_detections(std::span<const EvalDetection> dets,
                                                         std::span<const GroundTruthBox> gts, double iou_thresh);

struct ScoredMatch {
  double score = 0.0;
  bool true_positive = false;
};

struct PrCurve {
  std::vector<double> precision;  ///< raw precision after each detection
  std::vector<double> recall;
};

/// Precision/recall after each detection, detections taken by score descending
/// (stable, so equal scores keep their given order).
PrCurve pr_curve(std::span<const ScoredMatch> matches, std::size_t n_gt);

/// 101-point interpolated AP: the mean over recall levels 0, 0.01, ..., 1 of
/// the precision envelope (running max from the right) at the first point
/// reaching that recall, 0 where it is never reached. nullopt when n_gt == 0.
std::optional<double> average_precision(std::span<const ScoredMatch> matches, std::size_t n_gt);

struct EvalConfig {
  /// Detections per (image, class) counted for the AP metrics.
  std::size_t max_dets = 100;
};

struct ClassCurve {
  int class_id = 0;
  double iou_thresh = 0.0;
  double ap = 0.0;
  PrCurve curve;
};

/// Metrics use the COCO names: AP averages IoU thresholds 0.50:0.05:0.95,
/// APxx is AP at IoU 0.xx, APs/APm/APl restrict to an area band, ARn is recall
/// with at most n detections per (image, class) averaged over the same
/// thresholds. Each is a mean over classes having ground truth in scope; a
/// metric with no such class is -1.
struct EvalResult {
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<ClassCurve> per_class;  ///< all-area curves per (class, threshold)

  double metric(const std::string& name) const;
};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

/// Names in EvalResult::metrics, in order.
const std::vector<std::string>& metric_names();

/// Throws IdMismatch when a detection refers to an image or class absent from
/// the ground truth, listing the offending ids.
EvalResult evaluate(std::span<const EvalDetection> dets, std::span<const GroundTruthBox> gts,
                    const EvalConfig& cfg = {});

}  // namespace klvote
