#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "klvote/eval.hpp"
#include "klvote/suppress.hpp"

namespace klvote {

/// One line of a detection file:
///   {"image_id":1,"category_id":3,"bbox":[x1,y1,x2,y2],"score":0.9,"var":[v1,v2,v3,v4]}
/// bbox is in boundary form; "var" holds sigma^2 per coordinate and is optional.
struct DetectionRecord {
  std::int64_t image_id = 0;
  int category_id = 0;
  Box bbox;
  double score = 0.0;
  std::optional<Variances> var;

  Detection detection() const { return {bbox, score, category_id, var}; }
  EvalDetection eval_detection() const { return {bbox, score, category_id, image_id}; }

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// One line of a ground-truth file: {"image_id":1,"category_id":3,"bbox":[x1,y1,x2,y2]}
struct GroundTruthRecord {
  std::int64_t image_id = 0;
  int category_id = 0;
  Box bbox;

  GroundTruthBox ground_truth() const { return {bbox, category_id, image_id}; }

  friend bool operator==(const GroundTruthRecord&, const GroundTruthRecord&) = default;
};

/// Parses JSON-Lines. Blank lines are skipped. Unknown fields, missing
/// fields, crossed or non-finite boxes, scores outside [0, 1] and
/// non-positive variances are ParseErrors carrying the line number.
/// `lines`, when given, receives the source line of each record.
std::vector<DetectionRecord> parse_detections(std::istream& in, std::vector<std::size_t>* lines = nullptr);
std::vector<GroundTruthRecord> parse_ground_truth(std::istream& in);

/// Reads a file; throws ParseError if it cannot be opened.
std::vector<DetectionRecord> read_detections(const std::string& path, std::vector<std::size_t>* lines = nullptr);
std::vector<GroundTruthRecord> read_ground_truth(const std::string& path);

/// Fixed field order, reals with 17 significant digits, no trailing newline.
std::string serialize(const DetectionRecord& r);
std::string serialize(const GroundTruthRecord& r);

void write_detections(std::ostream& out, std::span<const DetectionRecord> records);

/// printf("%.17g"), which round-trips every finite double.
std::string format_real(double v);

}  // namespace klvote
