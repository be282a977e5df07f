#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "klvote/config.hpp"
#include "klvote/eval.hpp"
#include "klvote/records.hpp"

namespace klvote::cli {

/// Process exit codes. Part of the public interface; do not renumber.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  ///< ran to completion but the check it performs did not hold
  kParse = 2,    ///< unreadable file, malformed record, bad command line
  kConfig = 3,   ///< invalid config, or input violating it
  kIdMismatch = 4,
  kGradcheck = 5,
  kDivergence = 6,
};

/// Runs `klvote <args...>` (args exclude the program name). Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Suppression applied image by image. Output is ordered by image_id, then by
/// final score descending.
std::vector<DetectionRecord> suppress_records(std::span<const DetectionRecord> records, const SuppressConfig& cfg);

EvalResult evaluate_records(std::span<const DetectionRecord> dets, std::span<const GroundTruthRecord> gts,
                            const EvalConfig& cfg = {});

std::string format_metrics_table(const EvalResult& r);
/// {"AP":...,"AP50":...,...} on one line, metric_names() order.
std::string metrics_json(const EvalResult& r);

}  // namespace klvote::cli
