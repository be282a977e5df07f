#include "klvote/eval.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "klvote/error.hpp"

namespace klvote {

AreaBand area_band(double area) noexcept {
  if (area < 32.0 * 32.0) return AreaBand::small;
  if (area < 96.0 * 96.0) return AreaBand::medium;
  return AreaBand::large;
}

const char* to_string(AreaBand band) noexcept {
  switch (band) {
    case AreaBand::small:
      return "small";
    case AreaBand::medium:
      return "medium";
    case AreaBand::large:
      return "large";
  }
  return "?";
}

namespace {

// Visit order for greedy matching: score descending, index ascending.
std::vector<std::size_t> score_order(std::span<const EvalDetection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

// Best unmatched ground truth with IoU >= thresh among those with the given
// ignore flag. Lower index wins ties.
std::optional<std::size_t> best_gt(const Box& box, std::span<const GroundTruthBox> gts,
                                   const std::vector<bool>& taken, const std::vector<bool>& ignore,
                                   bool want_ignored, double thresh) {
  std::optional<std::size_t> best;
  double best_iou = thresh;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (taken[g] || ignore[g] != want_ignored) continue;
    const double o = iou(box, gts[g].box);
    if (o < thresh) continue;
    if (!best || o > best_iou) {
      best = g;
      best_iou = o;
    }
  }
  return best;
}

enum class Outcome { true_positive, false_positive, ignored };

// COCO-style matching with ignore flags. `dets` must already be in visit order.
// Detections prefer non-ignored ground truth; one matched to ignored ground
// truth, or unmatched and outside the area band, is ignored.
std::vector<Outcome> match_with_ignore(std::span<const EvalDetection> dets, std::span<const GroundTruthBox> gts,
                                       const std::vector<bool>& gt_ignore, double thresh,
                                       std::optional<AreaBand> band) {
  std::vector<bool> taken(gts.size(), false);
  std::vector<Outcome> out;
  out.reserve(dets.size());
  for (const EvalDetection& d : dets) {
    auto g = best_gt(d.box, gts, taken, gt_ignore, false, thresh);
    if (g) {
      taken[*g] = true;
      out.push_back(Outcome::true_positive);
      continue;
    }
    g = best_gt(d.box, gts, taken, gt_ignore, true, thresh);
    if (g) {
      taken[*g] = true;
      out.push_back(Outcome::ignored);
      continue;
    }
    const bool out_of_band = band && area_band(d.box.area()) != *band;
    out.push_back(out_of_band ? Outcome::ignored : Outcome::false_positive);
  }
  return out;
}

double mean_or_undefined(const std::vector<double>& v) {
  if (v.empty()) return -1.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct Cell {
  std::vector<EvalDetection> dets;  // score-sorted
  std::vector<GroundTruthBox> gts;
};

}  // namespace

std::vector<std::optional<std::size_t>> match_detections(std::span<const EvalDetection> dets,
                                                         std::span<const GroundTruthBox> gts, double iou_thresh) {
  std::vector<std::optional<std::size_t>> result(dets.size());
  std::vector<bool> taken(gts.size(), false);
  const std::vector<bool> no_ignore(gts.size(), false);
  for (std::size_t i : score_order(dets)) {
    const auto g = best_gt(dets[i].box, gts, taken, no_ignore, false, iou_thresh);
    if (g) {
      taken[*g] = true;
      result[i] = g;
    }
  }
  return result;
}

PrCurve pr_curve(std::span<const ScoredMatch> matches, std::size_t n_gt) {
  std::vector<std::size_t> order(matches.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return matches[a].score > matches[b].score; });
  PrCurve c;
  c.precision.reserve(order.size());
  c.recall.reserve(order.size());
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i : order) {
    ++seen;
    if (matches[i].true_positive) ++tp;
    c.precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    c.recall.push_back(n_gt ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0);
  }
  return c;
}

std::optional<double> average_precision(std::span<const ScoredMatch> matches, std::size_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  PrCurve c = pr_curve(matches, n_gt);
  std::vector<double> envelope = c.precision;
  for (std::size_t i = envelope.size(); i-- > 1;) envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);

  double sum = 0.0;
  for (int j = 0; j <= 100; ++j) {
    const double level = j / 100.0;
    const auto it = std::lower_bound(c.recall.begin(), c.recall.end(), level);
    if (it != c.recall.end()) sum += envelope[static_cast<std::size_t>(it - c.recall.begin())];
  }
  return sum / 101.0;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"AP",   "AP50", "AP60", "AP70", "AP75", "AP80", "AP90",
                                              "APs",  "APm",  "APl",  "AR1",  "AR10", "AR100"};
  return names;
}

double EvalResult::metric(const std::string& name) const {
  for (const auto& [n, v] : metrics)
    if (n == name) return v;
  throw std::out_of_range("unknown metric " + name);
}

EvalResult evaluate(std::span<const EvalDetection> dets, std::span<const GroundTruthBox> gts, const EvalConfig& cfg) {
  std::set<std::int64_t> gt_images;
  std::set<int> gt_classes;
  for (const auto& g : gts) {
    gt_images.insert(g.image_id);
    gt_classes.insert(g.class_id);
  }
  std::set<std::int64_t> bad_images;
  std::set<int> bad_classes;
  for (const auto& d : dets) {
    if (!gt_images.contains(d.image_id)) bad_images.insert(d.image_id);
    if (!gt_classes.contains(d.class_id)) bad_classes.insert(d.class_id);
  }
  if (!bad_images.empty() || !bad_classes.empty()) {
    std::ostringstream os;
    os << "detections reference ids absent from the ground truth;";
    if (!bad_images.empty()) {
      os << " image_id:";
      for (auto id : bad_images) os << ' ' << id;
    }
    if (!bad_classes.empty()) {
      os << (bad_images.empty() ? "" : ";") << " category_id:";
      for (auto id : bad_classes) os << ' ' << id;
    }
    throw IdMismatch(os.str());
  }

  // Cells keyed by (class, image). Detections are put in a canonical order so
  // the result never depends on input order.
  std::map<std::pair<int, std::int64_t>, Cell> cells;
  for (const auto& g : gts) cells[{g.class_id, g.image_id}].gts.push_back(g);
  for (const auto& d : dets) cells[{d.class_id, d.image_id}].dets.push_back(d);
  for (auto& [key, cell] : cells) {
    std::stable_sort(cell.dets.begin(), cell.dets.end(), [](const EvalDetection& a, const EvalDetection& b) {
      return std::tuple(-a.score, a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
             std::tuple(-b.score, b.box.x1, b.box.y1, b.box.x2, b.box.y2);
    });
  }

  const std::vector<double> thresholds = coco_iou_thresholds();
  const std::optional<AreaBand> bands[] = {std::nullopt, AreaBand::small, AreaBand::medium, AreaBand::large};
  const std::size_t ar_caps[] = {1, 10, 100};

  EvalResult result;
  // ap[band][threshold] -> per-class APs; ar[cap] -> per-class mean recall.
  std::vector<std::vector<std::vector<double>>> ap(4, std::vector<std::vector<double>>(thresholds.size()));
  std::vector<std::vector<double>> ar(3);

  for (int cls : gt_classes) {
    const auto first = cells.lower_bound({cls, std::numeric_limits<std::int64_t>::min()});
    const auto last = cells.lower_bound({cls + 1, std::numeric_limits<std::int64_t>::min()});

    for (std::size_t b = 0; b < 4; ++b) {
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        std::vector<ScoredMatch> scored;
        std::size_t n_gt = 0;
        for (auto it = first; it != last; ++it) {
          const Cell& cell = it->second;
          std::vector<bool> ignore(cell.gts.size());
          for (std::size_t g = 0; g < cell.gts.size(); ++g) {
            ignore[g] = bands[b] && cell.gts[g].band() != *bands[b];
            if (!ignore[g]) ++n_gt;
          }
          const std::size_t n = std::min(cell.dets.size(), cfg.max_dets);
          const auto outcome = match_with_ignore(std::span(cell.dets).first(n), cell.gts, ignore, thresholds[t], bands[b]);
          for (std::size_t i = 0; i < n; ++i) {
            if (outcome[i] == Outcome::ignored) continue;
            scored.push_back({cell.dets[i].score, outcome[i] == Outcome::true_positive});
          }
        }
        const auto value = average_precision(scored, n_gt);
        if (!value) continue;
        ap[b][t].push_back(*value);
        if (b == 0) result.per_class.push_back({cls, thresholds[t], *value, pr_curve(scored, n_gt)});
      }
    }

    for (std::size_t c = 0; c < 3; ++c) {
      double recall_sum = 0.0;
      std::size_t n_gt = 0;
      for (auto it = first; it != last; ++it) n_gt += it->second.gts.size();
      for (double thresh : thresholds) {
        std::size_t tp = 0;
        for (auto it = first; it != last; ++it) {
          const Cell& cell = it->second;
          const std::size_t n = std::min(cell.dets.size(), ar_caps[c]);
          const std::vector<bool> no_ignore(cell.gts.size(), false);
          const auto outcome = match_with_ignore(std::span(cell.dets).first(n), cell.gts, no_ignore, thresh, std::nullopt);
          tp += static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), Outcome::true_positive));
        }
        recall_sum += static_cast<double>(tp) / static_cast<double>(n_gt);
      }
      ar[c].push_back(recall_sum / static_cast<double>(thresholds.size()));
    }
  }

  auto mean_over_thresholds = [&](std::size_t b) {
    std::vector<double> per_threshold;
    for (const auto& v : ap[b])
      if (!v.empty()) per_threshold.push_back(mean_or_undefined(v));
    // Every threshold sees the same classes, so this equals the mean of
    // per-class means.
    return mean_or_undefined(per_threshold);
  };
  auto at_threshold = [&](int percent) {
    const auto idx = static_cast<std::size_t>((percent - 50) / 5);
    return mean_or_undefined(ap[0][idx]);
  };

  result.metrics = {
      {"AP", mean_over_thresholds(0)}, {"AP50", at_threshold(50)},  {"AP60", at_threshold(60)},
      {"AP70", at_threshold(70)},      {"AP75", at_threshold(75)},  {"AP80", at_threshold(80)},
      {"AP90", at_threshold(90)},      {"APs", mean_over_thresholds(1)}, {"APm", mean_over_thresholds(2)},
      {"APl", mean_over_thresholds(3)}, {"AR1", mean_or_undefined(ar[0])}, {"AR10", mean_or_undefined(ar[1])},
      {"AR100", mean_or_undefined(ar[2])},
  };
  return result;
}

}  // namespace klvote
