#include "klvote/suppress.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "klvote/error.hpp"

namespace klvote {

void SuppressConfig::validate() const {
  if (voting && !(std::isfinite(sigma_t) && sigma_t > 0.0))
    throw ConfigError("sigma_t must be finite and positive when voting is on");
  if (!(nms_iou_thresh > 0.0 && nms_iou_thresh < 1.0))
    throw ConfigError("nms_iou_thresh must lie in (0, 1)");
  if (soft_nms == SoftNms::gaussian && !(std::isfinite(soft_sigma) && soft_sigma > 0.0))
    throw ConfigError("soft_sigma must be finite and positive");
  if (!(std::isfinite(score_floor) && score_floor >= 0.0))
    throw ConfigError("score_floor must be finite and non-negative");
}

namespace {

// Highest current score among `alive`, lower index on ties.
std::size_t argmax_score(const std::vector<std::size_t>& alive, const std::vector<double>& scores) {
  std::size_t best = alive.front();
  for (std::size_t i : alive) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && i < best)) best = i;
  }
  return best;
}

void check_detection(const Detection& d, std::size_t index, bool need_var) {
  const auto where = [&] { return "detection " + std::to_string(index) + ": "; };
  if (!d.box.valid()) throw InvalidInput(where() + "box is non-finite or crossed");
  if (!(d.score >= 0.0 && d.score <= 1.0)) throw InvalidInput(where() + "score outside [0, 1]");
  if (d.var) {
    for (double v : *d.var)
      if (!(std::isfinite(v) && v > 0.0)) throw InvalidInput(where() + "variance must be finite and positive");
  } else if (need_var) {
    throw ConfigError(where() + "voting is on but the detection has no variances");
  }
}

// One class (or everything, when per_class is off). `members` are indices into
// `dets` in input order.
void suppress_group(std::span<const Detection> dets, const std::vector<std::size_t>& members,
                    const SuppressConfig& cfg, std::vector<SuppressedDetection>& out) {
  std::vector<Detection> initial;
  initial.reserve(members.size());
  for (std::size_t i : members) initial.push_back(dets[i]);

  std::vector<double> scores(initial.size());
  for (std::size_t k = 0; k < initial.size(); ++k) scores[k] = initial[k].score;

  std::vector<std::size_t> alive(initial.size());
  for (std::size_t k = 0; k < alive.size(); ++k) alive[k] = k;

  std::vector<SuppressedDetection> emitted;
  std::vector<Detection> pool;
  while (!alive.empty()) {
    const std::size_t m = argmax_score(alive, scores);
    const Box& picked = initial[m].box;

    if (cfg.voting && cfg.vote_pool == VotePool::remaining) {
      pool.clear();
      for (std::size_t k : alive) pool.push_back(initial[k]);
    }
    std::erase(alive, m);

    if (cfg.soft_nms == SoftNms::off) {
      std::erase_if(alive, [&](std::size_t k) { return iou(picked, initial[k].box) > cfg.nms_iou_thresh; });
    } else {
      for (std::size_t k : alive) scores[k] = soft_nms_decay(scores[k], iou(picked, initial[k].box), cfg);
    }

    Detection result = initial[m];
    result.score = scores[m];
    if (cfg.voting) {
      const std::span<const Detection> voters =
          cfg.vote_pool == VotePool::initial ? std::span<const Detection>(initial) : std::span<const Detection>(pool);
      result.box = var_vote(initial[m], voters, cfg.sigma_t);
    }
    emitted.push_back({members[m], result});
  }

  if (cfg.soft_nms != SoftNms::off) {
    std::erase_if(emitted, [&](const SuppressedDetection& s) { return s.det.score < cfg.score_floor; });
  }
  out.insert(out.end(), emitted.begin(), emitted.end());
}

}  // namespace

std::vector<Detection> hard_nms(std::span<const Detection> dets, double thresh) {
  std::vector<std::size_t> alive(dets.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  std::vector<double> scores(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) scores[i] = dets[i].score;

  std::vector<Detection> kept;
  while (!alive.empty()) {
    const std::size_t m = argmax_score(alive, scores);
    std::erase(alive, m);
    std::erase_if(alive, [&](std::size_t k) { return iou(dets[m].box, dets[k].box) > thresh; });
    kept.push_back(dets[m]);
  }
  return kept;
}

double soft_nms_decay(double score, double overlap, const SuppressConfig& cfg) noexcept {
  switch (cfg.soft_nms) {
    case SoftNms::linear:
      return overlap > cfg.nms_iou_thresh ? score * (1.0 - overlap) : score;
    case SoftNms::gaussian:
      return score * std::exp(-overlap * overlap / cfg.soft_sigma);
    case SoftNms::off:
      break;
  }
  return score;
}

Box var_vote(const Detection& selected, std::span<const Detection> pool, double sigma_t) {
  std::array<double, 4> num{};
  std::array<double, 4> den{};
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Detection& d = pool[i];
    const double overlap = iou(d.box, selected.box);
    if (!(overlap > 0.0)) continue;
    if (!d.var) throw ConfigError("var_vote: pool detection " + std::to_string(i) + " has no variances");
    const double gap = 1.0 - overlap;
    const double p = std::exp(-gap * gap / sigma_t);
    for (int c = 0; c < 4; ++c) {
      const double w = p / (*d.var)[c];
      num[c] += w * (d.box[c] - selected.box[c]);
      den[c] += w;
    }
  }
  // Accumulated as offsets from the selected box so a lone self-vote is exact.
  std::array<double, 4> voted = selected.box.coords();
  for (int c = 0; c < 4; ++c) {
    if (den[c] > 0.0) voted[c] += num[c] / den[c];
  }
  return Box::from_coords(voted);
}

std::vector<SuppressedDetection> suppress_indexed(std::span<const Detection> dets, const SuppressConfig& cfg) {
  cfg.validate();
  for (std::size_t i = 0; i < dets.size(); ++i) check_detection(dets[i], i, cfg.voting);

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dets.size(); ++i) groups[cfg.per_class ? dets[i].class_id : 0].push_back(i);

  std::vector<SuppressedDetection> out;
  out.reserve(dets.size());
  for (const auto& [cls, members] : groups) suppress_group(dets, members, cfg, out);

  std::stable_sort(out.begin(), out.end(),
                   [](const SuppressedDetection& a, const SuppressedDetection& b) { return a.det.score > b.det.score; });
  return out;
}

std::vector<Detection> suppress_pipeline(std::span<const Detection> dets, const SuppressConfig& cfg) {
  std::vector<Detection> out;
  for (auto& s : suppress_indexed(dets, cfg)) out.push_back(std::move(s.det));
  return out;
}

}  // namespace klvote
