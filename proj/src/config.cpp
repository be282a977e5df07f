#include "klvote/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "klvote/error.hpp"

namespace klvote {

std::vector<SyntheticGroup> ToyConfig::groups() const {
  std::vector<SyntheticGroup> out;
  for (std::size_t g = 0; g < noise_stds.size(); ++g) out.push_back({true_coord, noise_stds[g], n_samples, seed + g});
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a finite number, got \"" + v + "\"");
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got \"" + v + "\"");
  return out;
}

bool to_switch(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected on or off, got \"" + v + "\"");
}

}  // namespace

std::vector<double> parse_real_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    const std::string item = trim(csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    out.push_back(to_real("list", item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  SuppressConfig& s = cfg.suppress;
  if (key == "sigma_t") {
    s.sigma_t = to_real(key, value);
  } else if (key == "soft_nms") {
    if (value == "off") s.soft_nms = SoftNms::off;
    else if (value == "linear") s.soft_nms = SoftNms::linear;
    else if (value == "gaussian") s.soft_nms = SoftNms::gaussian;
    else throw ConfigError("soft_nms: expected off, linear or gaussian, got \"" + value + "\"");
  } else if (key == "soft_sigma") {
    s.soft_sigma = to_real(key, value);
  } else if (key == "nms_iou_thresh") {
    s.nms_iou_thresh = to_real(key, value);
  } else if (key == "score_floor") {
    s.score_floor = to_real(key, value);
  } else if (key == "voting") {
    s.voting = to_switch(key, value);
  } else if (key == "vote_pool") {
    if (value == "initial") s.vote_pool = VotePool::initial;
    else if (value == "remaining") s.vote_pool = VotePool::remaining;
    else throw ConfigError("vote_pool: expected initial or remaining, got \"" + value + "\"");
  } else if (key == "per_class") {
    s.per_class = to_switch(key, value);
  } else if (key == "in") {
    cfg.in_path = value;
  } else if (key == "out") {
    cfg.out_path = value;
  } else if (key == "max_dets") {
    cfg.eval.max_dets = to_count(key, value);
    if (cfg.eval.max_dets == 0) throw ConfigError("max_dets must be positive");
  } else if (key == "noise_stds") {
    cfg.toy.noise_stds = parse_real_list(value);
  } else if (key == "n_samples") {
    cfg.toy.n_samples = to_count(key, value);
  } else if (key == "true_coord") {
    cfg.toy.true_coord = to_real(key, value);
  } else if (key == "seed") {
    cfg.toy.seed = to_count(key, value);
    cfg.toy.fit.init_seed = cfg.toy.seed;
  } else if (key == "learning_rate") {
    cfg.toy.fit.learning_rate = to_real(key, value);
    if (!(cfg.toy.fit.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  } else if (key == "max_steps") {
    cfg.toy.fit.max_steps = to_count(key, value);
  } else {
    throw ConfigError("unknown config key \"" + key + "\"");
  }
}

void parse_config(std::istream& in, RunConfig& cfg) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    const auto hash = text.find('#');
    if (hash != std::string::npos) text.erase(hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line) + ": expected key=value");
    try {
      apply_setting(cfg, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line) + ": " + e.what());
    }
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path);
  RunConfig cfg;
  parse_config(in, cfg);
  return cfg;
}

}  // namespace klvote
