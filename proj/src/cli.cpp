#include "klvote/cli.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "klvote/error.hpp"
#include "klvote/gradcheck.hpp"
#include "klvote/toytrain.hpp"

namespace klvote::cli {
namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write " + path);
  f << content;
  if (!f) throw ParseError("failed writing " + path);
}

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

// Rejects voting on records without variances, naming the first offender.
void require_variances(std::span<const DetectionRecord> records, std::span<const std::size_t> lines) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].var) continue;
    std::ostringstream os;
    os << "voting is on but the record at line " << (i < lines.size() ? lines[i] : i + 1)
       << " (image_id " << records[i].image_id << ", category_id " << records[i].category_id << ") has no var";
    throw ConfigError(os.str());
  }
}

struct Overrides {
  std::string sigma_t;
  std::string soft;
  std::string vote;

  void apply(RunConfig& cfg) const {
    if (!sigma_t.empty()) apply_setting(cfg, "sigma_t", sigma_t);
    if (!soft.empty()) apply_setting(cfg, "soft_nms", soft);
    if (!vote.empty()) apply_setting(cfg, "voting", vote);
  }
};

int do_suppress(std::string in_path, std::string out_path, const std::string& config_path, const Overrides& ov,
                std::ostream& out) {
  RunConfig cfg = config_from(config_path);
  ov.apply(cfg);
  if (in_path.empty()) in_path = cfg.in_path;
  if (out_path.empty()) out_path = cfg.out_path;
  if (in_path.empty() || out_path.empty()) throw ParseError("suppress needs --in and --out (or in/out config keys)");
  cfg.suppress.validate();

  std::vector<std::size_t> lines;
  const auto records = read_detections(in_path, &lines);
  if (cfg.suppress.voting) require_variances(records, lines);

  const auto kept = suppress_records(records, cfg.suppress);

  std::ostringstream body;
  write_detections(body, kept);
  write_file(out_path, body.str());

  std::map<int, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& r : records) ++counts[r.category_id].first;
  for (const auto& r : kept) ++counts[r.category_id].second;
  char line[96];
  std::snprintf(line, sizeof line, "%11s %8s %8s\n", "category_id", "in", "out");
  out << line;
  for (const auto& [cls, c] : counts) {
    std::snprintf(line, sizeof line, "%11d %8zu %8zu\n", cls, c.first, c.second);
    out << line;
  }
  return kOk;
}

int do_eval(const std::string& det_path, const std::string& gt_path, std::string json_path,
            const std::string& config_path, std::ostream& out) {
  const RunConfig cfg = config_from(config_path);
  const auto gts = read_ground_truth(gt_path);
  const auto dets = read_detections(det_path);
  const EvalResult r = evaluate_records(dets, gts, cfg.eval);
  out << format_metrics_table(r);
  if (json_path.empty()) json_path = det_path + ".metrics.json";
  write_file(json_path, metrics_json(r) + "\n");
  return kOk;
}

int do_gradcheck(std::uint64_t seed, std::size_t cases, double perturb, std::ostream& out, std::ostream& err) {
  if (cases == 0) {
    err << "warning: gradcheck with 0 cases checks nothing\n";
    out << "gradcheck: 0 cases, vacuously passed\n";
    return kOk;
  }
  GradcheckOptions opts;
  opts.seed = seed;
  opts.cases_per_branch = cases;
  LossFn loss = kl_loss;
  if (perturb != 0.0) {
    loss = [perturb](const GaussianPrediction& p, double x_g) {
      LossOutput l = kl_loss(p, x_g);
      l.d_xe *= 1.0 + perturb;
      l.d_alpha *= 1.0 + perturb;
      return l;
    };
  }
  const GradcheckReport rep = gradcheck(opts, loss);

  char line[160];
  std::snprintf(line, sizeof line, "%-10s %8s %14s\n", "branch", "cases", "max_rel_error");
  out << line;
  for (const auto& [name, b] : {std::pair{"quadratic", rep.quadratic}, std::pair{"linear", rep.linear}}) {
    std::snprintf(line, sizeof line, "%-10s %8zu %14.6e\n", name, b.cases, b.max_rel_error);
    out << line;
  }
  if (rep.passed()) {
    out << "PASS (tolerance " << rep.tolerance << ")\n";
    return kOk;
  }
  const bool quad_worse = rep.quadratic.max_rel_error >= rep.linear.max_rel_error;
  const BranchCheck& w = quad_worse ? rep.quadratic : rep.linear;
  out << "FAIL (tolerance " << rep.tolerance << "); worst case: branch="
      << (quad_worse ? "quadratic" : "linear") << " x_e=" << format_real(w.x_e) << " alpha=" << format_real(w.alpha)
      << " x_g=" << format_real(w.x_g) << " rel_error=" << format_real(w.max_rel_error) << "\n";
  return kGradcheck;
}

int do_train_toy(const std::string& config_path, std::string json_path, std::ostream& out) {
  RunConfig cfg = config_from(config_path);
  if (json_path.empty()) json_path = cfg.out_path;
  const auto groups = cfg.toy.groups();
  const auto data = generate_groups(groups);

  std::vector<TrainState> states;
  for (const auto& d : data) {
    TrainState st = fit_group(d.labels, cfg.toy.fit);
    st.loss_history.clear();
    states.push_back(std::move(st));
  }
  const ToyReport rep = report(groups, states);
  out << format_report(rep);

  if (!json_path.empty()) {
    std::string j = "{\"rank_agreement\":" + std::string(rep.rank_agreement ? "true" : "false") + ",\"groups\":[";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const ReportRow& row = rep.rows[i];
      j += (i ? "," : "");
      j += "{\"group_id\":" + std::to_string(row.group_id) + ",\"noise_std\":" + format_real(row.noise_std) +
           ",\"true_variance\":" + format_real(row.true_variance) +
           ",\"learned_variance\":" + format_real(row.learned_variance) + ",\"ratio\":" + format_real(row.ratio) +
           ",\"x_e\":" + format_real(row.x_e) + ",\"steps\":" + std::to_string(row.steps) +
           ",\"quadratic_fraction\":" + format_real(data[i].quadratic_fraction) + ",\"status\":\"" +
           to_string(row.status) + "\"}";
    }
    write_file(json_path, j + "]}\n");
  }
  return rep.rank_agreement ? kOk : kFailure;
}

int do_sweep(const std::string& det_path, const std::string& gt_path, const std::string& grid_csv,
             const std::string& config_path, const std::string& json_path, std::ostream& out) {
  const RunConfig base = config_from(config_path);
  const std::vector<double> grid = parse_real_list(grid_csv);
  for (double s : grid)
    if (s < 0.0) throw ConfigError("sigma_t grid values must be non-negative");

  std::vector<std::size_t> lines;
  const auto dets = read_detections(det_path, &lines);
  const auto gts = read_ground_truth(gt_path);

  static const char* cols[] = {"AP", "AP50", "AP75", "AP80", "AP90"};
  char cell[64];
  std::snprintf(cell, sizeof cell, "%-10s", "sigma_t");
  out << cell;
  for (const char* c : cols) {
    std::snprintf(cell, sizeof cell, " %9s", c);
    out << cell;
  }
  out << '\n';

  std::string j = "{\"rows\":[";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    SuppressConfig sc = base.suppress;
    // sigma_t = 0 switches voting off.
    sc.voting = grid[k] > 0.0;
    if (sc.voting) sc.sigma_t = grid[k];
    sc.validate();
    if (sc.voting) require_variances(dets, lines);
    const EvalResult r = evaluate_records(suppress_records(dets, sc), gts, base.eval);

    std::snprintf(cell, sizeof cell, "%-10g", grid[k]);
    out << cell;
    j += (k ? "," : "");
    j += "{\"sigma_t\":" + format_real(grid[k]);
    for (const char* c : cols) {
      std::snprintf(cell, sizeof cell, " %9.6f", r.metric(c));
      out << cell;
      j += ",\"" + std::string(c) + "\":" + format_real(r.metric(c));
    }
    out << '\n';
    j += "}";
  }
  if (!json_path.empty()) write_file(json_path, j + "]}\n");
  return kOk;
}

}  // namespace

std::vector<DetectionRecord> suppress_records(std::span<const DetectionRecord> records, const SuppressConfig& cfg) {
  std::map<std::int64_t, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < records.size(); ++i) by_image[records[i].image_id].push_back(i);

  std::vector<DetectionRecord> out;
  for (const auto& [image_id, members] : by_image) {
    std::vector<Detection> dets;
    dets.reserve(members.size());
    for (std::size_t i : members) dets.push_back(records[i].detection());
    for (const SuppressedDetection& s : suppress_indexed(dets, cfg)) {
      out.push_back({image_id, s.det.class_id, s.det.box, s.det.score, s.det.var});
    }
  }
  return out;
}

EvalResult evaluate_records(std::span<const DetectionRecord> dets, std::span<const GroundTruthRecord> gts,
                            const EvalConfig& cfg) {
  std::vector<EvalDetection> d;
  d.reserve(dets.size());
  for (const auto& r : dets) d.push_back(r.eval_detection());
  std::vector<GroundTruthBox> g;
  g.reserve(gts.size());
  for (const auto& r : gts) g.push_back(r.ground_truth());
  return evaluate(d, g, cfg);
}

std::string format_metrics_table(const EvalResult& r) {
  std::string s;
  char line[64];
  std::snprintf(line, sizeof line, "%-6s %9s\n", "metric", "value");
  s += line;
  for (const auto& [name, value] : r.metrics) {
    std::snprintf(line, sizeof line, "%-6s %9s\n", name.c_str(), fixed(value).c_str());
    s += line;
  }
  return s;
}

std::string metrics_json(const EvalResult& r) {
  std::string s = "{";
  for (std::size_t i = 0; i < r.metrics.size(); ++i) {
    s += (i ? "," : "");
    s += "\"" + r.metrics[i].first + "\":" + format_real(r.metrics[i].second);
  }
  return s + "}";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Uncertainty-aware box regression and detection post-processing"};
  app.require_subcommand(1);

  std::string in_path, out_path, config_path, det_path, gt_path, json_path;
  std::string grid = "0,0.005,0.01,0.02,0.05,0.1";
  Overrides ov;
  std::uint64_t seed = 0;
  std::size_t cases = 2000;
  double perturb = 0.0;

  auto* sup = app.add_subcommand("suppress", "NMS / soft-NMS / variance voting over a detection file");
  sup->add_option("--in", in_path, "input detections (JSON-Lines)");
  sup->add_option("--out", out_path, "output detections (JSON-Lines)");
  sup->add_option("--config", config_path, "key=value config file");
  sup->add_option("--sigma-t", ov.sigma_t, "voting temperature");
  sup->add_option("--soft", ov.soft, "soft-NMS decay: off, linear or gaussian");
  sup->add_option("--vote", ov.vote, "variance voting: on or off");

  auto* ev = app.add_subcommand("eval", "AP/AR metrics against ground truth");
  ev->add_option("--det", det_path, "detections (JSON-Lines)")->required();
  ev->add_option("--gt", gt_path, "ground truth (JSON-Lines)")->required();
  ev->add_option("--out", json_path, "metrics JSON (default: <det>.metrics.json)");
  ev->add_option("--config", config_path, "key=value config file");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the loss gradients");
  gc->add_option("--seed", seed, "random seed");
  gc->add_option("--cases", cases, "cases per branch");
  gc->add_option("--perturb", perturb, "scale analytic gradients by 1+x (negative control)")->group("");

  auto* tt = app.add_subcommand("train-toy", "fit per-group (x_e, alpha) on synthetic noisy labels");
  tt->add_option("--config", config_path, "key=value config file");
  tt->add_option("--out", json_path, "summary JSON (default: config key out, else none)");

  auto* sw = app.add_subcommand("sweep-sigma-t", "suppress + eval over a grid of sigma_t");
  sw->add_option("--det", det_path, "detections with var (JSON-Lines)")->required();
  sw->add_option("--gt", gt_path, "ground truth (JSON-Lines)")->required();
  sw->add_option("--grid", grid, "comma-separated sigma_t values; 0 disables voting");
  sw->add_option("--config", config_path, "key=value config file");
  sw->add_option("--out", json_path, "results JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  }

  try {
    if (*sup) return do_suppress(in_path, out_path, config_path, ov, out);
    if (*ev) return do_eval(det_path, gt_path, json_path, config_path, out);
    if (*gc) return do_gradcheck(seed, cases, perturb, out, err);
    if (*tt) return do_train_toy(config_path, json_path, out);
    if (*sw) return do_sweep(det_path, gt_path, grid, config_path, json_path, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const IdMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kIdMismatch;
  } catch (const Divergence& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  }
  return kFailure;
}

}  // namespace klvote::cli
