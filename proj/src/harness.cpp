#include "pasta/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "pasta/error.hpp"

#ifndef PASTA_BUILD_ID
#define PASTA_BUILD_ID "unknown"
#endif

namespace pasta {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

std::string cell(double v) { return fmt::format("{:.9f}", v); }

std::string cells(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + cell(v[i]);
  return out;
}

std::string blanks(std::size_t n) { return n == 0 ? "" : std::string(n - 1, ','); }

std::string column_names(const std::string& stem, std::size_t m) {
  std::string out;
  for (std::size_t i = 0; i < m; ++i) out += fmt::format("{}{}_{}", i ? "," : "", stem, i + 1);
  return out;
}

std::string metrics_header(std::size_t m) {
  return fmt::format(
      "iteration,kappa,mu,mu_base,beta,mu_star,tch_index,episodes,{},{},{},{},value_loss,entropy,{},hv_so_far,eu\n",
      column_names("rbar", m), column_names("delta", m), column_names("eta", m), column_names("train_return", m),
      column_names("eval", m));
}

double single_point_hv(const NormalizationBounds& bounds, std::span<const double> raw) {
  const std::vector<Point> pts{bounds.normalize(raw)};
  return hypervolume(pts);
}

json make_manifest(const RunConfig& config, const Trainer& trainer, const std::vector<std::string>& checkpoints,
                   const std::string& status) {
  json j;
  j["format"] = "pasta-run 1";
  j["build_id"] = build_id();
  j["seed"] = config.train.seed;
  j["environment"] = config.train.environment.name;
  j["algorithm"] = to_string(config.train.algorithm);
  j["method"] = config.method_label();
  j["objectives"] = trainer.objective_count();
  j["preference"] = std::vector<double>(trainer.preference().begin(), trainer.preference().end());
  j["evaluation"] = {{"interval", config.train.eval_interval}, {"episodes", config.train.eval_episodes}};
  j["config_file"] = kConfigFile;
  j["config"] = serialize_run_config(config);
  j["outputs"] = {{"metrics", kMetricsFile}, {"checkpoints", checkpoints}};
  j["status"] = status;
  return j;
}

// Writes the metrics CSV one row at a time so a diverged run keeps its
// history.
class MetricsWriter {
 public:
  MetricsWriter(const fs::path& path, std::size_t m) : out_(path, std::ios::binary), m_(m) {
    if (!out_) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out_ << "# manifest=" << kManifestFile << "\n" << metrics_header(m);
    out_.flush();
  }

  void row(const IterationReport* r, std::int64_t iteration, const std::optional<EvaluationResult>& eval,
           std::span<const double> w) {
    std::string line = std::to_string(iteration);
    auto opt = [&line](std::optional<double> v) { line += "," + (v ? cell(*v) : std::string()); };
    auto vec = [&line, this](std::span<const double> v) {
      line += "," + (v.size() == m_ ? cells(v) : blanks(m_));
    };
    if (r) {
      opt(r->kappa);
      opt(r->mu);
      opt(r->controller ? std::optional(r->controller->mu_base) : std::nullopt);
      opt(r->controller ? std::optional(r->controller->beta) : std::nullopt);
      opt(r->controller ? std::optional(r->controller->mu_star) : std::nullopt);
      line += "," + (r->tch_index ? std::to_string(*r->tch_index + 1) : std::string());
      line += "," + std::to_string(r->episodes_completed);
      vec(r->normalized_returns);
      vec(r->delta);
      vec(r->eta);
      vec(r->episodes_completed > 0 ? std::span<const double>(r->mean_episode_returns) : std::span<const double>());
      opt(r->value_loss);
      opt(r->entropy);
    } else {
      line += std::string(7, ',');
      for (int k = 0; k < 4; ++k) vec({});
      line += ",,";
    }
    if (eval) {
      history_.push_back(eval->mean_returns);
      const auto bounds = NormalizationBounds::from_points(history_);
      std::vector<Point> normalized;
      for (const auto& p : history_) normalized.push_back(bounds.normalize(p));
      vec(eval->mean_returns);
      opt(hypervolume(normalized));
      opt(expected_utility(normalized.back(), w));
    } else {
      vec({});
      line += ",,";
    }
    out_ << line << "\n";
    out_.flush();
    if (!out_) throw IoError("failed writing metrics row");
  }

 private:
  std::ofstream out_;
  std::size_t m_;
  std::vector<Point> history_;
};

}  // namespace

std::string build_id() { return PASTA_BUILD_ID; }

RunConfig load_config_or_manifest(const std::string& path) {
  if (fs::path(path).extension() != ".json") return load_run_config(path);
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const IoError&) {
    throw ConfigError(fmt::format("cannot open manifest '{}'", path));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  if (!j.contains("config") || !j["config"].is_string()) {
    throw ConfigError(fmt::format("{}: manifest has no embedded config", path));
  }
  return parse_run_config(j["config"].get<std::string>(), path);
}

TrainSummary run_train(const RunConfig& config, std::ostream* log) {
  config.validate();
  const fs::path dir(config.out_dir);
  make_dirs(dir / kCheckpointDir);
  Trainer trainer(config.train);
  const std::size_t m = trainer.objective_count();
  const auto w = trainer.preference();

  write_file(dir / kConfigFile, serialize_run_config(config));
  TrainSummary summary;
  summary.out_dir = config.out_dir;
  write_file(dir / kManifestFile, make_manifest(config, trainer, {}, "running").dump(2) + "\n");

  MetricsWriter metrics(dir / kMetricsFile, m);
  auto save = [&](std::int64_t it) {
    const std::string name = fmt::format("{}/iter_{:06d}.ckpt", kCheckpointDir, it);
    trainer.save_checkpoint((dir / name).string());
    summary.checkpoints.push_back(name);
  };

  std::optional<EvaluationResult> eval = trainer.evaluate(config.train.eval_episodes);
  metrics.row(nullptr, 0, eval, w);
  summary.final_evaluation = eval->mean_returns;
  save(0);
  try {
    for (std::int64_t it = 1; it <= config.train.iterations; ++it) {
      const IterationReport r = trainer.run_iteration();
      metrics.row(&r, it, r.evaluation, w);
      if (r.mu) summary.final_mu = *r.mu;
      if (r.evaluation) {
        summary.final_evaluation = r.evaluation->mean_returns;
        if (log) {
          *log << fmt::format("[{}] iteration {}/{} kappa {:.3f}{} eval {}\n", config.method_label(), it,
                              config.train.iterations, r.kappa, r.mu ? fmt::format(" mu {:.4f}", *r.mu) : "",
                              cells(r.evaluation->mean_returns));
        }
      }
      const bool periodic = config.checkpoint_interval > 0 && it % config.checkpoint_interval == 0;
      if (periodic || it == config.train.iterations) save(it);
    }
  } catch (const DivergenceError&) {
    write_file(dir / kManifestFile, make_manifest(config, trainer, summary.checkpoints, "diverged").dump(2) + "\n");
    throw;
  }
  summary.iterations = trainer.iteration();
  write_file(dir / kManifestFile, make_manifest(config, trainer, summary.checkpoints, "complete").dump(2) + "\n");
  return summary;
}

EvaluationResult run_evaluate(const RunConfig& config, const std::string& checkpoint, int episodes) {
  config.validate();
  Trainer trainer(config.train);
  trainer.load_checkpoint(checkpoint);
  return trainer.evaluate(episodes);
}

RunRecord read_run(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ConfigError(fmt::format("run directory '{}' does not exist", dir));
  if (!fs::exists(root / kManifestFile) || !fs::exists(root / kMetricsFile)) {
    throw ConfigError(fmt::format("run directory '{}' has no {} or {}", dir, kManifestFile, kMetricsFile));
  }
  RunRecord rec;
  rec.dir = dir;
  rec.manifest_text = read_file(root / kManifestFile);
  json j;
  try {
    j = json::parse(rec.manifest_text);
    rec.method = j.at("method").get<std::string>();
    rec.environment = j.at("environment").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.weights = j.at("preference").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw IoError(fmt::format("{}: malformed manifest: {}", dir, e.what()));
  }
  rec.preference = cells(rec.weights);

  std::istringstream in(read_file(root / kMetricsFile));
  std::string line;
  std::vector<std::string> header;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  std::vector<std::size_t> eval_cols;
  std::size_t iter_col = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line);
    if (header.empty()) {
      header = fields;
      for (std::size_t i = 0; i < rec.weights.size(); ++i) {
        const auto it = std::find(header.begin(), header.end(), fmt::format("eval_{}", i + 1));
        if (it == header.end()) throw IoError(fmt::format("{}: metrics header lacks eval_{}", dir, i + 1));
        eval_cols.push_back(static_cast<std::size_t>(it - header.begin()));
      }
      continue;
    }
    if (fields.size() != header.size()) throw IoError(fmt::format("{}: ragged metrics row '{}'", dir, line));
    if (fields[eval_cols.front()].empty()) continue;
    EvalPoint p;
    p.iteration = std::stoll(fields[iter_col]);
    for (std::size_t c : eval_cols) p.returns.push_back(parse_number(fields[c], "metrics"));
    rec.evaluations.push_back(std::move(p));
  }
  if (rec.evaluations.empty()) throw ConfigError(fmt::format("run directory '{}' has no evaluations", dir));
  return rec;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Environment and evaluation protocol keys that must agree across a comparison.
std::map<std::string, std::string> protocol_keys(const RunRecord& r) {
  const RunConfig c = parse_run_config(json::parse(r.manifest_text).at("config").get<std::string>(), r.dir);
  std::map<std::string, std::string> out;
  for (const auto& key : config_keys()) {
    if (key.rfind("environment.", 0) == 0 || key == "output.eval_episodes" || key == "output.eval_interval" ||
        key == "run.iterations") {
      out[key] = get_config_value(c, key);
    }
  }
  return out;
}

}  // namespace

CompareReport compare_runs(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw ConfigError("compare needs at least one run");
  const auto reference = protocol_keys(runs.front());
  for (const auto& r : runs) {
    const auto keys = protocol_keys(r);
    std::string diff;
    for (const auto& [k, v] : reference) {
      if (keys.at(k) != v) diff += fmt::format("\n  {}: {} = {} but {} = {}", k, runs.front().dir, v, r.dir, keys.at(k));
    }
    if (!diff.empty()) throw ConfigError("runs do not share an environment and evaluation protocol:" + diff);
  }

  CompareReport report;
  std::vector<Point> all;
  for (const auto& r : runs) {
    for (const auto& e : r.evaluations) all.push_back(e.returns);
  }
  report.bounds = NormalizationBounds::from_points(all);

  struct Peak {
    double hv = 0.0;
    Point normalized;
    double eu = 0.0;
  };
  std::vector<std::string> methods;
  std::vector<std::string> prefs;
  std::map<std::string, std::vector<double>> pref_weights;
  std::map<std::tuple<std::string, std::string, std::uint64_t>, Peak> peaks;
  for (const auto& r : runs) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    if (std::find(prefs.begin(), prefs.end(), r.preference) == prefs.end()) prefs.push_back(r.preference);
    pref_weights[r.preference] = r.weights;
    Peak best;
    best.hv = -1.0;
    for (const auto& e : r.evaluations) {
      const double hv = single_point_hv(report.bounds, e.returns);
      if (hv > best.hv) {
        best.hv = hv;
        best.normalized = report.bounds.normalize(e.returns);
      }
    }
    best.eu = expected_utility(best.normalized, r.weights);
    const auto key = std::make_tuple(r.method, r.preference, r.seed);
    if (peaks.count(key)) {
      throw ConfigError(fmt::format("two runs share method {}, preference {} and seed {}", r.method, r.preference,
                                    r.seed));
    }
    peaks[key] = best;
  }
  std::sort(methods.begin(), methods.end());
  std::sort(prefs.begin(), prefs.end());
  const std::size_t m = runs.front().weights.size();

  std::vector<std::vector<double>> mean_hv(methods.size(), std::vector<double>(prefs.size(), 0.0));
  std::vector<std::vector<std::vector<double>>> obj(methods.size(),
                                                     std::vector<std::vector<double>>(prefs.size()));
  for (std::size_t a = 0; a < methods.size(); ++a) {
    std::vector<double> hv_all;
    std::vector<double> eu_all;
    for (std::size_t p = 0; p < prefs.size(); ++p) {
      PreferenceCell c;
      c.method = methods[a];
      c.preference = prefs[p];
      std::vector<double> hv;
      std::vector<double> eu;
      c.objective_means.assign(m, 0.0);
      for (const auto& [key, peak] : peaks) {
        if (std::get<0>(key) != methods[a] || std::get<1>(key) != prefs[p]) continue;
        hv.push_back(peak.hv);
        eu.push_back(peak.eu);
        for (std::size_t i = 0; i < m; ++i) c.objective_means[i] += peak.normalized[i];
      }
      if (hv.empty()) {
        throw ConfigError(fmt::format("method {} has no run for preference {}", methods[a], prefs[p]));
      }
      for (double& v : c.objective_means) v /= static_cast<double>(hv.size());
      c.seeds = hv.size();
      c.hv_mean = mean_of(hv);
      c.hv_std = std_of(hv);
      c.eu_mean = mean_of(eu);
      mean_hv[a][p] = c.hv_mean;
      obj[a][p] = c.objective_means;
      hv_all.insert(hv_all.end(), hv.begin(), hv.end());
      eu_all.insert(eu_all.end(), eu.begin(), eu.end());
      report.cells.push_back(std::move(c));
    }
    MethodSummary s;
    s.method = methods[a];
    s.hv_mean = mean_of(hv_all);
    s.hv_std = std_of(hv_all);
    s.eu_mean = mean_of(eu_all);
    report.methods.push_back(s);
  }

  const auto wr = win_rate(mean_hv);
  const auto odr = objective_dominance_rate(obj);

  // Performance-profile instances are (preference, seed) pairs every method ran.
  std::set<std::pair<std::string, std::uint64_t>> instances;
  for (const auto& [key, peak] : peaks) instances.insert({std::get<1>(key), std::get<2>(key)});
  std::vector<std::vector<double>> hv_matrix;
  for (const auto& [pref, seed] : instances) {
    std::vector<double> row;
    for (const auto& method : methods) {
      const auto it = peaks.find(std::make_tuple(method, pref, seed));
      if (it == peaks.end()) break;
      row.push_back(it->second.hv);
    }
    if (row.size() == methods.size()) {
      hv_matrix.push_back(std::move(row));
    } else {
      report.warnings.push_back(fmt::format("instance (preference {}, seed {}) skipped in the performance profile: "
                                            "not every method ran it",
                                            pref, seed));
    }
  }
  std::vector<double> auc(methods.size(), 0.0);
  if (!hv_matrix.empty()) {
    const PerformanceProfile profile = dolan_more_profile(hv_matrix);
    auc = profile.auc;
    report.warnings.insert(report.warnings.end(), profile.warnings.begin(), profile.warnings.end());
  }
  for (std::size_t a = 0; a < methods.size(); ++a) {
    report.methods[a].win_rate = wr[a];
    report.methods[a].objective_dominance = odr[a];
    report.methods[a].dmp_auc = auc[a];
  }
  return report;
}

void write_compare_csv(const CompareReport& report, const std::string& out_dir) {
  make_dirs(out_dir);
  std::string summary = "method,hypervolume_mean,hypervolume_std,win_rate,objective_dominance_rate,dmp_auc,"
                        "expected_utility\n";
  for (const auto& s : report.methods) {
    summary += fmt::format("{},{},{},{},{},{},{}\n", s.method, cell(s.hv_mean), cell(s.hv_std), cell(s.win_rate),
                           cell(s.objective_dominance), cell(s.dmp_auc), cell(s.eu_mean));
  }
  write_file(fs::path(out_dir) / "summary.csv", summary);

  const std::size_t m = report.bounds.min.size();
  std::string per = fmt::format("method,preference,seeds,hypervolume_mean,hypervolume_std,expected_utility,{}\n",
                                column_names("objective", m));
  for (const auto& c : report.cells) {
    per += fmt::format("{},\"{}\",{},{},{},{},{}\n", c.method, c.preference, c.seeds, cell(c.hv_mean),
                       cell(c.hv_std), cell(c.eu_mean), cells(c.objective_means));
  }
  write_file(fs::path(out_dir) / "per_preference.csv", per);

  std::string bounds = "objective,min,max\n";
  for (std::size_t i = 0; i < m; ++i) {
    bounds += fmt::format("{},{},{}\n", i + 1, cell(report.bounds.min[i]), cell(report.bounds.max[i]));
  }
  write_file(fs::path(out_dir) / "bounds.csv", bounds);
}

CompareReport run_compare(const std::vector<std::string>& dirs, const std::string& out_dir) {
  std::vector<RunRecord> runs;
  for (const auto& d : dirs) runs.push_back(read_run(d));
  CompareReport report = compare_runs(runs);
  write_compare_csv(report, out_dir);
  return report;
}

SweepAxis parse_sweep_axis(std::string_view text) {
  static const std::map<std::string, std::string> aliases = {
      {"mu_fixed", "algorithm.mu_fixed"},     {"rho", "algorithm.rho"},   {"tau", "controller.tau"},
      {"lambda_ema", "controller.lambda_ema"}, {"zeta", "algorithm.zeta"}, {"preference", "run.preference"},
      {"seed", "run.seed"}};
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ConfigError(fmt::format("sweep axis '{}' must look like key=v1;v2", text));
  SweepAxis axis;
  std::string key(text.substr(0, eq));
  const auto alias = aliases.find(key);
  axis.key = alias != aliases.end() ? alias->second : key;
  const auto keys = config_keys();
  if (std::find(keys.begin(), keys.end(), axis.key) == keys.end()) {
    throw ConfigError(fmt::format("sweep axis on unknown key '{}'", key));
  }
  std::string values(text.substr(eq + 1));
  std::istringstream ss(values);
  std::string v;
  while (std::getline(ss, v, ';')) {
    const auto dots = v.find("..");
    if (axis.key == "run.preference" && v == "stealth8") {
      for (const auto& p : stealth_preferences()) {
        std::string s;
        for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + fmt::format("{}", p[i]);
        axis.values.push_back(s);
      }
    } else if (axis.key == "run.seed" && dots != std::string::npos) {
      const auto lo = static_cast<std::int64_t>(parse_number(v.substr(0, dots), key));
      const auto hi = static_cast<std::int64_t>(parse_number(v.substr(dots + 2), key));
      if (lo > hi) throw ConfigError(fmt::format("seed range '{}' is empty", v));
      for (std::int64_t s = lo; s <= hi; ++s) axis.values.push_back(std::to_string(s));
    } else {
      axis.values.push_back(v);
    }
  }
  if (axis.values.empty()) throw ConfigError(fmt::format("sweep axis '{}' has no values", key));
  return axis;
}

std::vector<SweepRun> expand_sweep(const RunConfig& base, const std::vector<SweepAxis>& axes,
                                   const std::string& out_dir) {
  std::vector<SweepRun> runs;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    SweepRun run;
    run.config = base;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      run.values.push_back(axes[a].values[idx[a]]);
      set_config_value(run.config, axes[a].key, axes[a].values[idx[a]]);
    }
    run.dir = (fs::path(out_dir) / fmt::format("run_{:04d}", runs.size())).string();
    run.config.out_dir = run.dir;
    run.config.validate();
    runs.push_back(std::move(run));
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return runs;
    }
    if (axes.empty()) return runs;
  }
}

std::vector<SweepRun> run_sweep(const RunConfig& base, const std::vector<SweepAxis>& axes, const std::string& out_dir,
                                int jobs, bool dry_run, std::ostream* log) {
  if (jobs < 1) throw ConfigError("sweep needs at least one job");
  std::vector<SweepRun> runs = expand_sweep(base, axes, out_dir);
  make_dirs(out_dir);
  std::string index = "run,dir";
  for (const auto& a : axes) index += "," + a.key;
  index += "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    index += fmt::format("{},{}", i, runs[i].dir);
    for (const auto& v : runs[i].values) index += ",\"" + v + "\"";
    index += "\n";
  }
  write_file(fs::path(out_dir) / "sweep_index.csv", index);
  if (dry_run) {
    for (const auto& r : runs) {
      make_dirs(r.dir);
      write_file(fs::path(r.dir) / kConfigFile, serialize_run_config(r.config));
    }
    return runs;
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::string> failures;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        run_train(runs[i].config, nullptr);
        std::lock_guard lock(mu);
        if (log) *log << fmt::format("sweep: finished {} ({}/{})\n", runs[i].dir, i + 1, runs.size());
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        failures.push_back(fmt::format("{}: {}", runs[i].dir, e.what()));
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(jobs), runs.size());
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::string msg = fmt::format("{} of {} sweep runs failed:", failures.size(), runs.size());
    for (const auto& f : failures) msg += "\n  " + f;
    throw Error(msg);
  }
  return runs;
}

}  // namespace pasta
