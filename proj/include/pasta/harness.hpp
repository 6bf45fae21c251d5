#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pasta/config.hpp"
#include "pasta/metrics.hpp"
#include "pasta/trainer.hpp"

namespace pasta {

// Files written into a run directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kConfigFile = "config.ini";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kCheckpointDir = "checkpoints";

std::string build_id();

// Accepts either an INI config or a run manifest (its embedded config).
RunConfig load_config_or_manifest(const std::string& path);

struct TrainSummary {
  std::string out_dir;
  std::int64_t iterations = 0;
  std::vector<double> final_evaluation;
  double final_mu = 0.0;
  std::vector<std::string> checkpoints;
};

// Trains, writing config.ini, manifest.json, metrics.csv and checkpoints
// into config.out_dir. Progress lines go to `log` when given.
TrainSummary run_train(const RunConfig& config, std::ostream* log = nullptr);

EvaluationResult run_evaluate(const RunConfig& config, const std::string& checkpoint, int episodes);

// One evaluation checkpoint read back from metrics.csv.
struct EvalPoint {
  std::int64_t iteration = 0;
  Point returns;
};

struct RunRecord {
  std::string dir;
  std::string method;
  std::string environment;
  std::string preference;  // canonical text
  std::vector<double> weights;
  std::uint64_t seed = 0;
  std::vector<EvalPoint> evaluations;
  std::string manifest_text;
};

RunRecord read_run(const std::string& dir);

struct MethodSummary {
  std::string method;
  double hv_mean = 0.0;
  double hv_std = 0.0;
  double win_rate = 0.0;
  double objective_dominance = 0.0;
  double dmp_auc = 0.0;
  double eu_mean = 0.0;
};

struct PreferenceCell {
  std::string method;
  std::string preference;
  double hv_mean = 0.0;
  double hv_std = 0.0;
  double eu_mean = 0.0;
  std::vector<double> objective_means;  // normalized
  std::size_t seeds = 0;
};

struct CompareReport {
  std::vector<MethodSummary> methods;
  std::vector<PreferenceCell> cells;
  NormalizationBounds bounds;
  std::vector<std::string> warnings;
};

// Peak single-point HV per run under bounds shared by every evaluation of
// every run. Refuses runs whose environment or evaluation protocol differ.
CompareReport compare_runs(const std::vector<RunRecord>& runs);
CompareReport run_compare(const std::vector<std::string>& dirs, const std::string& out_dir);
void write_compare_csv(const CompareReport& report, const std::string& out_dir);

struct SweepAxis {
  std::string key;  // full "section.key" after alias resolution
  std::vector<std::string> values;
};

// "mu_fixed=0.01;0.1" or "algorithm.rho=0.1;0.2". Short names: mu_fixed,
// rho, tau, lambda_ema, zeta, preference, seed. preference=stealth8 expands
// to the eight study vectors.
SweepAxis parse_sweep_axis(std::string_view text);

struct SweepRun {
  std::string dir;
  std::vector<std::string> values;  // one per axis
  RunConfig config;
};

// Cartesian product; each run gets out_dir/run_XXXX.
std::vector<SweepRun> expand_sweep(const RunConfig& base, const std::vector<SweepAxis>& axes,
                                   const std::string& out_dir);
std::vector<SweepRun> run_sweep(const RunConfig& base, const std::vector<SweepAxis>& axes, const std::string& out_dir,
                                int jobs, bool dry_run, std::ostream* log = nullptr);

}  // namespace pasta
