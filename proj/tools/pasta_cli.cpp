#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pasta/pasta.h"

namespace {

int exit_code(pasta_status s) {
  switch (s) {
    case PASTA_OK:
      return 0;
    case PASTA_CONFIG_ERROR:
      return 2;
    case PASTA_DIVERGENCE:
      return 3;
    default:
      return 1;
  }
}

int report(pasta_status s) {
  if (s != PASTA_OK) std::fprintf(stderr, "pasta: %s\n", pasta_last_error());
  return exit_code(s);
}

struct ConfigHandle {
  pasta_config* ptr = nullptr;
  ~ConfigHandle() { pasta_config_free(ptr); }
};

struct CommonOptions {
  std::string config;
  std::string seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool need_config) {
  auto* c = cmd->add_option("--config", o.config, "INI config file or run manifest.json");
  if (need_config) c->required();
  cmd->add_option("--seed", o.seed, "Run seed (run.seed)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--override", o.overrides, "section.key=value, repeatable");
}

// Loads the config and applies --override, --seed and --out in that order.
pasta_status build_config(const CommonOptions& o, ConfigHandle& h, bool out_is_run_dir) {
  pasta_status s = pasta_config_load(o.config.empty() ? nullptr : o.config.c_str(), &h.ptr);
  if (s != PASTA_OK) return s;
  for (const auto& ov : o.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "pasta: override '%s' must look like section.key=value\n", ov.c_str());
      return PASTA_CONFIG_ERROR;
    }
    s = pasta_config_set(h.ptr, ov.substr(0, eq).c_str(), ov.substr(eq + 1).c_str());
    if (s != PASTA_OK) return s;
  }
  if (!o.seed.empty() && (s = pasta_config_set(h.ptr, "run.seed", o.seed.c_str())) != PASTA_OK) return s;
  if (out_is_run_dir && !o.out.empty() && (s = pasta_config_set(h.ptr, "output.dir", o.out.c_str())) != PASTA_OK) {
    return s;
  }
  return PASTA_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective PPO with adaptive smooth Tchebycheff scalarization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pasta_version()));

  CommonOptions train_opts;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train one run and write its artifacts");
  add_common(train, train_opts, true);
  train->add_flag("--quiet", quiet, "No progress output");

  CommonOptions eval_opts;
  std::string checkpoint;
  int episodes = 8;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint with the mean action");
  add_common(evaluate, eval_opts, true);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);

  std::vector<std::string> run_dirs;
  std::string compare_out = "compare";
  auto* compare = app.add_subcommand("compare", "Compare run directories");
  compare->add_option("runs", run_dirs, "Run directories")->required();
  compare->add_option("--out", compare_out, "Output directory for summary.csv and per_preference.csv");

  CommonOptions sweep_opts;
  std::vector<std::string> axes;
  int jobs = 1;
  bool dry_run = false;
  auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over config axes");
  add_common(sweep, sweep_opts, false);
  sweep->add_option("--axis", axes, "key=v1;v2;... (mu_fixed, rho, tau, lambda_ema, zeta, preference, seed)");
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--dry-run", dry_run, "Write configs and the index without training");

  std::uint64_t toy_seed = 1;
  int toy_runs = 50;
  std::string toy_out;
  auto* toy = app.add_subcommand("toybench", "Linear vs smooth Tchebycheff on the concave-front problem");
  toy->add_option("--seed", toy_seed, "Seed");
  toy->add_option("--runs", toy_runs, "Random restarts")->check(CLI::PositiveNumber);
  toy->add_option("--out", toy_out, "CSV path for per-run results");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*train) {
    ConfigHandle h;
    pasta_status s = build_config(train_opts, h, true);
    if (s == PASTA_OK) s = pasta_run_train(h.ptr, quiet ? 0 : 1);
    return report(s);
  }
  if (*evaluate) {
    ConfigHandle h;
    pasta_status s = build_config(eval_opts, h, true);
    double returns[16];
    size_t m = 0;
    if (s == PASTA_OK) s = pasta_run_evaluate(h.ptr, checkpoint.c_str(), episodes, returns, 16, &m);
    if (s == PASTA_OK) {
      for (size_t i = 0; i < m; ++i) std::printf("%s%.9f", i ? "," : "", returns[i]);
      std::printf("\n");
    }
    return report(s);
  }
  if (*compare) {
    std::vector<const char*> dirs;
    for (const auto& d : run_dirs) dirs.push_back(d.c_str());
    const pasta_status s = pasta_run_compare(dirs.data(), dirs.size(), compare_out.c_str());
    if (s == PASTA_OK) std::printf("wrote %s/summary.csv and %s/per_preference.csv\n", compare_out.c_str(),
                                   compare_out.c_str());
    return report(s);
  }
  if (*sweep) {
    ConfigHandle h;
    pasta_status s = build_config(sweep_opts, h, false);
    std::vector<const char*> a;
    for (const auto& x : axes) a.push_back(x.c_str());
    const std::string out = sweep_opts.out.empty() ? "sweep" : sweep_opts.out;
    size_t count = 0;
    if (s == PASTA_OK) s = pasta_run_sweep(h.ptr, a.data(), a.size(), out.c_str(), jobs, dry_run ? 1 : 0, &count);
    if (s == PASTA_OK) std::printf("%zu runs indexed in %s/sweep_index.csv\n", count, out.c_str());
    return report(s);
  }
  if (*toy) {
    double lin = 0.0;
    double stch = 0.0;
    const pasta_status s =
        pasta_run_toybench(toy_seed, toy_runs, toy_out.empty() ? nullptr : toy_out.c_str(), &lin, &stch);
    if (s == PASTA_OK) std::printf("linear endpoint fraction %.3f\nstch oracle fraction %.3f\n", lin, stch);
    return report(s);
  }
  return 1;
}
