#include "pasta/pasta.h"

#include <cstring>
#include <iostream>
#include <memory>
#include <string>

#include "pasta/config.hpp"
#include "pasta/error.hpp"
#include "pasta/harness.hpp"
#include "pasta/metrics.hpp"
#include "pasta/scalarization.hpp"
#include "pasta/toybench.hpp"
#include "pasta/trainer.hpp"

struct pasta_config {
  pasta::RunConfig value;
};

struct pasta_trainer {
  std::unique_ptr<pasta::Trainer> value;
};

namespace {

thread_local std::string g_last_error;

pasta_status fail(pasta_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
pasta_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PASTA_OK;
  } catch (const pasta::ConfigError& e) {
    return fail(PASTA_CONFIG_ERROR, e.what());
  } catch (const pasta::DivergenceError& e) {
    return fail(PASTA_DIVERGENCE, e.what());
  } catch (const pasta::IoError& e) {
    return fail(PASTA_IO_ERROR, e.what());
  } catch (const pasta::ContractError& e) {
    return fail(PASTA_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PASTA_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(PASTA_INTERNAL_ERROR, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw pasta::ContractError(what);
}

void copy_out(const std::string& s, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buffer && capacity > 0) {
    const size_t n = std::min(capacity - 1, s.size());
    std::memcpy(buffer, s.data(), n);
    buffer[n] = '\0';
  }
}

}  // namespace

extern "C" {

const char* pasta_last_error(void) { return g_last_error.c_str(); }

const char* pasta_version(void) {
  static const std::string v = pasta::build_id();
  return v.c_str();
}

pasta_status pasta_config_load(const char* path, pasta_config** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be null");
    auto cfg = std::make_unique<pasta_config>();
    if (path) cfg->value = pasta::load_config_or_manifest(path);
    *out = cfg.release();
  });
}

pasta_status pasta_config_set(pasta_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "config, key and value must not be null");
    pasta::set_config_value(config->value, key, value);
  });
}

pasta_status pasta_config_get(const pasta_config* config, const char* key, char* buffer, size_t capacity,
                              size_t* needed) {
  return guarded([&] {
    require(config && key, "config and key must not be null");
    copy_out(pasta::get_config_value(config->value, key), buffer, capacity, needed);
  });
}

pasta_status pasta_config_serialize(const pasta_config* config, char* buffer, size_t capacity, size_t* needed) {
  return guarded([&] {
    require(config != nullptr, "config must not be null");
    copy_out(pasta::serialize_run_config(config->value), buffer, capacity, needed);
  });
}

void pasta_config_free(pasta_config* config) { delete config; }

pasta_status pasta_trainer_create(const pasta_config* config, pasta_trainer** out) {
  return guarded([&] {
    require(config && out, "config and out must not be null");
    config->value.validate();
    auto t = std::make_unique<pasta_trainer>();
    t->value = std::make_unique<pasta::Trainer>(config->value.train);
    *out = t.release();
  });
}

pasta_status pasta_trainer_step(pasta_trainer* trainer, double* kappa, double* mu) {
  return guarded([&] {
    require(trainer != nullptr, "trainer must not be null");
    const pasta::IterationReport r = trainer->value->run_iteration();
    if (kappa) *kappa = r.kappa;
    if (mu) *mu = r.mu.value_or(0.0);
  });
}

pasta_status pasta_trainer_evaluate(const pasta_trainer* trainer, int episodes, double* returns, size_t capacity) {
  return guarded([&] {
    require(trainer && returns, "trainer and returns must not be null");
    require(capacity >= trainer->value->objective_count(), "returns buffer is smaller than the objective count");
    const auto r = trainer->value->evaluate(episodes);
    std::copy(r.mean_returns.begin(), r.mean_returns.end(), returns);
  });
}

size_t pasta_trainer_objective_count(const pasta_trainer* trainer) {
  return trainer ? trainer->value->objective_count() : 0;
}

pasta_status pasta_trainer_save(const pasta_trainer* trainer, const char* path) {
  return guarded([&] {
    require(trainer && path, "trainer and path must not be null");
    trainer->value->save_checkpoint(path);
  });
}

pasta_status pasta_trainer_load(pasta_trainer* trainer, const char* path) {
  return guarded([&] {
    require(trainer && path, "trainer and path must not be null");
    trainer->value->load_checkpoint(path);
  });
}

void pasta_trainer_free(pasta_trainer* trainer) { delete trainer; }

pasta_status pasta_run_train(const pasta_config* config, int verbose) {
  return guarded([&] {
    require(config != nullptr, "config must not be null");
    pasta::run_train(config->value, verbose ? &std::cerr : nullptr);
  });
}

pasta_status pasta_run_evaluate(const pasta_config* config, const char* checkpoint, int episodes, double* returns,
                                size_t capacity, size_t* objectives) {
  return guarded([&] {
    require(config && checkpoint, "config and checkpoint must not be null");
    const auto r = pasta::run_evaluate(config->value, checkpoint, episodes);
    if (objectives) *objectives = r.mean_returns.size();
    require(returns == nullptr || capacity >= r.mean_returns.size(), "returns buffer too small");
    if (returns) std::copy(r.mean_returns.begin(), r.mean_returns.end(), returns);
  });
}

pasta_status pasta_run_compare(const char* const* run_dirs, size_t count, const char* out_dir) {
  return guarded([&] {
    require(run_dirs && out_dir, "run_dirs and out_dir must not be null");
    std::vector<std::string> dirs(run_dirs, run_dirs + count);
    const auto report = pasta::run_compare(dirs, out_dir);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  });
}

pasta_status pasta_run_sweep(const pasta_config* base, const char* const* axes, size_t axis_count,
                             const char* out_dir, int jobs, int dry_run, size_t* run_count) {
  return guarded([&] {
    require(base && out_dir && (axes || axis_count == 0), "base, axes and out_dir must not be null");
    std::vector<pasta::SweepAxis> parsed;
    for (size_t i = 0; i < axis_count; ++i) parsed.push_back(pasta::parse_sweep_axis(axes[i]));
    const auto runs = pasta::run_sweep(base->value, parsed, out_dir, jobs, dry_run != 0, &std::cerr);
    if (run_count) *run_count = runs.size();
  });
}

pasta_status pasta_run_toybench(uint64_t seed, int runs, const char* csv_path, double* linear_fraction,
                                double* stch_fraction) {
  return guarded([&] {
    pasta::ToyBenchConfig cfg;
    cfg.seed = seed;
    cfg.runs = runs;
    const auto report = pasta::run_toybench(cfg);
    if (csv_path) pasta::write_toybench_csv(report, csv_path);
    if (linear_fraction) *linear_fraction = report.linear_endpoint_fraction;
    if (stch_fraction) *stch_fraction = report.stch_oracle_fraction;
  });
}

pasta_status pasta_hypervolume(const double* points, size_t count, size_t m, double* out) {
  return guarded([&] {
    require(out && (points || count == 0), "points and out must not be null");
    require(m > 0, "m must be positive");
    std::vector<pasta::Point> pts;
    for (size_t k = 0; k < count; ++k) pts.emplace_back(points + k * m, points + (k + 1) * m);
    *out = pasta::hypervolume(pts);
  });
}

pasta_status pasta_stch(const double* returns, const double* weights, const double* utopia, size_t m, double mu,
                        double* value, double* attention) {
  return guarded([&] {
    require(returns && weights && utopia && m > 0, "inputs must not be null");
    const std::span<const double> r(returns, m), w(weights, m), z(utopia, m);
    if (value) *value = pasta::stch_scalarize(r, w, z, mu);
    if (attention) {
      const auto d = pasta::stch_attention(r, w, z, mu);
      std::copy(d.begin(), d.end(), attention);
    }
  });
}

}  // extern "C"
