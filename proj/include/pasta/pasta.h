#ifndef PASTA_PASTA_H
#define PASTA_PASTA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PASTA_API __declspec(dllexport)
#else
#define PASTA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pasta_status {
  PASTA_OK = 0,
  PASTA_INVALID_ARGUMENT = 1,
  PASTA_CONFIG_ERROR = 2,
  PASTA_DIVERGENCE = 3,
  PASTA_IO_ERROR = 4,
  PASTA_INTERNAL_ERROR = 5
} pasta_status;

/* Message for the last failing call on this thread; "" after success. */
PASTA_API const char* pasta_last_error(void);
PASTA_API const char* pasta_version(void);

typedef struct pasta_config pasta_config;
typedef struct pasta_trainer pasta_trainer;

/* Config handles. A NULL path gives the defaults. */
PASTA_API pasta_status pasta_config_load(const char* path, pasta_config** out);
PASTA_API pasta_status pasta_config_set(pasta_config* config, const char* key, const char* value);
/* Copies at most `capacity` bytes including the terminator; `needed` gets the full length + 1. */
PASTA_API pasta_status pasta_config_get(const pasta_config* config, const char* key, char* buffer, size_t capacity,
                                        size_t* needed);
PASTA_API pasta_status pasta_config_serialize(const pasta_config* config, char* buffer, size_t capacity,
                                              size_t* needed);
PASTA_API void pasta_config_free(pasta_config* config);

/* In-process training. */
PASTA_API pasta_status pasta_trainer_create(const pasta_config* config, pasta_trainer** out);
PASTA_API pasta_status pasta_trainer_step(pasta_trainer* trainer, double* kappa, double* mu);
PASTA_API pasta_status pasta_trainer_evaluate(const pasta_trainer* trainer, int episodes, double* returns,
                                              size_t capacity);
PASTA_API size_t pasta_trainer_objective_count(const pasta_trainer* trainer);
PASTA_API pasta_status pasta_trainer_save(const pasta_trainer* trainer, const char* path);
PASTA_API pasta_status pasta_trainer_load(pasta_trainer* trainer, const char* path);
PASTA_API void pasta_trainer_free(pasta_trainer* trainer);

/* Command drivers. Progress lines go to stderr when `verbose` is nonzero. */
PASTA_API pasta_status pasta_run_train(const pasta_config* config, int verbose);
PASTA_API pasta_status pasta_run_evaluate(const pasta_config* config, const char* checkpoint, int episodes,
                                          double* returns, size_t capacity, size_t* objectives);
PASTA_API pasta_status pasta_run_compare(const char* const* run_dirs, size_t count, const char* out_dir);
/* axes: "key=v1;v2;..." strings. */
PASTA_API pasta_status pasta_run_sweep(const pasta_config* base, const char* const* axes, size_t axis_count,
                                       const char* out_dir, int jobs, int dry_run, size_t* run_count);
PASTA_API pasta_status pasta_run_toybench(uint64_t seed, int runs, const char* csv_path, double* linear_fraction,
                                          double* stch_fraction);

/* Numeric primitives. points is row-major count x m. */
PASTA_API pasta_status pasta_hypervolume(const double* points, size_t count, size_t m, double* out);
PASTA_API pasta_status pasta_stch(const double* returns, const double* weights, const double* utopia, size_t m,
                                  double mu, double* value, double* attention);

#ifdef __cplusplus
}
#endif

#endif
