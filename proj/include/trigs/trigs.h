/*
 * trigs C API.
 *
 * Opaque handles wrap the C++ scene and fit objects. Every call returns a
 * trigs_status; on failure trigs_last_error() describes the problem for the
 * calling thread until its next failing call.
 */
#ifndef TRIGS_TRIGS_H_
#define TRIGS_TRIGS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TRIGS_BUILDING_LIBRARY)
#    define TRIGS_API __declspec(dllexport)
#  else
#    define TRIGS_API __declspec(dllimport)
#  endif
#else
#  define TRIGS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trigs_status {
  TRIGS_OK = 0,
  TRIGS_ERR_INVALID_INPUT = 1,
  TRIGS_ERR_DIVERGED = 2,
  TRIGS_ERR_IO = 3,
  TRIGS_ERR_INTERNAL = 4
} trigs_status;

typedef enum trigs_motion_model {
  TRIGS_MODEL_FULL = 0,
  TRIGS_MODEL_NO_GAUGE_FIX = 1,
  TRIGS_MODEL_LINEAR = 2
} trigs_motion_model;

typedef enum trigs_optimizer {
  TRIGS_OPTIMIZER_ADAM = 0,
  TRIGS_OPTIMIZER_GD = 1
} trigs_optimizer;

typedef struct trigs_scene trigs_scene;
typedef struct trigs_fit trigs_fit;

typedef struct trigs_fit_options {
  double w_reg;
  double w_motion;
  double w_rigid;
  double lambda_c;
  int knn;
  int reloc_period;
  double reloc_threshold;
  double reloc_scale_factor;
  int iterations;
  uint64_t seed;
  trigs_motion_model model;
  trigs_optimizer optimizer;
  double lr_twist;
  double lr_anchor;
  double lr_final_ratio;
  int anchors_at_truth;
} trigs_fit_options;

typedef struct trigs_metrics {
  double weighted_rmse;
  double mean_twist_error; /* NaN unless anchors were held at ground truth */
  size_t primitive_count;
} trigs_metrics;

TRIGS_API const char* trigs_version(void);
TRIGS_API const char* trigs_last_error(void);

/* Kernels. rotation is row-major 3x3; u is (phi, upsilon). */
TRIGS_API trigs_status trigs_se3_exp(const double u[6], double rotation[9], double translation[3]);

/* Scenes */
TRIGS_API trigs_status trigs_scene_generate(const char* config_path, trigs_scene** out);
TRIGS_API trigs_status trigs_scene_generate_from_text(const char* config_text, trigs_scene** out);
TRIGS_API trigs_status trigs_scene_load(const char* dir, trigs_scene** out);
TRIGS_API trigs_status trigs_scene_save(const trigs_scene* scene, const char* dir);
TRIGS_API size_t trigs_scene_primitive_count(const trigs_scene* scene);
TRIGS_API size_t trigs_scene_timestep_count(const trigs_scene* scene);
TRIGS_API void trigs_scene_free(trigs_scene* scene);

/* Fitting */
TRIGS_API void trigs_fit_options_init(trigs_fit_options* options);
/* On divergence returns TRIGS_ERR_DIVERGED and still hands back the partial fit. */
TRIGS_API trigs_status trigs_fit_run(const trigs_scene* scene, const trigs_fit_options* options,
                                     trigs_fit** out);
TRIGS_API trigs_status trigs_fit_save(const trigs_fit* fit, const char* dir);
TRIGS_API trigs_status trigs_fit_load(const char* dir, trigs_fit** out);
TRIGS_API size_t trigs_fit_iterations_run(const trigs_fit* fit);
TRIGS_API double trigs_fit_final_rmse(const trigs_fit* fit);
TRIGS_API int trigs_fit_budget_constant(const trigs_fit* fit);
TRIGS_API void trigs_fit_free(trigs_fit* fit);

/* Evaluation */
TRIGS_API trigs_status trigs_evaluate(const trigs_fit* fit, const trigs_scene* scene,
                                      trigs_metrics* out);
TRIGS_API trigs_status trigs_write_report(const trigs_fit* fit, const trigs_scene* scene,
                                          const char* report_path);

#ifdef __cplusplus
}
#endif

#endif /* TRIGS_TRIGS_H_ */
