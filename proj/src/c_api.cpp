#include "trigs/trigs.h"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "trigs/harness.hpp"
#include "trigs/scene_io.hpp"

struct trigs_scene {
  trigs::Scene scene;
};

struct trigs_fit {
  trigs::FitState state;
  trigs::FitReport report;  // empty when loaded from disk without history
  trigs::FitOptions options;
};

namespace {

thread_local std::string g_last_error;

trigs_status fail(trigs_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body` and maps exceptions to status codes.
template <typename F>
trigs_status guarded(F&& body) {
  try {
    return body();
  } catch (const trigs::InvalidInput& e) {
    return fail(TRIGS_ERR_INVALID_INPUT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(TRIGS_ERR_INVALID_INPUT, e.what());
  } catch (const std::domain_error& e) {
    return fail(TRIGS_ERR_INVALID_INPUT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(TRIGS_ERR_IO, e.what());
  } catch (const std::runtime_error& e) {
    return fail(TRIGS_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(TRIGS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TRIGS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TRIGS_ERR_INTERNAL, "unknown error");
  }
}

trigs::FitOptions to_options(const trigs_fit_options& o) {
  trigs::FitOptions f;
  f.weights.w_reg = o.w_reg;
  f.weights.w_motion = o.w_motion;
  f.weights.w_rigid = o.w_rigid;
  f.weights.lambda_c = o.lambda_c;
  f.weights.k_neighbors = o.knn;
  f.relocation.period = o.reloc_period;
  f.relocation.opacity_threshold = o.reloc_threshold;
  f.relocation.scale_factor = o.reloc_scale_factor;
  f.relocation.rng_seed = o.seed;
  f.iterations = o.iterations;
  switch (o.model) {
    case TRIGS_MODEL_FULL: f.model = trigs::MotionModel::kFull; break;
    case TRIGS_MODEL_NO_GAUGE_FIX: f.model = trigs::MotionModel::kNoGaugeFix; break;
    case TRIGS_MODEL_LINEAR: f.model = trigs::MotionModel::kLinear; break;
    default: throw trigs::InvalidInput("unknown motion model");
  }
  switch (o.optimizer) {
    case TRIGS_OPTIMIZER_ADAM: f.optimizer = trigs::OptimizerKind::kAdam; break;
    case TRIGS_OPTIMIZER_GD: f.optimizer = trigs::OptimizerKind::kGradientDescent; break;
    default: throw trigs::InvalidInput("unknown optimizer");
  }
  f.lr_twist = o.lr_twist;
  f.lr_anchor = o.lr_anchor;
  f.lr_final_ratio = o.lr_final_ratio;
  f.anchors_at_truth = o.anchors_at_truth != 0;
  return f;
}

trigs_status generate(std::istream& in, trigs_scene** out) {
  const auto kv = trigs::KeyValueFile::parse(in);
  auto handle = std::make_unique<trigs_scene>();
  handle->scene = trigs::generate_scene(trigs::scene_config_from_kv(kv));
  *out = handle.release();
  return TRIGS_OK;
}

}  // namespace

extern "C" {

const char* trigs_version(void) { return "0.1.0"; }

const char* trigs_last_error(void) { return g_last_error.c_str(); }

trigs_status trigs_se3_exp(const double u[6], double rotation[9], double translation[3]) {
  if (!u || !rotation || !translation) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    trigs::LogParam lp{trigs::Vec3(u[0], u[1], u[2]), trigs::Vec3(u[3], u[4], u[5])};
    if (!lp.phi.allFinite() || !lp.upsilon.allFinite()) {
      return fail(TRIGS_ERR_INVALID_INPUT, "non-finite log parameter");
    }
    const auto t = trigs::se3_exp(lp);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rotation[3 * r + c] = t.rotation(r, c);
      translation[r] = t.translation[r];
    }
    return TRIGS_OK;
  });
}

trigs_status trigs_scene_generate(const char* config_path, trigs_scene** out) {
  if (!config_path || !out) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) return fail(TRIGS_ERR_INVALID_INPUT, std::string("cannot read ") + config_path);
    return generate(in, out);
  });
}

trigs_status trigs_scene_generate_from_text(const char* config_text, trigs_scene** out) {
  if (!config_text || !out) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    std::istringstream in(config_text);
    return generate(in, out);
  });
}

trigs_status trigs_scene_load(const char* dir, trigs_scene** out) {
  if (!dir || !out) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<trigs_scene>();
    handle->scene = trigs::load_scene(dir);
    *out = handle.release();
    return TRIGS_OK;
  });
}

trigs_status trigs_scene_save(const trigs_scene* scene, const char* dir) {
  if (!scene || !dir) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    trigs::save_scene(scene->scene, dir);
    return TRIGS_OK;
  });
}

size_t trigs_scene_primitive_count(const trigs_scene* scene) {
  return scene ? scene->scene.size() : 0;
}

size_t trigs_scene_timestep_count(const trigs_scene* scene) {
  return scene ? scene->scene.data.n_times() : 0;
}

void trigs_scene_free(trigs_scene* scene) { delete scene; }

void trigs_fit_options_init(trigs_fit_options* o) {
  if (!o) return;
  const trigs::FitOptions d;
  o->w_reg = d.weights.w_reg;
  o->w_motion = d.weights.w_motion;
  o->w_rigid = d.weights.w_rigid;
  o->lambda_c = d.weights.lambda_c;
  o->knn = d.weights.k_neighbors;
  o->reloc_period = d.relocation.period;
  o->reloc_threshold = d.relocation.opacity_threshold;
  o->reloc_scale_factor = d.relocation.scale_factor;
  o->iterations = d.iterations;
  o->seed = d.relocation.rng_seed;
  o->model = TRIGS_MODEL_FULL;
  o->optimizer = TRIGS_OPTIMIZER_ADAM;
  o->lr_twist = d.lr_twist;
  o->lr_anchor = d.lr_anchor;
  o->lr_final_ratio = d.lr_final_ratio;
  o->anchors_at_truth = 0;
}

trigs_status trigs_fit_run(const trigs_scene* scene, const trigs_fit_options* options,
                           trigs_fit** out) {
  if (!scene || !options || !out) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<trigs_fit>();
    handle->options = to_options(*options);
    auto result = trigs::fit(scene->scene, handle->options);
    handle->state = std::move(result.state);
    handle->report = std::move(result.report);
    const bool diverged = handle->report.diverged;
    const std::string diagnostic = handle->report.diagnostic;
    *out = handle.release();
    return diverged ? fail(TRIGS_ERR_DIVERGED, "fit diverged: " + diagnostic) : TRIGS_OK;
  });
}

trigs_status trigs_fit_save(const trigs_fit* fit, const char* dir) {
  if (!fit || !dir) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    trigs::save_fit({fit->state, fit->report}, fit->options, dir);
    return TRIGS_OK;
  });
}

trigs_status trigs_fit_load(const char* dir, trigs_fit** out) {
  if (!dir || !out) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<trigs_fit>();
    const std::filesystem::path root(dir);
    handle->state = trigs::load_fit_state(root);
    std::ifstream hist(root / "loss_history.txt", std::ios::binary);
    if (hist) handle->report.loss_history = trigs::read_loss_history(hist);
    handle->options.model = handle->state.model;
    handle->options.anchors_at_truth = handle->state.anchors_at_truth;
    *out = handle.release();
    return TRIGS_OK;
  });
}

size_t trigs_fit_iterations_run(const trigs_fit* fit) {
  return fit ? fit->report.loss_history.size() : 0;
}

double trigs_fit_final_rmse(const trigs_fit* fit) {
  return fit ? fit->report.final_rmse : std::nan("");
}

int trigs_fit_budget_constant(const trigs_fit* fit) {
  if (!fit) return 0;
  for (auto c : fit->report.budget_history) {
    if (c != fit->state.size()) return 0;
  }
  return 1;
}

void trigs_fit_free(trigs_fit* fit) { delete fit; }

trigs_status trigs_evaluate(const trigs_fit* fit, const trigs_scene* scene, trigs_metrics* out) {
  if (!fit || !scene || !out) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    const auto m = trigs::evaluate(fit->state, scene->scene);
    out->weighted_rmse = m.weighted_rmse;
    out->primitive_count = m.primitive_count;
    double sum = 0.0;
    int count = 0;
    for (double e : m.body_twist_error) {
      if (!std::isnan(e)) {
        sum += e;
        ++count;
      }
    }
    out->mean_twist_error = count ? sum / count : std::nan("");
    return TRIGS_OK;
  });
}

trigs_status trigs_write_report(const trigs_fit* fit, const trigs_scene* scene,
                                const char* report_path) {
  if (!fit || !scene || !report_path) return fail(TRIGS_ERR_INVALID_INPUT, "null argument");
  return guarded([&] {
    const auto m = trigs::evaluate(fit->state, scene->scene);
    const auto* history = fit->report.loss_history.empty() ? nullptr : &fit->report.loss_history;
    trigs::save_report(m, scene->scene, report_path, history);
    return TRIGS_OK;
  });
}

}  // extern "C"
