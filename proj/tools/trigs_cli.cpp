// trigs command line: generate / fit / evaluate.
//
// Exit codes: 0 success, 1 invalid input, 2 divergence abort.

#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "trigs/trigs.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitDiverged = 2;

int report_failure(trigs_status status, const char* what) {
  std::fprintf(stderr, "trigs %s: %s\n", what, trigs_last_error());
  return status == TRIGS_ERR_DIVERGED ? kExitDiverged : kExitInvalid;
}

// Parses "w_reg=0.01,w_motion=0.0001,w_rigid=1.0" into the options.
bool apply_weights(const std::string& text, trigs_fit_options& o) {
  const std::map<std::string, double*> slots{
      {"w_reg", &o.w_reg}, {"w_motion", &o.w_motion}, {"w_rigid", &o.w_rigid}};
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) return false;
    const auto it = slots.find(item.substr(0, eq));
    if (it == slots.end()) return false;
    try {
      std::size_t used = 0;
      const std::string value = item.substr(eq + 1);
      *it->second = std::stod(value, &used);
      if (used != value.size()) return false;
    } catch (const std::exception&) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid-body motion model for 4D Gaussian primitives: synthetic scenes and fitting"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic scene with known motion");
  gen->add_option("--config", config_path, "Scene config (key = value)")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  trigs_fit_options opts;
  trigs_fit_options_init(&opts);
  std::string scene_dir, fit_out, weights = "w_reg=0.01,w_motion=0.0001,w_rigid=1.0";
  std::string model = "full", optimizer = "adam";
  bool anchors_at_truth = false;
  auto* fit = app.add_subcommand("fit", "Fit motion parameters to a scene's trajectories");
  fit->add_option("--scene", scene_dir, "Scene directory")->required();
  fit->add_option("--weights", weights, "Regularizer weights")->capture_default_str();
  fit->add_option("--lambda-c", opts.lambda_c, "Color affinity sharpness")->capture_default_str();
  fit->add_option("--knn", opts.knn, "Neighbours for rigid coherence")->capture_default_str();
  fit->add_option("--reloc-period", opts.reloc_period, "Iterations between relocations")
      ->capture_default_str();
  fit->add_option("--reloc-threshold", opts.reloc_threshold, "Opacity threshold")
      ->capture_default_str();
  fit->add_option("--iters", opts.iterations, "Iterations")->capture_default_str();
  fit->add_option("--seed", opts.seed, "Relocation RNG seed")->capture_default_str();
  fit->add_option("--model", model, "full | no-gauge-fix | linear")->capture_default_str();
  fit->add_option("--optimizer", optimizer, "adam | gd")->capture_default_str();
  fit->add_option("--lr-twist", opts.lr_twist, "Twist step size")->capture_default_str();
  fit->add_option("--lr-anchor", opts.lr_anchor, "Anchor step size")->capture_default_str();
  fit->add_option("--lr-final-ratio", opts.lr_final_ratio, "Final/initial step size ratio")
      ->capture_default_str();
  fit->add_flag("--anchors-at-truth", anchors_at_truth, "Hold anchors at ground truth");
  fit->add_option("--out", fit_out, "Output directory")->required();

  std::string fit_dir, eval_scene, report_path;
  auto* eval = app.add_subcommand("evaluate", "Score a fit against its scene");
  eval->add_option("--fit", fit_dir, "Fit directory")->required();
  eval->add_option("--scene", eval_scene, "Scene directory")->required();
  eval->add_option("--report", report_path, "Report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (*gen) {
    trigs_scene* scene = nullptr;
    if (auto st = trigs_scene_generate(config_path.c_str(), &scene); st != TRIGS_OK) {
      return report_failure(st, "generate");
    }
    const auto st = trigs_scene_save(scene, out_dir.c_str());
    std::printf("generated %zu primitives x %zu timesteps\n", trigs_scene_primitive_count(scene),
                trigs_scene_timestep_count(scene));
    trigs_scene_free(scene);
    return st == TRIGS_OK ? kExitOk : report_failure(st, "generate");
  }

  if (*fit) {
    if (!apply_weights(weights, opts)) {
      std::fprintf(stderr, "trigs fit: malformed --weights '%s'\n", weights.c_str());
      return kExitInvalid;
    }
    if (model == "full") {
      opts.model = TRIGS_MODEL_FULL;
    } else if (model == "no-gauge-fix") {
      opts.model = TRIGS_MODEL_NO_GAUGE_FIX;
    } else if (model == "linear") {
      opts.model = TRIGS_MODEL_LINEAR;
    } else {
      std::fprintf(stderr, "trigs fit: unknown --model '%s'\n", model.c_str());
      return kExitInvalid;
    }
    if (optimizer == "adam") {
      opts.optimizer = TRIGS_OPTIMIZER_ADAM;
    } else if (optimizer == "gd") {
      opts.optimizer = TRIGS_OPTIMIZER_GD;
    } else {
      std::fprintf(stderr, "trigs fit: unknown --optimizer '%s'\n", optimizer.c_str());
      return kExitInvalid;
    }
    opts.anchors_at_truth = anchors_at_truth ? 1 : 0;

    trigs_scene* scene = nullptr;
    if (auto st = trigs_scene_load(scene_dir.c_str(), &scene); st != TRIGS_OK) {
      return report_failure(st, "fit");
    }
    trigs_fit* result = nullptr;
    const auto run = trigs_fit_run(scene, &opts, &result);
    int code = kExitOk;
    if (run != TRIGS_OK) code = report_failure(run, "fit");
    if (result) {
      if (auto st = trigs_fit_save(result, fit_out.c_str()); st != TRIGS_OK && code == kExitOk) {
        code = report_failure(st, "fit");
      }
      if (run == TRIGS_OK) {
        std::printf("fit %zu iterations, weighted rmse %.6g\n", trigs_fit_iterations_run(result),
                    trigs_fit_final_rmse(result));
      }
    }
    trigs_fit_free(result);
    trigs_scene_free(scene);
    return code;
  }

  trigs_scene* scene = nullptr;
  trigs_fit* result = nullptr;
  int code = kExitOk;
  if (auto st = trigs_scene_load(eval_scene.c_str(), &scene); st != TRIGS_OK) {
    code = report_failure(st, "evaluate");
  } else if (auto st2 = trigs_fit_load(fit_dir.c_str(), &result); st2 != TRIGS_OK) {
    code = report_failure(st2, "evaluate");
  } else if (auto st3 = trigs_write_report(result, scene, report_path.c_str()); st3 != TRIGS_OK) {
    code = report_failure(st3, "evaluate");
  } else {
    trigs_metrics m;
    trigs_evaluate(result, scene, &m);
    std::printf("weighted rmse %.6g over %zu primitives\n", m.weighted_rmse, m.primitive_count);
  }
  trigs_fit_free(result);
  trigs_scene_free(scene);
  return code;
}
