#pragma once

// Text formats for scenes, fits and reports.
//
//   key-value files: one `key = value` per line, UTF-8, LF endings; blank
//                    lines and lines starting with '#' are ignored.
//   trajectories:    header `# id time x y z weight`, then one space
//                    separated record per (primitive, time), 17 significant
//                    digits.
//
// All readers throw InvalidInput on malformed content and std::runtime_error
// when a file cannot be opened.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trigs/harness.hpp"

namespace trigs {

std::string format_double(double v);

class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in);
  static KeyValueFile load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, const Eigen::VectorXd& values);

  bool contains(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  const std::string& require(const std::string& key) const;
  double require_double(const std::string& key) const;
  long long require_int(const std::string& key) const;
  Eigen::VectorXd require_vector(const std::string& key, int size) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Scene config from the flat key-value format (keys as SceneConfig fields,
/// motion_kind as a comma separated list). Unknown keys are rejected.
SceneConfig scene_config_from_kv(const KeyValueFile& kv);
void scene_config_to_kv(const SceneConfig& cfg, KeyValueFile& kv, const std::string& prefix = "");

void write_trajectories(std::ostream& out, const TrajectoryData& data);
TrajectoryData read_trajectories(std::istream& in, std::size_t n_prims);

/// <dir>/scene.txt and <dir>/trajectories.txt
void save_scene(const Scene& scene, const std::filesystem::path& dir);
Scene load_scene(const std::filesystem::path& dir);

/// <dir>/state.txt, <dir>/report.txt and <dir>/loss_history.txt
void save_fit(const FitResult& fit, const FitOptions& options, const std::filesystem::path& dir);
FitState load_fit_state(const std::filesystem::path& dir);

void write_loss_history(std::ostream& out, const std::vector<double>& history);
std::vector<double> read_loss_history(std::istream& in);

/// Writes `metrics.*` keys to `path` and, when a history is given, the
/// `iter loss` pairs to <stem>_loss_history.txt beside it.
void save_report(const Metrics& metrics, const Scene& scene, const std::filesystem::path& path,
                 const std::vector<double>* loss_history = nullptr);

std::filesystem::path loss_history_path_for(const std::filesystem::path& report_path);

}  // namespace trigs
