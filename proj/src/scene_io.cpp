#include "trigs/scene_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trigs {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSceneFormat = "trigs-scene-1";
constexpr const char* kFitFormat = "trigs-fit-1";
constexpr const char* kTrajectoryHeader = "# id time x y z weight";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || t.empty()) {
    throw InvalidInput(context + ": expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw InvalidInput(context + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

Vec3 vec3(const Eigen::VectorXd& v) { return Vec3(v[0], v[1], v[2]); }

void put_twist(KeyValueFile& kv, const std::string& key, const Twist& t) {
  kv.set(key, Eigen::VectorXd(t.as_vector()));
}

Twist get_twist(const KeyValueFile& kv, const std::string& key) {
  return Twist::from_vector(kv.require_vector(key, 6));
}

void put_params(KeyValueFile& kv, const std::string& prefix, const MotionParams& p) {
  put_twist(kv, prefix + ".base", p.twists.base);
  put_twist(kv, prefix + ".ctrl0", p.twists.ctrl0);
  put_twist(kv, prefix + ".ctrl1", p.twists.ctrl1);
  put_twist(kv, prefix + ".ctrl2", p.twists.ctrl2);
  kv.set(prefix + ".anchor", Eigen::VectorXd(p.anchor));
}

MotionParams get_params(const KeyValueFile& kv, const std::string& prefix) {
  MotionParams p;
  p.twists.base = get_twist(kv, prefix + ".base");
  p.twists.ctrl0 = get_twist(kv, prefix + ".ctrl0");
  p.twists.ctrl1 = get_twist(kv, prefix + ".ctrl1");
  p.twists.ctrl2 = get_twist(kv, prefix + ".ctrl2");
  p.anchor = vec3(kv.require_vector(prefix + ".anchor", 3));
  return p;
}

void put_primitive(KeyValueFile& kv, const std::string& prefix, const Primitive& p) {
  kv.set(prefix + ".mu", Eigen::VectorXd(p.mu));
  kv.set(prefix + ".scale", Eigen::VectorXd(p.scale));
  Eigen::VectorXd q(4);
  q << p.orient.w(), p.orient.x(), p.orient.y(), p.orient.z();
  kv.set(prefix + ".orient", q);
  kv.set(prefix + ".alpha", p.profile.alpha);
  kv.set(prefix + ".mu_t", p.profile.mu_t);
  kv.set(prefix + ".s_t", p.profile.s_t);
  kv.set(prefix + ".color", Eigen::VectorXd(p.color));
}

Primitive get_primitive(const KeyValueFile& kv, const std::string& prefix) {
  Primitive p;
  p.mu = vec3(kv.require_vector(prefix + ".mu", 3));
  p.scale = vec3(kv.require_vector(prefix + ".scale", 3));
  const auto q = kv.require_vector(prefix + ".orient", 4);
  p.orient = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
  p.profile.alpha = kv.require_double(prefix + ".alpha");
  p.profile.mu_t = kv.require_double(prefix + ".mu_t");
  p.profile.s_t = kv.require_double(prefix + ".s_t");
  p.color = vec3(kv.require_vector(prefix + ".color", 3));
  if (!p.valid()) throw InvalidInput(prefix + ": invalid primitive");
  return p;
}

std::size_t require_count(const KeyValueFile& kv, const std::string& key) {
  const auto n = kv.require_int(key);
  if (n < 0) throw InvalidInput(key + " must be non-negative");
  return static_cast<std::size_t>(n);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------- KeyValueFile

KeyValueFile KeyValueFile::parse(std::istream& in) {
  KeyValueFile kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw InvalidInput("line " + std::to_string(lineno) + ": empty key");
    if (kv.contains(key)) throw InvalidInput("duplicate key '" + key + "'");
    kv.entries_.emplace_back(key, trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const fs::path& path) {
  auto in = open_in(path);
  return parse(in);
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KeyValueFile::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValueFile::set(const std::string& key, const Eigen::VectorXd& values) {
  std::string s;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i) s += ' ';
    s += format_double(values[i]);
  }
  set(key, s);
}

bool KeyValueFile::contains(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const std::string& KeyValueFile::require(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw InvalidInput("missing key '" + key + "'");
}

double KeyValueFile::require_double(const std::string& key) const {
  return parse_double(require(key), key);
}

long long KeyValueFile::require_int(const std::string& key) const {
  return parse_int(require(key), key);
}

Eigen::VectorXd KeyValueFile::require_vector(const std::string& key, int size) const {
  const auto toks = split_ws(require(key));
  if (static_cast<int>(toks.size()) != size) {
    throw InvalidInput(key + ": expected " + std::to_string(size) + " values");
  }
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = parse_double(toks[static_cast<std::size_t>(i)], key);
  return v;
}

void KeyValueFile::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

void KeyValueFile::save(const fs::path& path) const {
  auto out = open_out(path);
  write(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------- scene config

SceneConfig scene_config_from_kv(const KeyValueFile& kv) {
  SceneConfig cfg;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "n_bodies") {
      cfg.n_bodies = static_cast<int>(parse_int(value, key));
    } else if (key == "primitives_per_body") {
      cfg.primitives_per_body = static_cast<int>(parse_int(value, key));
    } else if (key == "n_timesteps") {
      cfg.n_timesteps = static_cast<int>(parse_int(value, key));
    } else if (key == "motion_kind") {
      cfg.motion_kinds.clear();
      std::stringstream ss(value);
      for (std::string item; std::getline(ss, item, ',');) {
        cfg.motion_kinds.push_back(motion_kind_from_string(trim(item)));
      }
    } else if (key == "omega_min") {
      cfg.omega_min = parse_double(value, key);
    } else if (key == "omega_max") {
      cfg.omega_max = parse_double(value, key);
    } else if (key == "nu_min") {
      cfg.nu_min = parse_double(value, key);
    } else if (key == "nu_max") {
      cfg.nu_max = parse_double(value, key);
    } else if (key == "noise_sigma") {
      cfg.noise_sigma = parse_double(value, key);
    } else if (key == "rng_seed") {
      const auto s = parse_int(value, key);
      if (s < 0) throw InvalidInput("rng_seed must be non-negative");
      cfg.rng_seed = static_cast<std::uint64_t>(s);
    } else if (key == "body_size") {
      cfg.body_size = parse_double(value, key);
    } else if (key == "body_spacing") {
      cfg.body_spacing = parse_double(value, key);
    } else if (key == "temporal_scale") {
      cfg.temporal_scale = parse_double(value, key);
    } else if (key == "alpha") {
      cfg.alpha = parse_double(value, key);
    } else if (key == "dead_fraction") {
      cfg.dead_fraction = parse_double(value, key);
    } else if (key == "dead_alpha") {
      cfg.dead_alpha = parse_double(value, key);
    } else {
      throw InvalidInput("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void scene_config_to_kv(const SceneConfig& cfg, KeyValueFile& kv, const std::string& prefix) {
  kv.set(prefix + "n_bodies", std::to_string(cfg.n_bodies));
  kv.set(prefix + "primitives_per_body", std::to_string(cfg.primitives_per_body));
  kv.set(prefix + "n_timesteps", std::to_string(cfg.n_timesteps));
  std::string kinds;
  for (std::size_t i = 0; i < cfg.motion_kinds.size(); ++i) {
    if (i) kinds += ',';
    kinds += to_string(cfg.motion_kinds[i]);
  }
  kv.set(prefix + "motion_kind", kinds);
  kv.set(prefix + "omega_min", cfg.omega_min);
  kv.set(prefix + "omega_max", cfg.omega_max);
  kv.set(prefix + "nu_min", cfg.nu_min);
  kv.set(prefix + "nu_max", cfg.nu_max);
  kv.set(prefix + "noise_sigma", cfg.noise_sigma);
  kv.set(prefix + "rng_seed", std::to_string(cfg.rng_seed));
  kv.set(prefix + "body_size", cfg.body_size);
  kv.set(prefix + "body_spacing", cfg.body_spacing);
  kv.set(prefix + "temporal_scale", cfg.temporal_scale);
  kv.set(prefix + "alpha", cfg.alpha);
  kv.set(prefix + "dead_fraction", cfg.dead_fraction);
  kv.set(prefix + "dead_alpha", cfg.dead_alpha);
}

// ---------------------------------------------------------------- trajectories

void write_trajectories(std::ostream& out, const TrajectoryData& data) {
  out << kTrajectoryHeader << '\n';
  const std::size_t nt = data.n_times();
  const std::size_t n = nt ? data.targets.size() / nt : 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < nt; ++k) {
      const auto idx = data.index(i, k);
      const Vec3& y = data.targets[idx];
      out << i << ' ' << format_double(data.times[k]) << ' ' << format_double(y.x()) << ' '
          << format_double(y.y()) << ' ' << format_double(y.z()) << ' '
          << format_double(data.weights[idx]) << '\n';
    }
  }
}

TrajectoryData read_trajectories(std::istream& in, std::size_t n_prims) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kTrajectoryHeader) {
    throw InvalidInput(std::string("trajectories: expected header '") + kTrajectoryHeader + "'");
  }
  struct Record {
    std::size_t id;
    double t;
    Vec3 y;
    double w;
  };
  std::vector<Record> records;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() != 6) throw InvalidInput("trajectories: expected 6 fields per record");
    const auto id = parse_int(toks[0], "trajectory id");
    if (id < 0) throw InvalidInput("trajectories: negative id");
    records.push_back({static_cast<std::size_t>(id), parse_double(toks[1], "time"),
                       Vec3(parse_double(toks[2], "x"), parse_double(toks[3], "y"),
                            parse_double(toks[4], "z")),
                       parse_double(toks[5], "weight")});
  }
  if (n_prims == 0 || records.size() % n_prims != 0) {
    throw InvalidInput("trajectories: record count does not match the primitive count");
  }
  TrajectoryData d;
  const std::size_t nt = records.size() / n_prims;
  for (std::size_t k = 0; k < nt; ++k) d.times.push_back(records[k].t);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.id != r / nt || rec.t != d.times[r % nt]) {
      throw InvalidInput("trajectories: records must be ordered by id then time on a shared grid");
    }
    if (!(rec.w > 0.0 && rec.w <= 1.0)) throw InvalidInput("trajectories: weight outside (0, 1]");
    d.targets.push_back(rec.y);
    d.weights.push_back(rec.w);
  }
  return d;
}

// ---------------------------------------------------------------- scene

void save_scene(const Scene& scene, const fs::path& dir) {
  fs::create_directories(dir);
  KeyValueFile kv;
  kv.set("format", kSceneFormat);
  scene_config_to_kv(scene.config, kv, "config.");
  kv.set("body.count", std::to_string(scene.bodies.size()));
  for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
    const std::string p = "body." + std::to_string(b);
    kv.set(p + ".kind", to_string(scene.bodies[b].kind));
    kv.set(p + ".diameter", scene.bodies[b].diameter);
    put_params(kv, p + ".truth", scene.bodies[b].truth);
  }
  kv.set("prim.count", std::to_string(scene.size()));
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const std::string p = "prim." + std::to_string(i);
    kv.set(p + ".body", std::to_string(scene.body[i]));
    put_primitive(kv, p, scene.prims[i]);
  }
  kv.save(dir / "scene.txt");
  auto out = open_out(dir / "trajectories.txt");
  write_trajectories(out, scene.data);
  if (!out) throw std::runtime_error("write failed: trajectories.txt");
}

Scene load_scene(const fs::path& dir) {
  const auto kv = KeyValueFile::load(dir / "scene.txt");
  if (kv.require("format") != kSceneFormat) throw InvalidInput("scene.txt: unsupported format");
  Scene scene;
  KeyValueFile cfg_kv;
  for (const auto& [k, v] : kv.entries()) {
    if (k.rfind("config.", 0) == 0) cfg_kv.set(k.substr(7), v);
  }
  scene.config = scene_config_from_kv(cfg_kv);

  const std::size_t n_bodies = require_count(kv, "body.count");
  for (std::size_t b = 0; b < n_bodies; ++b) {
    const std::string p = "body." + std::to_string(b);
    BodyInfo info;
    info.kind = motion_kind_from_string(kv.require(p + ".kind"));
    info.diameter = kv.require_double(p + ".diameter");
    info.truth = get_params(kv, p + ".truth");
    scene.bodies.push_back(info);
  }
  const std::size_t n = require_count(kv, "prim.count");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = "prim." + std::to_string(i);
    const auto b = kv.require_int(p + ".body");
    if (b < 0 || static_cast<std::size_t>(b) >= n_bodies) {
      throw InvalidInput(p + ".body out of range");
    }
    scene.prims.push_back(get_primitive(kv, p));
    scene.body.push_back(static_cast<int>(b));
    scene.ground_truth.push_back(scene.bodies[static_cast<std::size_t>(b)].truth);
  }
  auto in = open_in(dir / "trajectories.txt");
  scene.data = read_trajectories(in, n);
  return scene;
}

// ---------------------------------------------------------------- fit

void write_loss_history(std::ostream& out, const std::vector<double>& history) {
  for (std::size_t i = 0; i < history.size(); ++i) out << i << ' ' << format_double(history[i]) << '\n';
}

std::vector<double> read_loss_history(std::istream& in) {
  std::vector<double> h;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto toks = split_ws(line);
    if (toks.size() != 2) throw InvalidInput("loss history: expected 'iter loss'");
    if (parse_int(toks[0], "iter") != static_cast<long long>(h.size())) {
      throw InvalidInput("loss history: iterations must be consecutive from 0");
    }
    h.push_back(parse_double(toks[1], "loss"));
  }
  return h;
}

void save_fit(const FitResult& fit, const FitOptions& options, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& s = fit.state;
  KeyValueFile kv;
  kv.set("format", kFitFormat);
  kv.set("fit.model", to_string(s.model));
  kv.set("fit.anchors_at_truth", s.anchors_at_truth ? "1" : "0");
  kv.set("fit.optimizer", to_string(options.optimizer));
  kv.set("fit.iterations", std::to_string(options.iterations));
  kv.set("fit.w_reg", options.weights.w_reg);
  kv.set("fit.w_motion", options.weights.w_motion);
  kv.set("fit.w_rigid", options.weights.w_rigid);
  kv.set("fit.lambda_c", options.weights.lambda_c);
  kv.set("fit.knn", std::to_string(options.weights.k_neighbors));
  kv.set("fit.reloc_period", std::to_string(options.relocation.period));
  kv.set("fit.reloc_threshold", options.relocation.opacity_threshold);
  kv.set("fit.reloc_scale_factor", options.relocation.scale_factor);
  kv.set("fit.seed", std::to_string(options.relocation.rng_seed));
  kv.set("prim.count", std::to_string(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::string p = "prim." + std::to_string(i);
    kv.set(p + ".body", std::to_string(s.body[i]));
    kv.set(p + ".origin", std::to_string(s.origin[i]));
    put_primitive(kv, p, s.prims[i]);
    put_params(kv, "param." + std::to_string(i), s.params[i]);
  }
  kv.save(dir / "state.txt");

  const auto& r = fit.report;
  KeyValueFile rep;
  rep.set("metrics.final_loss", r.final_loss);
  rep.set("metrics.weighted_rmse", r.final_rmse);
  rep.set("metrics.iterations_run", std::to_string(r.loss_history.size()));
  rep.set("metrics.primitive_count", std::to_string(s.size()));
  bool constant = true;
  for (auto c : r.budget_history) constant = constant && c == s.size();
  rep.set("metrics.budget_constant", constant ? "1" : "0");
  rep.set("metrics.relocation_events", std::to_string(r.relocation_events));
  rep.set("metrics.relocated_primitives", std::to_string(r.relocated_primitives));
  rep.set("metrics.skipped_relocations", std::to_string(r.skipped_relocations));
  rep.set("metrics.flagged_non_monotone", r.flagged_non_monotone ? "1" : "0");
  rep.set("metrics.diverged", r.diverged ? "1" : "0");
  rep.set("metrics.wall_seconds", r.wall_seconds);
  for (std::size_t b = 0; b < r.body_twist_error.size(); ++b) {
    rep.set("metrics.body." + std::to_string(b) + ".twist_error", r.body_twist_error[b]);
  }
  if (!r.diagnostic.empty()) rep.set("diagnostic", r.diagnostic);
  rep.save(dir / "report.txt");

  auto out = open_out(dir / "loss_history.txt");
  write_loss_history(out, r.loss_history);
}

FitState load_fit_state(const fs::path& dir) {
  const auto kv = KeyValueFile::load(dir / "state.txt");
  if (kv.require("format") != kFitFormat) throw InvalidInput("state.txt: unsupported format");
  FitState s;
  s.model = motion_model_from_string(kv.require("fit.model"));
  s.anchors_at_truth = kv.require_int("fit.anchors_at_truth") != 0;
  const std::size_t n = require_count(kv, "prim.count");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = "prim." + std::to_string(i);
    const auto body = kv.require_int(p + ".body");
    const auto origin = kv.require_int(p + ".origin");
    if (body < 0 || origin < 0) throw InvalidInput(p + ": negative body or origin");
    s.body.push_back(static_cast<int>(body));
    s.origin.push_back(static_cast<std::size_t>(origin));
    s.prims.push_back(get_primitive(kv, p));
    s.params.push_back(get_params(kv, "param." + std::to_string(i)));
  }
  return s;
}

fs::path loss_history_path_for(const fs::path& report_path) {
  auto p = report_path;
  p.replace_filename(report_path.stem().string() + "_loss_history.txt");
  return p;
}

void save_report(const Metrics& metrics, const Scene& scene, const fs::path& path,
                 const std::vector<double>* loss_history) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  KeyValueFile rep;
  rep.set("metrics.weighted_rmse", metrics.weighted_rmse);
  rep.set("metrics.primitive_count", std::to_string(metrics.primitive_count));
  for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
    const std::string p = "metrics.body." + std::to_string(b);
    rep.set(p + ".diameter", scene.bodies[b].diameter);
    const double rmse = b < metrics.body_rmse.size() ? metrics.body_rmse[b] : std::nan("");
    rep.set(p + ".weighted_rmse", rmse);
    rep.set(p + ".relative_rmse", rmse / scene.bodies[b].diameter);
    const double err = b < metrics.body_twist_error.size() ? metrics.body_twist_error[b]
                                                           : std::nan("");
    rep.set(p + ".twist_error", err);
  }
  if (loss_history) {
    rep.set("metrics.iterations_run", std::to_string(loss_history->size()));
    if (!loss_history->empty()) rep.set("metrics.final_loss", loss_history->back());
    auto out = open_out(loss_history_path_for(path));
    write_loss_history(out, *loss_history);
  }
  rep.save(path);
}

}  // namespace trigs
