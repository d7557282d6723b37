#pragma once

// Parameter-grid sweeps with an append-only JSON-lines checkpoint, and the
// CSV/JSON writers for their results.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cavitylc/classify.hpp"
#include "cavitylc/config.hpp"
#include "cavitylc/parallel.hpp"
#include "cavitylc/stability.hpp"
#include "cavitylc/steady_state.hpp"

namespace cavitylc {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr int kSweepSchemaVersion = 1;

inline double& axis_field(ModelParams& p, const std::string& name) {
  if (name == "eta") return p.eta;
  if (name == "delta_c") return p.delta_c;
  if (name == "u0n") return p.u0n;
  if (name == "g1d") return p.g1d;
  throw Error(ErrorCode::InvalidConfig, "axis parameter must be one of eta, delta_c, u0n, g1d; got '" + name + "'");
}

// Checks everything a run needs before any work starts.
inline void validate(const RunConfig& cfg) {
  validate_params(cfg.model);
  validate(cfg.integrator);
  for (const Axis* a : {&cfg.axis1, &cfg.axis2}) {
    ModelParams probe;
    axis_field(probe, a->name);
    if (a->count < 1) throw Error(ErrorCode::InvalidConfig, "axis counts must be >= 1");
    if (!std::isfinite(a->min) || !std::isfinite(a->max)) throw Error(ErrorCode::InvalidConfig, "axis bounds must be finite");
  }
  if (cfg.axis1.name == cfg.axis2.name) throw Error(ErrorCode::InvalidConfig, "axis1 and axis2 must differ");
  for (const auto& t : cfg.tasks) {
    if (t != "classify" && t != "stability" && t != "steady") {
      throw Error(ErrorCode::InvalidConfig, "unknown task '" + t + "' (classify, stability, steady)");
    }
  }
  if (cfg.checkpoint_interval < 1) throw Error(ErrorCode::InvalidConfig, "checkpoint_interval must be >= 1");
  if (cfg.ensemble.n_traj < 1) throw Error(ErrorCode::InvalidConfig, "n_traj must be >= 1");
}

inline EnsembleConfig ensemble_config(const RunConfig& cfg) {
  EnsembleConfig e = cfg.ensemble;
  e.dt = cfg.integrator.dt;
  e.t_end = cfg.integrator.t_end;
  e.output_stride = cfg.integrator.output_stride;
  e.t0 = cfg.rules.t0;
  e.t1 = cfg.rules.t1;
  e.seed_amplitude = cfg.seed_amplitude;
  e.threads = cfg.threads;
  return e;
}

struct SweepRecord {
  int index = 0;
  int i1 = 0;
  int i2 = 0;
  double x1 = 0.0;
  double x2 = 0.0;
  std::string label;  // N, S, SL, AL, C; ERROR on failure; empty if classify was not requested
  bool low_confidence = false;
  double ipr = std::numeric_limits<double>::quiet_NaN();
  double mean_intensity = std::numeric_limits<double>::quiet_NaN();
  double dominant_frequency = std::numeric_limits<double>::quiet_NaN();
  double atomic_frequency = std::numeric_limits<double>::quiet_NaN();
  double max_growth = std::numeric_limits<double>::quiet_NaN();
  std::optional<bool> stable;
  double steady_theta = std::numeric_limits<double>::quiet_NaN();
  double steady_intensity = std::numeric_limits<double>::quiet_NaN();
  double steady_residual = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> eta_c_analytic;
  std::string error;
};

struct SweepResult {
  RunConfig config;
  std::vector<SweepRecord> records;  // row-major: index = i1 * axis2.count + i2
  json provenance;
  int failures = 0;
  int resumed = 0;  // records taken from an existing checkpoint
  bool complete = false;
};

namespace detail {

// JSON has no NaN; missing numbers are written as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_from(const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

}  // namespace detail

inline json to_json(const SweepRecord& r) {
  using detail::number_or_null;
  return json{{"index", r.index},
              {"i1", r.i1},
              {"i2", r.i2},
              {"x1", r.x1},
              {"x2", r.x2},
              {"label", r.label},
              {"low_confidence", r.low_confidence},
              {"ipr", number_or_null(r.ipr)},
              {"mean_I", number_or_null(r.mean_intensity)},
              {"dom_freq", number_or_null(r.dominant_frequency)},
              {"atomic_freq", number_or_null(r.atomic_frequency)},
              {"max_growth", number_or_null(r.max_growth)},
              {"stable", r.stable ? json(*r.stable) : json(nullptr)},
              {"steady_theta", number_or_null(r.steady_theta)},
              {"steady_I", number_or_null(r.steady_intensity)},
              {"steady_residual", number_or_null(r.steady_residual)},
              {"eta_c_analytic", r.eta_c_analytic ? json(*r.eta_c_analytic) : json(nullptr)},
              {"error", r.error}};
}

inline SweepRecord record_from_json(const json& j) {
  using detail::number_from;
  SweepRecord r;
  r.index = j.at("index").get<int>();
  r.i1 = j.at("i1").get<int>();
  r.i2 = j.at("i2").get<int>();
  r.x1 = j.at("x1").get<double>();
  r.x2 = j.at("x2").get<double>();
  r.label = j.at("label").get<std::string>();
  r.low_confidence = j.at("low_confidence").get<bool>();
  r.ipr = number_from(j.at("ipr"));
  r.mean_intensity = number_from(j.at("mean_I"));
  r.dominant_frequency = number_from(j.at("dom_freq"));
  r.atomic_frequency = number_from(j.at("atomic_freq"));
  r.max_growth = number_from(j.at("max_growth"));
  if (!j.at("stable").is_null()) r.stable = j.at("stable").get<bool>();
  r.steady_theta = number_from(j.at("steady_theta"));
  r.steady_intensity = number_from(j.at("steady_I"));
  r.steady_residual = number_from(j.at("steady_residual"));
  if (!j.at("eta_c_analytic").is_null()) r.eta_c_analytic = j.at("eta_c_analytic").get<double>();
  r.error = j.at("error").get<std::string>();
  return r;
}

inline ModelParams point_params(const RunConfig& cfg, int i1, int i2) {
  ModelParams p = cfg.model;
  axis_field(p, cfg.axis1.name) = cfg.axis1.value(i1);
  axis_field(p, cfg.axis2.name) = cfg.axis2.value(i2);
  return p;
}

// Runs the requested tasks at one grid point. Numerical errors end up in the
// record (label ERROR); nothing is thrown for them.
inline SweepRecord run_point(const RunConfig& cfg, int index) {
  SweepRecord r;
  r.index = index;
  r.i1 = index / cfg.axis2.count;
  r.i2 = index % cfg.axis2.count;
  r.x1 = cfg.axis1.value(r.i1);
  r.x2 = cfg.axis2.value(r.i2);
  const ModelParams p = point_params(cfg, r.i1, r.i2);
  r.eta_c_analytic = analytic_critical_pump(p);
  const auto wants = [&](const char* task) { return std::find(cfg.tasks.begin(), cfg.tasks.end(), task) != cfg.tasks.end(); };
  const auto note = [&](const std::string& what) { r.error += (r.error.empty() ? "" : "; ") + what; };
  try {
    validate_params(p);
    if (wants("classify")) {
      try {
        const auto traj = evolve_meanfield(meanfield_seed(p, cfg.seed_amplitude), p, cfg.integrator);
        const auto label = classify_phase(traj, p, cfg.rules);
        r.label = std::string(to_string(label.phase));
        r.low_confidence = label.low_confidence;
        r.ipr = label.ipr;
        r.mean_intensity = label.mean_intensity;
        r.dominant_frequency = label.dominant_frequency;
        r.atomic_frequency = label.atomic_frequency;
      } catch (const std::exception& e) {
        r.label = "ERROR";
        note(e.what());
      }
    }
    if (wants("stability") || wants("steady")) {
      try {
        const auto ss = imaginary_time_solve(p, symmetry_broken_seed(p.n_max, cfg.symmetry_seed), cfg.steady);
        r.steady_theta = ss.order().theta;
        r.steady_intensity = std::norm(ss.a);
        r.steady_residual = ss.residual;
        if (wants("stability")) {
          const auto report = analyze_stability(ss, p);
          r.max_growth = report.max_growth;
          r.stable = report.stable;
        }
      } catch (const std::exception& e) {
        if (r.label.empty()) r.label = "ERROR";
        note(e.what());
      }
    }
  } catch (const std::exception& e) {
    r.label = "ERROR";
    note(e.what());
  }
  return r;
}

namespace detail {

inline json checkpoint_header(const RunConfig& cfg) {
  return json{{"format", "cavitylc-checkpoint"},
              {"version", kSweepSchemaVersion},
              {"config_hash", config_hash(cfg)},
              {"points", cfg.axis1.count * cfg.axis2.count}};
}

// Loads records from an existing checkpoint. A torn final line (the process
// died mid-write) is ignored; anything else malformed is an error.
inline std::map<int, SweepRecord> load_checkpoint(const std::string& path, const RunConfig& cfg) {
  std::map<int, SweepRecord> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  if (!std::getline(in, line) || line.empty()) return done;
  const json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != "cavitylc-checkpoint") {
    throw Error(ErrorCode::ResumeMismatch, "checkpoint " + path + " has no valid header");
  }
  const auto expected = config_hash(cfg);
  if (header.value("config_hash", "") != expected) {
    throw Error(ErrorCode::ResumeMismatch, "checkpoint " + path + " was written for config " +
                                               header.value("config_hash", "?") + ", current config is " + expected);
  }
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const json j = json::parse(lines[k], nullptr, false);
    if (j.is_discarded()) {
      if (k + 1 == lines.size()) break;
      throw Error(ErrorCode::Io, "checkpoint " + path + " is corrupt at record " + std::to_string(k + 1));
    }
    auto rec = record_from_json(j);
    done[rec.index] = std::move(rec);
  }
  return done;
}

}  // namespace detail

struct SweepControl {
  int stop_after = -1;  // stop once this many new points are done (simulates an interrupted run)
};

inline SweepResult run_sweep(const RunConfig& cfg, const SweepControl& control = {}) {
  validate(cfg);
  SweepResult result;
  result.config = cfg;
  const int total = cfg.axis1.count * cfg.axis2.count;
  std::vector<std::optional<SweepRecord>> slots(static_cast<std::size_t>(total));

  std::ofstream log;
  if (!cfg.checkpoint.empty()) {
    const bool resume = std::filesystem::exists(cfg.checkpoint) && std::filesystem::file_size(cfg.checkpoint) > 0;
    if (resume) {
      for (auto& [index, rec] : detail::load_checkpoint(cfg.checkpoint, cfg)) {
        if (index < 0 || index >= total) throw Error(ErrorCode::ResumeMismatch, "checkpoint index out of range");
        slots[static_cast<std::size_t>(index)] = std::move(rec);
        ++result.resumed;
      }
      // drop a torn tail so appended records start on a fresh line
      std::ifstream in(cfg.checkpoint);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (!text.empty() && text.back() != '\n') {
        text.erase(text.find_last_of('\n') + 1);
        std::ofstream(cfg.checkpoint, std::ios::trunc) << text;
      }
      log.open(cfg.checkpoint, std::ios::app);
    } else {
      log.open(cfg.checkpoint, std::ios::trunc);
      log << detail::checkpoint_header(cfg).dump() << "\n" << std::flush;
    }
    if (!log) throw Error(ErrorCode::Io, "cannot write checkpoint " + cfg.checkpoint);
  }

  std::vector<int> pending;
  for (int i = 0; i < total; ++i) {
    if (!slots[static_cast<std::size_t>(i)]) pending.push_back(i);
  }
  if (control.stop_after >= 0 && control.stop_after < int(pending.size())) pending.resize(std::size_t(control.stop_after));

  const int threads = resolve_threads(cfg.threads);
  RunConfig point_cfg = cfg;
  point_cfg.threads = 1;
  const auto chunk = static_cast<std::size_t>(cfg.checkpoint_interval);
  for (std::size_t lo = 0; lo < pending.size(); lo += chunk) {
    const std::size_t hi = std::min(pending.size(), lo + chunk);
    parallel_for(lo, hi, threads, [&](std::size_t k) {
      slots[static_cast<std::size_t>(pending[k])] = run_point(point_cfg, pending[k]);
    });
    // single writer, grid order within the chunk
    if (log.is_open()) {
      for (std::size_t k = lo; k < hi; ++k) log << to_json(*slots[static_cast<std::size_t>(pending[k])]).dump() << "\n";
      log << std::flush;
    }
  }

  result.complete = true;
  for (auto& s : slots) {
    if (!s) {
      result.complete = false;
      continue;
    }
    if (s->label == "ERROR" || !s->error.empty()) ++result.failures;
    result.records.push_back(*s);
  }
  result.provenance = json{{"code_version", kCodeVersion},
                           {"schema_version", kSweepSchemaVersion},
                           {"config_hash", config_hash(cfg)},
                           {"master_seed", cfg.ensemble.master_seed},
                           {"config", to_json(cfg, true)}};
  return result;
}

// Analytic N-S boundary for every value of the non-eta axis (empty unless one axis is eta).
inline std::vector<std::pair<double, std::optional<double>>> analytic_boundary(const RunConfig& cfg) {
  std::vector<std::pair<double, std::optional<double>>> out;
  const Axis* other = cfg.axis1.name == "eta" ? &cfg.axis2 : cfg.axis2.name == "eta" ? &cfg.axis1 : nullptr;
  if (!other) return out;
  for (int i = 0; i < other->count; ++i) {
    ModelParams p = cfg.model;
    axis_field(p, other->name) = other->value(i);
    out.emplace_back(other->value(i), analytic_critical_pump(p));
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& res) {
  os.precision(17);
  os << "# cavitylc sweep csv v" << kSweepSchemaVersion << " config_hash=" << res.provenance.value("config_hash", "")
     << "\n";
  os << "index,i1,i2," << res.config.axis1.name << "," << res.config.axis2.name
     << ",label,low_confidence,ipr,mean_I,dom_freq,atomic_freq,max_growth,stable,steady_theta,steady_I,"
        "steady_residual,eta_c_analytic,error\n";
  const auto num = [&](double v) {
    if (std::isfinite(v)) os << v;
  };
  for (const auto& r : res.records) {
    os << r.index << "," << r.i1 << "," << r.i2 << ",";
    num(r.x1);
    os << ",";
    num(r.x2);
    os << "," << r.label << "," << (r.low_confidence ? 1 : 0) << ",";
    num(r.ipr);
    os << ",";
    num(r.mean_intensity);
    os << ",";
    num(r.dominant_frequency);
    os << ",";
    num(r.atomic_frequency);
    os << ",";
    num(r.max_growth);
    os << ",";
    if (r.stable) os << (*r.stable ? 1 : 0);
    os << ",";
    num(r.steady_theta);
    os << ",";
    num(r.steady_intensity);
    os << ",";
    num(r.steady_residual);
    os << ",";
    if (r.eta_c_analytic) num(*r.eta_c_analytic);
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    os << ",\"" << err << "\"\n";
  }
}

inline json sweep_to_json(const SweepResult& res) {
  json records = json::array();
  for (const auto& r : res.records) records.push_back(to_json(r));
  json boundary = json::array();
  for (const auto& [x, eta_c] : analytic_boundary(res.config)) {
    boundary.push_back({{"x", x}, {"eta_c", eta_c ? json(*eta_c) : json(nullptr)}});
  }
  return json{{"provenance", res.provenance}, {"records", records}, {"analytic_boundary", boundary},
              {"failures", res.failures}, {"complete", res.complete}};
}

}  // namespace cavitylc
