#pragma once

// Flat key/value run configuration. Every key is documented in the schema
// table below; files are JSON objects, CLI --set overrides win over files.

#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "cavitylc/classify.hpp"
#include "cavitylc/dynamics.hpp"
#include "cavitylc/steady_state.hpp"
#include "cavitylc/twa.hpp"

namespace cavitylc {

using json = nlohmann::json;

struct Axis {
  std::string name;  // eta, delta_c, u0n or g1d
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  double value(int i) const { return count == 1 ? min : min + (max - min) * double(i) / double(count - 1); }
};

struct RunConfig {
  ModelParams model;
  IntegratorConfig integrator;
  ImaginaryTimeConfig steady;
  ClassifyRules rules;
  EnsembleConfig ensemble;
  double seed_amplitude = 1e-3;  // initial a for mean-field runs; sign picks the Z2 branch
  double symmetry_seed = 1e-3;   // c_{+-1} seed of the steady-state solver
  Axis axis1{"delta_c", 6.0, 14.0, 12};
  Axis axis2{"eta", 2.0, 18.0, 12};
  std::vector<std::string> tasks{"classify", "stability"};
  std::string checkpoint;        // empty: no checkpoint file
  int checkpoint_interval = 8;   // points per checkpoint flush
  int threads = 0;               // 0: CAVITYLC_THREADS or hardware concurrency
};

namespace detail {

struct KeySpec {
  std::string name;
  std::string help;
  bool affects_results;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <class T>
constexpr const char* type_name() {
  if constexpr (std::is_same_v<T, double>) return "a number";
  else if constexpr (std::is_same_v<T, bool>) return "true or false";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else return "a string";
}

template <class T>
T as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::invalid_argument("not a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("not a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::invalid_argument("not an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("not a string");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "key '" + key + "': expected " + type_name<T>() + ", got " + v.dump());
  }
}

#define CAVITYLC_KEY(key, field, type, results, help)                                          \
  KeySpec {                                                                                    \
    key, help, results, [](RunConfig& c, const json& v) { c.field = as<type>(v, key); },       \
        [](const RunConfig& c) { return json(c.field); }                                       \
  }

inline const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t{
        CAVITYLC_KEY("delta_c", model.delta_c, double, true, "cavity detuning Delta_c [omega_R]"),
        CAVITYLC_KEY("u0n", model.u0n, double, true, "collective light shift U0*N [omega_R]"),
        CAVITYLC_KEY("kappa", model.kappa, double, true, "cavity decay rate [omega_R], > 0"),
        CAVITYLC_KEY("eta", model.eta, double, true, "effective pump rate [omega_R]"),
        CAVITYLC_KEY("g1d", model.g1d, double, true, "contact interaction g_aa N / L [omega_R]"),
        CAVITYLC_KEY("atom_number", model.atom_number, double, true, "atom number N (TWA noise scale)"),
        CAVITYLC_KEY("n_max", model.n_max, int, true, "momentum cutoff |n| <= n_max"),
        CAVITYLC_KEY("grid_points", model.grid_points, int, true, "real-space grid size, >= 4*n_max"),
        CAVITYLC_KEY("truncation_alarm", model.truncation_alarm, double, true, "boundary occupation alarm level"),
        CAVITYLC_KEY("rtol", integrator.rtol, double, true, "adaptive integrator relative tolerance"),
        CAVITYLC_KEY("atol", integrator.atol, double, true, "adaptive integrator absolute tolerance"),
        CAVITYLC_KEY("dt", integrator.dt, double, true, "fixed step (fixed-step runs and TWA)"),
        CAVITYLC_KEY("output_stride", integrator.output_stride, double, true, "observable sampling interval"),
        CAVITYLC_KEY("t_end", integrator.t_end, double, true, "final time [1/omega_R]"),
        CAVITYLC_KEY("ramp_time", integrator.ramp_time, double, true, "linear pump ramp duration, 0 = off"),
        CAVITYLC_KEY("seed_amplitude", seed_amplitude, double, true, "initial cavity amplitude a(0)"),
        CAVITYLC_KEY("symmetry_seed", symmetry_seed, double, true, "steady-state seed amplitude in c_{+-1}"),
        CAVITYLC_KEY("it_dtau", steady.dtau, double, true, "imaginary-time step"),
        CAVITYLC_KEY("it_tol", steady.tol, double, true, "imaginary-time convergence tolerance"),
        CAVITYLC_KEY("it_max_iterations", steady.max_iterations, int, true, "imaginary-time iteration cap"),
        CAVITYLC_KEY("window_t0", rules.t0, double, true, "analysis window start"),
        CAVITYLC_KEY("window_t1", rules.t1, double, true, "analysis window end"),
        CAVITYLC_KEY("intensity_floor", rules.intensity_floor, double, true, "mean-I floor for N/AL"),
        CAVITYLC_KEY("constancy_rel_std", rules.constancy_rel_std, double, true, "relative std of I below which S"),
        CAVITYLC_KEY("activity_threshold", rules.activity_threshold, double, true, "atomic activity for AL"),
        CAVITYLC_KEY("ipr_split", rules.ipr_split, double, true, "IPR separating SL (>=) from C"),
        CAVITYLC_KEY("n_traj", ensemble.n_traj, int, true, "TWA trajectory count"),
        CAVITYLC_KEY("master_seed", ensemble.master_seed, std::uint64_t, true, "TWA master seed"),
        CAVITYLC_KEY("initial_noise", ensemble.include_initial_noise, bool, true, "TWA Wigner initial noise"),
        CAVITYLC_KEY("dynamical_noise", ensemble.include_dynamical_noise, bool, true, "TWA cavity noise"),
        CAVITYLC_KEY("axis1", axis1.name, std::string, true, "sweep row parameter"),
        CAVITYLC_KEY("axis1_min", axis1.min, double, true, "sweep row minimum"),
        CAVITYLC_KEY("axis1_max", axis1.max, double, true, "sweep row maximum"),
        CAVITYLC_KEY("axis1_count", axis1.count, int, true, "sweep row count"),
        CAVITYLC_KEY("axis2", axis2.name, std::string, true, "sweep column parameter"),
        CAVITYLC_KEY("axis2_min", axis2.min, double, true, "sweep column minimum"),
        CAVITYLC_KEY("axis2_max", axis2.max, double, true, "sweep column maximum"),
        CAVITYLC_KEY("axis2_count", axis2.count, int, true, "sweep column count"),
        CAVITYLC_KEY("checkpoint", checkpoint, std::string, false, "sweep checkpoint file, empty = none"),
        CAVITYLC_KEY("checkpoint_interval", checkpoint_interval, int, false, "sweep points per checkpoint flush"),
        CAVITYLC_KEY("threads", threads, int, false, "worker threads, 0 = default"),
    };
    t.push_back({"method", "integrator: adaptive | fixed", true,
                 [](RunConfig& c, const json& v) {
                   const auto s = as<std::string>(v, "method");
                   if (s == "adaptive") c.integrator.method = Method::Adaptive;
                   else if (s == "fixed") c.integrator.method = Method::FixedStep;
                   else throw Error(ErrorCode::InvalidConfig, "key 'method': expected adaptive or fixed, got " + s);
                 },
                 [](const RunConfig& c) { return json(c.integrator.method == Method::Adaptive ? "adaptive" : "fixed"); }});
    t.push_back({"chi_orders", "recorded chi_n orders, e.g. [1,2]", true,
                 [](RunConfig& c, const json& v) {
                   if (!v.is_array()) throw Error(ErrorCode::InvalidConfig, "key 'chi_orders': expected an array");
                   c.integrator.chi_orders.clear();
                   for (const auto& x : v) c.integrator.chi_orders.push_back(as<int>(x, "chi_orders"));
                 },
                 [](const RunConfig& c) { return json(c.integrator.chi_orders); }});
    t.push_back({"tasks", "sweep tasks: any of classify, stability, steady", true,
                 [](RunConfig& c, const json& v) {
                   if (!v.is_array()) throw Error(ErrorCode::InvalidConfig, "key 'tasks': expected an array");
                   c.tasks.clear();
                   for (const auto& x : v) c.tasks.push_back(as<std::string>(x, "tasks"));
                 },
                 [](const RunConfig& c) { return json(c.tasks); }});
    return t;
  }();
  return table;
}

#undef CAVITYLC_KEY

}  // namespace detail

inline std::string key_help() {
  std::ostringstream os;
  os << "configuration keys:\n";
  for (const auto& k : detail::key_table()) os << "  " << k.name << "  " << k.help << "\n";
  return os.str();
}

inline void apply_setting(RunConfig& cfg, const std::string& key, const json& value) {
  for (const auto& k : detail::key_table()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  std::string known;
  for (const auto& k : detail::key_table()) known += (known.empty() ? "" : ", ") + k.name;
  throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'; known keys: " + known);
}

inline void apply_json(RunConfig& cfg, const json& obj) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidConfig, "configuration must be a JSON object");
  for (const auto& [key, value] : obj.items()) apply_setting(cfg, key, value);
}

// "key=value"; the value is parsed as JSON, falling back to a bare string.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::InvalidConfig, "override must look like key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  apply_setting(cfg, key, value);
}

inline RunConfig load_config_file(const std::string& path, RunConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path);
  const json obj = json::parse(in, nullptr, false);
  if (obj.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config file " + path + " is not valid JSON");
  apply_json(cfg, obj);
  return cfg;
}

// Every key, in schema order. With results_only, keys that cannot change
// computed values (threads, checkpoint plumbing) are left out.
inline json to_json(const RunConfig& cfg, bool results_only = false) {
  json out = json::object();
  for (const auto& k : detail::key_table()) {
    if (!results_only || k.affects_results) out[k.name] = k.get(cfg);
  }
  return out;
}

// FNV-1a over the canonical dump of the result-affecting keys.
inline std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(cfg, true).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace cavitylc
