#pragma once

// Command-line front end: cavitylc <evolve|steady|stability|classify|twa|sweep> [options]
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavitylc/classify.hpp"
#include "cavitylc/config.hpp"
#include "cavitylc/stability.hpp"
#include "cavitylc/sweep.hpp"
#include "cavitylc/twa.hpp"

namespace cavitylc {

namespace detail {

struct CliOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string format = "csv";
  int stop_after = -1;
};

inline void write_steady_row(std::ostream& os, const SteadyState& ss) {
  const auto op = ss.order();
  os << op.theta << "," << op.bmean << "," << ss.a.real() << "," << ss.a.imag() << "," << std::norm(ss.a) << ","
     << ss.mu << "," << ss.energy << "," << ss.residual << "," << ss.iterations << "," << (ss.extrapolated ? 1 : 0);
}

inline constexpr const char* kSteadyColumns = "theta,bmean,re_a,im_a,intensity,mu,energy,residual,iterations,extrapolated";

inline json steady_json(const SteadyState& ss) {
  const auto op = ss.order();
  json c = json::array();
  for (const auto& z : ss.condensate.amplitudes()) c.push_back({z.real(), z.imag()});
  return json{{"theta", op.theta},       {"bmean", op.bmean},         {"re_a", ss.a.real()},
              {"im_a", ss.a.imag()},     {"intensity", std::norm(ss.a)}, {"mu", ss.mu},
              {"energy", ss.energy},     {"residual", ss.residual},   {"iterations", ss.iterations},
              {"extrapolated", ss.extrapolated}, {"c", c}};
}

inline json trajectory_json(const Trajectory& tr) {
  json j{{"t", tr.times},         {"intensity", tr.intensity}, {"theta", tr.theta},
         {"bmean", tr.bmean},     {"kinetic", tr.kinetic},     {"max_norm_drift", tr.max_norm_drift},
         {"truncation_alarm", tr.truncation_alarm}};
  std::vector<double> re, im;
  for (const auto& a : tr.cavity) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }
  j["re_a"] = re;
  j["im_a"] = im;
  for (std::size_t k = 0; k < tr.chi_orders.size(); ++k) {
    std::vector<double> cr, ci;
    for (const auto& z : tr.chi[k]) {
      cr.push_back(z.real());
      ci.push_back(z.imag());
    }
    j["re_chi" + std::to_string(tr.chi_orders[k])] = cr;
    j["im_chi" + std::to_string(tr.chi_orders[k])] = ci;
  }
  return j;
}

inline json label_json(const PhaseLabel& l, const Trajectory& tr) {
  return json{{"label", std::string(to_string(l.phase))},
              {"ipr", number_or_null(l.ipr)},
              {"mean_I", l.mean_intensity},
              {"dom_freq", number_or_null(l.dominant_frequency)},
              {"atomic_freq", number_or_null(l.atomic_frequency)},
              {"activity", l.activity},
              {"intensity_rel_std", l.intensity_rel_std},
              {"low_confidence", l.low_confidence},
              {"truncation_alarm", tr.truncation_alarm}};
}

inline int run_command(const std::string& name, const CliOptions& opt, std::ostream& os) {
  RunConfig cfg;
  if (!opt.config_file.empty()) cfg = load_config_file(opt.config_file);
  for (const auto& o : opt.overrides) apply_override(cfg, o);
  if (opt.seed) cfg.ensemble.master_seed = *opt.seed;
  if (opt.threads) cfg.threads = *opt.threads;
  if (opt.format != "csv" && opt.format != "json") throw Error(ErrorCode::InvalidConfig, "--format must be csv or json");
  const bool as_json = opt.format == "json";
  validate(cfg);
  const ModelParams& p = cfg.model;
  os.precision(17);

  if (name == "evolve") {
    const auto tr = evolve_meanfield(meanfield_seed(p, cfg.seed_amplitude), p, cfg.integrator);
    if (as_json) {
      os << json{{"config", to_json(cfg, true)}, {"trajectory", trajectory_json(tr)}}.dump() << "\n";
    } else {
      write_trajectory_csv(os, tr);
    }
    if (tr.truncation_alarm) std::cerr << "warning: boundary occupation " << tr.max_boundary_occupation << " exceeds truncation_alarm\n";
    return 0;
  }
  if (name == "steady" || name == "stability") {
    const auto ss = imaginary_time_solve(p, symmetry_broken_seed(p.n_max, cfg.symmetry_seed), cfg.steady);
    std::optional<StabilityReport> rep;
    if (name == "stability") rep = analyze_stability(ss, p);
    if (as_json) {
      json j{{"config", to_json(cfg, true)}, {"steady", steady_json(ss)}};
      if (rep) {
        json ev = json::array();
        for (const auto& z : rep->eigenvalues) ev.push_back({z.real(), z.imag()});
        j["max_growth"] = rep->max_growth;
        j["stable"] = rep->stable;
        j["eigenvalues"] = ev;
      }
      os << j.dump() << "\n";
    } else {
      os << "delta_c,u0n,kappa,eta,g1d," << kSteadyColumns << (rep ? ",max_growth,stable" : "") << "\n";
      os << p.delta_c << "," << p.u0n << "," << p.kappa << "," << p.eta << "," << p.g1d << ",";
      write_steady_row(os, ss);
      if (rep) os << "," << rep->max_growth << "," << (rep->stable ? 1 : 0);
      os << "\n";
    }
    return 0;
  }
  if (name == "classify") {
    const auto tr = evolve_meanfield(meanfield_seed(p, cfg.seed_amplitude), p, cfg.integrator);
    const auto l = classify_phase(tr, p, cfg.rules);
    const json j = label_json(l, tr);
    if (as_json) {
      os << json{{"config", to_json(cfg, true)}, {"result", j}}.dump() << "\n";
    } else {
      os << "delta_c,u0n,kappa,eta,g1d,label,ipr,mean_I,dom_freq,atomic_freq,activity,intensity_rel_std,low_confidence,"
            "truncation_alarm\n";
      const auto num = [&](double v) -> std::ostream& { return std::isfinite(v) ? os << v : os; };
      os << p.delta_c << "," << p.u0n << "," << p.kappa << "," << p.eta << "," << p.g1d << "," << to_string(l.phase)
         << ",";
      num(l.ipr) << "," << l.mean_intensity << ",";
      num(l.dominant_frequency) << ",";
      num(l.atomic_frequency) << "," << l.activity << "," << l.intensity_rel_std << "," << (l.low_confidence ? 1 : 0)
                                << "," << (tr.truncation_alarm ? 1 : 0) << "\n";
    }
    return 0;
  }
  if (name == "twa") {
    const auto st = run_ensemble(p, ensemble_config(cfg));
    if (as_json) {
      os << json{{"config", to_json(cfg, true)},
                 {"t", st.times},
                 {"mean_I", st.mean_intensity},
                 {"se_I", st.se_intensity},
                 {"mean_theta", st.mean_theta},
                 {"se_theta", st.se_theta},
                 {"spectrum_freqs", st.mean_spectrum.freqs},
                 {"spectrum_power", st.mean_spectrum.power},
                 {"terminal_I", st.terminal_intensity},
                 {"n_used", st.n_used},
                 {"n_excluded", st.n_excluded}}
                .dump()
         << "\n";
    } else {
      os << "t,mean_I,se_I,mean_theta,se_theta\n";
      for (std::size_t k = 0; k < st.times.size(); ++k) {
        os << st.times[k] << "," << st.mean_intensity[k] << "," << st.se_intensity[k] << "," << st.mean_theta[k] << ","
           << st.se_theta[k] << "\n";
      }
    }
    return 0;
  }
  if (name == "sweep") {
    SweepControl control;
    control.stop_after = opt.stop_after;
    const auto res = run_sweep(cfg, control);
    if (as_json) {
      os << sweep_to_json(res).dump(2) << "\n";
    } else {
      write_sweep_csv(os, res);
    }
    if (!res.complete) std::cerr << "sweep stopped early; rerun with the same checkpoint to resume\n";
    if (res.failures > 0) {
      std::cerr << res.failures << " grid point(s) failed (label ERROR)\n";
      return 2;
    }
    return 0;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown command " + name);
}

}  // namespace detail

inline int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Mean-field, stability and truncated-Wigner simulator for a transversely pumped BEC in a cavity"};
  app.require_subcommand(1);
  app.footer(key_help());
  detail::CliOptions opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"evolve", "integrate one mean-field trajectory and write its observables"},
      {"steady", "find the self-consistent steady state"},
      {"stability", "steady state plus linear growth rate"},
      {"classify", "integrate and label the long-time phase (N, S, SL, AL, C)"},
      {"twa", "truncated-Wigner ensemble statistics"},
      {"sweep", "parameter grid with checkpoint/resume"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_file, "JSON config file (flat keys)");
    sub->add_option("--set", opt.overrides, "override a key: --set key=value (repeatable)")->take_all();
    sub->add_option("--out", opt.out, "output path (default stdout)");
    sub->add_option("--seed", opt.seed, "TWA master seed");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    if (name == "sweep") sub->add_option("--stop-after", opt.stop_after, "stop after this many new points");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (opt.out.empty()) return detail::run_command(name, opt, out);
    std::ofstream file(opt.out);
    if (!file) throw Error(ErrorCode::Io, "cannot write " + opt.out);
    return detail::run_command(name, opt, file);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::InvalidConfig:
      case ErrorCode::NonPositiveKappa:
      case ErrorCode::TruncationTooSmall:
      case ErrorCode::GridTooCoarse:
      case ErrorCode::NonFiniteValue:
      case ErrorCode::ResumeMismatch:
      case ErrorCode::Io:
        if (e.code() == ErrorCode::InvalidConfig) err << key_help();
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cavitylc
