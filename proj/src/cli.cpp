#include "trackcert/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "trackcert/certify.hpp"
#include "trackcert/error.hpp"
#include "trackcert/regret.hpp"
#include "trackcert/sdp_oracle.hpp"

namespace trackcert {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::BadConfig, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::BadConfig, "unknown key '" + key + "' in " + where);
  }
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) throw Error(ErrorCode::BadConfig, name + " must be a number");
  return v.get<double>();
}

Series series(const json& v, const std::string& name) {
  if (v.is_array()) {
    if (v.empty()) throw Error(ErrorCode::BadConfig, name + " must not be an empty array");
    std::vector<double> xs;
    for (const auto& e : v) xs.push_back(number(e, name));
    return Series(std::move(xs));
  }
  return Series(number(v, name));
}

std::uint64_t unsigned_int(const json& v, const std::string& name) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw Error(ErrorCode::BadConfig, name + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string text(const json& v, const std::string& name) {
  if (!v.is_string()) throw Error(ErrorCode::BadConfig, name + " must be a string");
  return v.get<std::string>();
}

AnalysisKind parse_analysis(const std::string& s) {
  const auto open = s.find('(');
  if (open == std::string::npos) {
    const AnalysisTag tag = parse_analysis_tag(s);
    if (tag == AnalysisTag::FiniteSum) {
      throw Error(ErrorCode::BadConfig, "FiniteSum needs a class, e.g. FiniteSum(Smooth)");
    }
    return tag;
  }
  if (s.back() != ')' || parse_analysis_tag(s.substr(0, open)) != AnalysisTag::FiniteSum) {
    throw Error(ErrorCode::BadConfig, "malformed analysis '" + s + "'");
  }
  return AnalysisKind::finite_sum(parse_fn_class(s.substr(open + 1, s.size() - open - 2)));
}

OracleMode parse_oracle(const std::string& s) {
  if (s == "off") return OracleMode::Off;
  if (s == "reduced") return OracleMode::Reduced;
  if (s == "generic") return OracleMode::Generic;
  if (s == "both") return OracleMode::Both;
  throw Error(ErrorCode::BadConfig, "oracle must be off, reduced, generic or both");
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::BadConfig:
    case ErrorCode::BadModuli:
    case ErrorCode::Unsupported:
    case ErrorCode::HorizonMismatch:
    case ErrorCode::ProxUnavailable:
      return exit_code::config_error;
    case ErrorCode::ValidateFailed:
    case ErrorCode::StepsizeOutOfRange:
    case ErrorCode::DeltaOutOfRange:
    case ErrorCode::NoContraction:
    case ErrorCode::NonConstantSchedule:
      return exit_code::validate_failed;
    default:
      return exit_code::runtime_error;
  }
}

std::string validation_message(const ValidityReport& rep) {
  const auto f = rep.first_failure();
  return "validation failed at step " + std::to_string(f->t) + ": " + f->violation;
}

SimOptions sim_options(const RunConfig& cfg) {
  SimOptions o;
  o.dim = cfg.dimension;
  o.components = cfg.components;
  o.drift = cfg.drift;
  o.trials = cfg.trials;
  o.seed = cfg.seed;
  return o;
}

// Runs a command body, turning library errors into exit codes.
template <class F>
CommandResult guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    CommandResult r;
    r.exit_code = exit_for(e);
    r.message = e.what();
    return r;
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, std::string("invalid JSON: ") + e.what());
  }
  reject_unknown(doc, {"analysis", "schedule", "seed", "trials", "oracle", "simulation", "outputs", "test_hooks"},
                 "config");
  if (!doc.contains("analysis")) throw Error(ErrorCode::BadConfig, "missing 'analysis'");
  if (!doc.contains("schedule")) throw Error(ErrorCode::BadConfig, "missing 'schedule'");

  RunConfig cfg;
  cfg.analysis = parse_analysis(text(doc["analysis"], "analysis"));

  const json& s = doc["schedule"];
  reject_unknown(s, {"horizon", "U0", "m", "L", "alpha", "sigma", "c", "delta", "G", "Lg"}, "schedule");
  if (!s.contains("horizon")) throw Error(ErrorCode::BadConfig, "missing 'schedule.horizon'");
  ParamTrack& tr = cfg.schedule;
  tr.horizon = unsigned_int(s["horizon"], "horizon");
  if (s.contains("U0")) tr.U0 = number(s["U0"], "U0");
  if (s.contains("m")) tr.m = series(s["m"], "m");
  if (s.contains("L")) tr.L = series(s["L"], "L");
  if (s.contains("alpha")) tr.alpha = series(s["alpha"], "alpha");
  if (s.contains("sigma")) tr.sigma = series(s["sigma"], "sigma");
  if (s.contains("c")) tr.c = series(s["c"], "c");
  if (s.contains("delta")) tr.delta = series(s["delta"], "delta");
  if (s.contains("G")) tr.G = series(s["G"], "G");
  if (s.contains("Lg")) tr.Lg = number(s["Lg"], "Lg");
  tr.check();

  if (doc.contains("seed")) cfg.seed = unsigned_int(doc["seed"], "seed");
  if (doc.contains("trials")) {
    cfg.trials = unsigned_int(doc["trials"], "trials");
    if (cfg.trials == 0) throw Error(ErrorCode::BadConfig, "trials must be positive");
  }
  if (doc.contains("oracle")) cfg.oracle = parse_oracle(text(doc["oracle"], "oracle"));
  if (doc.contains("simulation")) {
    const json& sim = doc["simulation"];
    reject_unknown(sim, {"dimension", "components", "drift"}, "simulation");
    if (sim.contains("dimension")) cfg.dimension = static_cast<int>(unsigned_int(sim["dimension"], "dimension"));
    if (sim.contains("components")) cfg.components = static_cast<int>(unsigned_int(sim["components"], "components"));
    if (sim.contains("drift")) cfg.drift = parse_drift_policy(text(sim["drift"], "drift"));
    if (cfg.dimension < 1 || cfg.components < 1) {
      throw Error(ErrorCode::BadConfig, "dimension and components must be positive");
    }
  }
  if (doc.contains("outputs")) {
    const json& o = doc["outputs"];
    reject_unknown(o, {"out", "svg"}, "outputs");
    if (o.contains("out")) cfg.out = text(o["out"], "outputs.out");
    if (o.contains("svg")) cfg.svg = text(o["svg"], "outputs.svg");
  }
  if (doc.contains("test_hooks")) {
    const json& h = doc["test_hooks"];
    reject_unknown(h, {"corrupt_closed_form", "force_soundness_breach"}, "test_hooks");
    auto flag = [&](const char* k) {
      if (!h.contains(k)) return false;
      if (!h[k].is_boolean()) throw Error(ErrorCode::BadConfig, std::string(k) + " must be a boolean");
      return h[k].get<bool>();
    };
    cfg.hooks.corrupt_closed_form = flag("corrupt_closed_form");
    cfg.hooks.force_soundness_breach = flag("force_soundness_breach");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

CommandResult cmd_certify(const RunConfig& cfg) {
  return guarded([&] {
    const ParamTrack& tr = cfg.schedule;
    const ValidityReport rep = validate(cfg.analysis, tr);
    const BoundTrace trace = run_lenient(cfg.analysis, tr);

    CommandResult r;
    std::string& out = r.csv;
    out = "t,U_hat,sqrt_U_hat,factor,valid\n";
    bool ok_so_far = true;
    for (std::size_t t = 0; t < trace.U.size(); ++t) {
      if (t < trace.valid.size()) ok_so_far = ok_so_far && trace.valid[t];
      const double U = trace.U[t];
      const std::string factor = t < trace.factor.size() ? format_double(trace.factor[t]) : "";
      out += std::to_string(t) + "," + format_double(U) + "," + format_double(std::sqrt(U)) + "," + factor + "," +
             (ok_so_far ? "true" : "false") + "\n";
    }
    if (!rep.passed()) {
      r.exit_code = exit_code::validate_failed;
      r.message = validation_message(rep);
    }
    return r;
  });
}

CommandResult cmd_oracle(const RunConfig& cfg) {
  return guarded([&] {
    CommandResult r;
    if (cfg.oracle == OracleMode::Off) {
      r.exit_code = exit_code::config_error;
      r.message = "oracle is off";
      return r;
    }
    const ParamTrack& tr = cfg.schedule;
    const ValidityReport rep = validate(cfg.analysis, tr);
    r.csv = "t,U_closed,U_reduced,U_generic,rel_gap,feas_residual\n";
    if (!rep.passed()) {
      r.exit_code = exit_code::validate_failed;
      r.message = validation_message(rep);
      return r;
    }
    const BoundTrace trace = run(cfg.analysis, tr);
    const bool has_reduced = cfg.analysis.tag() != AnalysisTag::IpOgd;
    const bool want_reduced = has_reduced && cfg.oracle != OracleMode::Generic;
    const bool want_generic = cfg.oracle != OracleMode::Reduced || !has_reduced;
    GenericOptions gopt;
    gopt.seed = cfg.seed;

    double worst = 0.0;
    for (std::size_t t = 0; t < tr.horizon; ++t) {
      const StepParams p = tr.at(t);
      const double U = trace.U[t];
      double closed = trace.U[t + 1];
      if (cfg.hooks.corrupt_closed_form) closed *= 1.01;
      // Relative gap; an exactly zero bound falls back to the absolute difference.
      const double denom = closed > 0.0 ? closed : 1.0;
      double gap = 0.0;
      double resid = -std::numeric_limits<double>::infinity();
      std::string red;
      std::string gen;
      if (want_reduced) {
        const OracleResult o = solve_step_reduced(cfg.analysis, U, p);
        red = format_double(o.U_next);
        gap = std::max(gap, std::abs(o.U_next - closed) / denom);
        resid = std::max(resid, o.feasibility_residual);
      }
      if (want_generic) {
        const OracleResult o = solve_step_generic(cfg.analysis, U, p, gopt);
        gen = format_double(o.U_next);
        gap = std::max(gap, std::abs(o.U_next - closed) / denom);
        resid = std::max(resid, o.feasibility_residual);
      }
      worst = std::max(worst, gap);
      r.csv += std::to_string(t + 1) + "," + format_double(closed) + "," + red + "," + gen + "," +
               format_double(gap) + "," + format_double(resid) + "\n";
    }
    if (!(worst <= 1e-4)) {
      r.exit_code = exit_code::oracle_gap;
      r.message = "closed form and oracle disagree by " + format_double(worst) + " (relative)";
    }
    return r;
  });
}

CommandResult cmd_simulate(const RunConfig& cfg) {
  return guarded([&] {
    CommandResult r;
    const ParamTrack& tr = cfg.schedule;
    const ValidityReport rep = validate(cfg.analysis, tr);
    if (!rep.passed()) {
      r.csv = "t,U_hat,err_mean,err_max,trials\n";
      r.exit_code = exit_code::validate_failed;
      r.message = validation_message(rep);
      return r;
    }
    BoundTrace trace = run(cfg.analysis, tr);
    const SimSummary sim = simulate(cfg.analysis, tr, sim_options(cfg));

    r.csv = "t,U_hat,err_mean,err_max,trials\n";
    for (std::size_t t = 0; t < trace.U.size(); ++t) {
      r.csv += std::to_string(t) + "," + format_double(trace.U[t]) + "," + format_double(sim.err_mean[t]) + "," +
               format_double(sim.err_max[t]) + "," + std::to_string(sim.trials) + "\n";
    }
    if (cfg.svg) {
      std::vector<double> root(trace.U.size());
      for (std::size_t t = 0; t < root.size(); ++t) root[t] = std::sqrt(trace.U[t]);
      r.svg = render_svg(root, sim.err_mean);
    }

    if (cfg.hooks.force_soundness_breach) {
      for (double& U : trace.U) U *= 0.5;
    }
    SoundnessReport snd;
    if (cfg.analysis.stochastic()) {
      snd = check_soundness(sim.e_mean, trace, SoundnessMode::MeanSquare, sim.trials);
    } else {
      std::vector<double> worst(sim.err_max.size());
      for (std::size_t t = 0; t < worst.size(); ++t) worst[t] = sim.err_max[t] * sim.err_max[t];
      snd = check_soundness(worst, trace, SoundnessMode::Deterministic);
    }
    if (!snd.ok) {
      r.exit_code = exit_code::unsound;
      r.message = "measured error exceeds the certified bound at t=" + std::to_string(snd.first_violation);
    }
    return r;
  });
}

CommandResult cmd_regret(const RunConfig& cfg) {
  return guarded([&] {
    CommandResult r;
    RegretReport rep = regret_bound_for(cfg.analysis, cfg.schedule);
    const SimSummary sim = simulate(cfg.analysis, cfg.schedule, sim_options(cfg));
    rep.empirical = empirical_regret(sim);
    r.csv = "T,gamma,bound,empirical,margin\n";
    r.csv += std::to_string(rep.horizon) + "," + format_double(rep.gamma) + "," + format_double(rep.bound) + "," +
             format_double(*rep.empirical) + "," + format_double(rep.bound - *rep.empirical) + "\n";
    if (!dominated(rep, sim.trials)) {
      r.exit_code = exit_code::regret_violation;
      r.message = "empirical regret exceeds the certified bound";
    }
    return r;
  });
}

std::string render_svg(const std::vector<double>& bound, const std::vector<double>& measured) {
  constexpr double W = 800.0;
  constexpr double H = 500.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top = 20.0;
  constexpr double bottom = 40.0;

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto* s : {&bound, &measured}) {
    for (double v : *s) {
      if (v > 0.0 && std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!(hi > 0.0)) {
    lo = 0.1;
    hi = 1.0;
  }
  double llo = std::floor(std::log10(lo));
  double lhi = std::ceil(std::log10(hi));
  if (lhi <= llo) lhi = llo + 1.0;
  const std::size_t n = std::max(bound.size(), measured.size());
  const double span = n > 1 ? static_cast<double>(n - 1) : 1.0;

  auto px = [&](std::size_t t) { return left + (W - left - right) * static_cast<double>(t) / span; };
  auto py = [&](double v) { return top + (H - top - bottom) * (lhi - std::log10(v)) / (lhi - llo); };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto polyline = [&](const std::vector<double>& s, const char* color, const char* dash) {
    std::string pts;
    for (std::size_t t = 0; t < s.size(); ++t) {
      if (!(s[t] > 0.0) || !std::isfinite(s[t])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fmt(px(t)) + "," + fmt(py(s[t]));
    }
    return std::string("  <polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"2\"" + dash +
           " points=\"" + pts + "\"/>\n";
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
  svg += "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  svg += "  <line x1=\"" + fmt(left) + "\" y1=\"" + fmt(H - bottom) + "\" x2=\"" + fmt(W - right) + "\" y2=\"" +
         fmt(H - bottom) + "\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) + "\" y2=\"" + fmt(H - bottom) +
         "\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(llo); d <= static_cast<int>(lhi); ++d) {
    const double y = py(std::pow(10.0, d));
    svg += "  <line x1=\"" + fmt(left - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(left) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"black\"/>\n";
    svg += "  <text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">1e" + std::to_string(d) + "</text>\n";
  }
  svg += "  <text x=\"" + fmt(W / 2) + "\" y=\"" + fmt(H - 10) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">t (0.." + std::to_string(n ? n - 1 : 0) +
         ")</text>\n";
  svg += polyline(bound, "#1f77b4", "");
  svg += polyline(measured, "#d62728", " stroke-dasharray=\"6,4\"");
  svg += "  <text x=\"" + fmt(W - right - 150) + "\" y=\"" + fmt(top + 14) +
         "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">sqrt(U_hat)</text>\n";
  svg += "  <text x=\"" + fmt(W - right - 150) + "\" y=\"" + fmt(top + 30) +
         "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">measured error</text>\n";
  svg += "</svg>\n";
  return svg;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified tracking-error and regret bounds for inexact online optimization"};
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::string> svg;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
  } flags;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"certify", "Write the closed-form bound trace"},
      {"oracle", "Compare the closed form with the numerical SDP oracles"},
      {"simulate", "Simulate the algorithm and check the bound"},
      {"regret", "Compare the dynamic-regret bound with simulation"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON config file")->required();
    sub->add_option("--out", flags.out, "CSV output path (default: stdout)");
    sub->add_option("--svg", flags.svg, "SVG plot path (simulate)");
    sub->add_option("--seed", flags.seed, "64-bit run seed");
    sub->add_option("--trials", flags.trials, "number of trials")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return exit_code::config_error;
  }

  RunConfig cfg;
  try {
    cfg = load_config(flags.config);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code::config_error;
  }
  if (flags.out) cfg.out = flags.out;
  if (flags.svg) cfg.svg = flags.svg;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.trials) cfg.trials = *flags.trials;

  const std::string cmd = app.get_subcommands().front()->get_name();
  CommandResult res;
  if (cmd == "certify") res = cmd_certify(cfg);
  if (cmd == "oracle") res = cmd_oracle(cfg);
  if (cmd == "simulate") res = cmd_simulate(cfg);
  if (cmd == "regret") res = cmd_regret(cfg);

  auto write = [&](const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    f << body;
    if (!f) {
      err << "cannot write '" << path << "'\n";
      return false;
    }
    return true;
  };
  if (cfg.out) {
    if (!write(*cfg.out, res.csv)) return exit_code::runtime_error;
  } else {
    out << res.csv;
  }
  if (cfg.svg && !res.svg.empty() && !write(*cfg.svg, res.svg)) return exit_code::runtime_error;
  if (!res.message.empty()) err << res.message << "\n";
  return res.exit_code;
}

}  // namespace trackcert
