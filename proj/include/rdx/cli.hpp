#pragma once

#include <optional>
#include <string>

#include "rdx/io.hpp"
#include "rdx/rdf.hpp"
#include "rdx/sim.hpp"
#include "rdx/special.hpp"

namespace rdx::cli {

using io::json;

struct Options {
  std::string command;
  std::string model_path;
  std::string distortion_path;
  std::optional<double> t;
  std::optional<double> mse_d;
  std::optional<double> ri;
  std::size_t samples = 100000;
  std::size_t chunk = 1000;
  std::uint64_t seed = 1;
  std::string unit = "nats";
  // gen
  int nx = 1, ny = 1, nz = 1;
  std::string kind = "random";
  double noise_y = 0.5, noise_z = 1.0;
  // sweep
  int points = 20;
  double t_max = 1.0;
};

struct Result {
  json record;
  std::string csv;  // sweep only
};

/// 0 ok, 1 parse / usage, 2 infeasible or out of regime, 3 numerical.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::IndexError:
    case ErrorKind::DimensionMismatch:
      return 1;
    case ErrorKind::InfeasibleDistortion:
    case ErrorKind::RegimeViolation:
    case ErrorKind::DegenerateObservation:
    case ErrorKind::StructureViolation:
      return 2;
    case ErrorKind::SingularBlock:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::IllConditioned:
    case ErrorKind::NumericalFailure:
      return 3;
  }
  return 3;
}

namespace detail {

inline json tolerances() {
  return json{{"rtol", tol::rtol}, {"pd_tol", tol::pd}, {"rate_atol_nats", tol::rate_atol}};
}

inline json headline(const Options& o, std::initializer_list<std::pair<const char*, double>> rates) {
  json h{{"unit", o.unit}};
  for (const auto& [name, nats] : rates) h[name] = o.unit == "bits" ? nats / std::numbers::ln2 : nats;
  return h;
}

inline json rates_to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(io::rate_to_json(x));
  return a;
}

struct Loaded {
  JointModel model;
  ConditionalStats stats;
  json inputs;
};

inline Loaded load_model(const Options& o) {
  if (o.model_path.empty()) throw Error(ErrorKind::ParseError, "--model is required");
  JointModel model = io::parse_model(io::read_json_file(o.model_path));
  ConditionalStats stats = derive_stats(model);
  json inputs{{"model", io::model_to_json(model)}};
  return {std::move(model), std::move(stats), std::move(inputs)};
}

/// D from --distortion or from --t on the path Sigma_{x|yz} + t Sigma1.
inline Matrix load_distortion(const Options& o, const ConditionalStats& stats, json& inputs) {
  if (o.distortion_path.empty() == !o.t.has_value())
    throw Error(ErrorKind::ParseError, "exactly one of --distortion or --t is required");
  Matrix d;
  if (o.t) {
    if (!(*o.t > 0.0)) throw Error(ErrorKind::InvalidArgument, "--t must be > 0");
    d = distortion_on_path(stats, *o.t);
    inputs["t"] = *o.t;
  } else {
    d = io::parse_distortion(io::read_json_file(o.distortion_path));
  }
  inputs["distortion"] = io::matrix_to_json(d);
  return d;
}

inline json finish(const Options& o, json args, json inputs, json outputs, json diagnostics) {
  inputs["digest"] = "fnv1a64:" + io::fnv1a_hex(inputs.dump());
  diagnostics["tolerances"] = tolerances();
  return json{{"schema_version", io::schema_version},
              {"command", {{"name", o.command}, {"args", std::move(args)}}},
              {"inputs", std::move(inputs)},
              {"outputs", std::move(outputs)},
              {"diagnostics", std::move(diagnostics)}};
}

inline json base_args(const Options& o) {
  json a{{"unit", o.unit}};
  if (!o.model_path.empty()) a["model"] = o.model_path;
  if (!o.distortion_path.empty()) a["distortion"] = o.distortion_path;
  if (o.t) a["t"] = *o.t;
  return a;
}

inline json regime_flags(const ConditionalStats& stats, const Matrix& d) {
  return json{{"D_below_Sigma_x_given_z", loewner_leq(d, stats.x_given_z)},
              {"D_above_Sigma_x_given_z", loewner_leq(stats.x_given_z, d)},
              {"min_eigenvalue_D_minus_Sigma_x_given_yz", min_eigenvalue(d - stats.x_given_yz.matrix())}};
}

inline json spectra(const JointDiagonalization& jd) {
  return json{{"lambda", io::vector_to_json(jd.lambda)},
              {"lambda_prime", io::vector_to_json(jd.lambda_prime)},
              {"gamma", io::vector_to_json(jd.gamma)}};
}

inline Result cmd_bounds(const Options& o) {
  Loaded l = load_model(o);
  const Matrix d = load_distortion(o, l.stats, l.inputs);
  const RateBounds rb = rate_bounds(l.stats, d);
  const auto [s1, s2] = sigma1_sigma2(l.stats, d);
  json out{{"lower", io::rate_to_json(rb.lower)},
           {"upper", io::rate_to_json(rb.upper)},
           {"gap", io::rate_to_json(rb.upper - rb.lower)},
           {"per_mode_lower", rates_to_json(rb.per_mode_lower)},
           {"per_mode_upper", rates_to_json(rb.per_mode_upper)},
           {"coincide", rb.coincide},
           {"headline", headline(o, {{"lower", rb.lower}, {"upper", rb.upper}})}};
  json diag{{"regime", regime_flags(l.stats, d)}, {"spectra", spectra(whiten_diagonalize(s1, s2))}};
  return {finish(o, base_args(o), l.inputs, out, diag), {}};
}

inline Result cmd_exact(const Options& o) {
  Loaded l = load_model(o);
  const Matrix d = load_distortion(o, l.stats, l.inputs);
  const double r = exact_rdf(l.stats, d);
  json out{{"rate", io::rate_to_json(r)}, {"headline", headline(o, {{"rate", r}})}};
  return {finish(o, base_args(o), l.inputs, out, json{{"regime", regime_flags(l.stats, d)}}), {}};
}

inline Result cmd_channel(const Options& o) {
  Loaded l = load_model(o);
  const Matrix d = load_distortion(o, l.stats, l.inputs);
  const TestChannel ch = build_test_channel(l.stats, d);
  const double rate = channel_rate(ch, l.stats);
  const RateBounds rb = rate_bounds(l.stats, d);
  json mask = json::array();
  for (bool b : ch.active) mask.push_back(b);
  json out{{"encoder", io::matrix_to_json(ch.encoder)},
           {"noise_cov", io::matrix_to_json(ch.noise_cov)},
           {"rate", io::rate_to_json(rate)},
           {"upper", io::rate_to_json(rb.upper)},
           {"achieved_distortion", io::matrix_to_json(achieved_distortion(ch, l.stats))},
           {"headline", headline(o, {{"rate", rate}})}};
  if (auto full = full_noise_cov(ch)) out["noise_cov_full"] = io::matrix_to_json(*full);
  else out["noise_cov_full"] = nullptr;
  json diag{{"active_mask", mask}, {"regime", regime_flags(l.stats, d)}, {"spectra", spectra(ch.basis)},
            {"V", io::matrix_to_json(ch.basis.V)}, {"U", io::matrix_to_json(ch.basis.U)}};
  return {finish(o, base_args(o), l.inputs, out, diag), {}};
}

inline Result cmd_mse(const Options& o) {
  if (!o.mse_d) throw Error(ErrorKind::ParseError, "--mse-d is required");
  Loaded l = load_model(o);
  const WaterfillResult w = mse_rdf(l.stats, *o.mse_d);
  const ConstrainedMinimum m = minimize_exact_over_trace_set(l.stats, *o.mse_d);
  json args = base_args(o);
  args["mse_d"] = *o.mse_d;
  l.inputs["mse_d"] = *o.mse_d;
  json out{{"rate", io::rate_to_json(w.rate)},
           {"level", w.level},
           {"budget", w.budget},
           {"lambdas", w.lambdas},
           {"allocations", w.allocations},
           {"minimizer", {{"rate", io::rate_to_json(m.rate)}, {"allocation", m.allocation},
                          {"D_star", io::matrix_to_json(m.D_star)}}},
           {"headline", headline(o, {{"rate", w.rate}})}};
  json diag{{"waterfill_residual", w.residual}, {"bisection_iterations", w.iterations},
            {"minimizer_sweeps", m.sweeps}, {"rate_difference_nats", m.rate - w.rate}};
  return {finish(o, args, l.inputs, out, diag), {}};
}

inline Result cmd_raterate(const Options& o) {
  if (!o.ri) throw Error(ErrorKind::ParseError, "--ri is required");
  Loaded l = load_model(o);
  const RateRateResult r = rate_rate(l.stats, *o.ri);
  json args = base_args(o);
  args["ri"] = *o.ri;
  l.inputs["ri"] = *o.ri;
  json out{{"rate", io::rate_to_json(r.rate)},
           {"gamma", r.gamma},
           {"mu", r.mu},
           {"R_I", io::rate_to_json(r.r_i)},
           {"R_I_max", io::rate_to_json(max_information_rate(l.stats))},
           {"headline", headline(o, {{"rate", r.rate}})}};
  json diag{{"water_equation_residual", r.residual}, {"bisection_iterations", r.iterations}};
  try {
    const ConstrainedMinimum m = minimize_exact_over_detinfo_set(l.stats, *o.ri);
    out["minimizer"] = {{"rate", io::rate_to_json(m.rate)}, {"D_star", io::matrix_to_json(m.D_star)}};
    diag["rate_difference_nats"] = m.rate - r.rate;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::StructureViolation) throw;
    out["minimizer"] = nullptr;
    diag["minimizer_skipped"] = e.what();
  }
  return {finish(o, args, l.inputs, out, diag), {}};
}

inline Result cmd_simulate(const Options& o) {
  Loaded l = load_model(o);
  const Matrix d = load_distortion(o, l.stats, l.inputs);
  const TestChannel ch = build_test_channel(l.stats, d);
  SimConfig cfg{o.samples, o.seed, o.chunk, 0};
  const SimReport r = run_test_channel(l.model, ch, cfg);
  json args = base_args(o);
  args["samples"] = o.samples;
  args["seed"] = o.seed;
  args["chunk"] = o.chunk;
  json out{{"empirical_error_cov", io::matrix_to_json(r.empirical_error_cov)},
           {"analytic_error_cov", io::matrix_to_json(r.analytic_error_cov)},
           {"max_entry_dev", r.max_entry_dev},
           {"loewner_margin", r.loewner_margin},
           {"n_samples", r.n_samples},
           {"channel_rate", io::rate_to_json(channel_rate(ch, l.stats))},
           {"headline", headline(o, {{"channel_rate", channel_rate(ch, l.stats)}})}};
  json diag{{"clt_entry_tol", r.clt_entry_tol},
            {"orthogonality_max", r.orthogonality_max},
            {"orthogonality_tol", r.orthogonality_tol},
            {"loewner_margin_floor", -5.0 * spectral_norm(d) / std::sqrt(static_cast<double>(r.n_samples))},
            {"regime", regime_flags(l.stats, d)}};
  return {finish(o, args, l.inputs, out, diag), {}};
}

inline std::string format_csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline Result cmd_sweep(const Options& o) {
  Loaded l = load_model(o);
  const auto pts = sweep_curve(l.stats, o.points, o.t_max);
  json args = base_args(o);
  args["points"] = o.points;
  args["t_max"] = o.t_max;
  json arr = json::array();
  std::string csv = "t,lower_nats,upper_nats,exact_nats\n";
  for (const CurvePoint& p : pts) {
    arr.push_back({{"t", p.t},
                   {"lower", io::rate_to_json(p.lower)},
                   {"upper", io::rate_to_json(p.upper)},
                   {"exact", p.exact ? io::rate_to_json(*p.exact) : json(nullptr)}});
    csv += format_csv_number(p.t) + "," + format_csv_number(p.lower) + "," + format_csv_number(p.upper) + "," +
           (p.exact ? format_csv_number(*p.exact) : std::string()) + "\n";
  }
  json out{{"points", arr}};
  return {finish(o, args, l.inputs, out, json::object()), csv};
}

inline Result cmd_gen(const Options& o) {
  JointModel model = [&] {
    if (o.kind == "random") return random_instance(o.nx, o.ny, o.nz, o.seed);
    if (o.kind == "white-noise") return white_noise_instance(o.nx, o.noise_y, o.noise_z, o.seed);
    throw Error(ErrorKind::ParseError, "unknown --kind " + o.kind);
  }();
  json rec = io::model_to_json(model);
  json prov{{"kind", o.kind}, {"seed", o.seed}, {"n_x", o.nx}, {"n_y", o.ny}, {"n_z", o.nz}};
  if (o.kind == "white-noise") {
    prov["noise_y"] = o.noise_y;
    prov["noise_z"] = o.noise_z;
  }
  rec["provenance"] = prov;
  return {rec, {}};
}

}  // namespace detail

inline Result run_command(const Options& o) {
  if (o.unit != "nats" && o.unit != "bits") throw Error(ErrorKind::ParseError, "--unit must be nats or bits");
  if (o.command == "bounds") return detail::cmd_bounds(o);
  if (o.command == "exact") return detail::cmd_exact(o);
  if (o.command == "channel") return detail::cmd_channel(o);
  if (o.command == "mse") return detail::cmd_mse(o);
  if (o.command == "raterate") return detail::cmd_raterate(o);
  if (o.command == "simulate") return detail::cmd_simulate(o);
  if (o.command == "sweep") return detail::cmd_sweep(o);
  if (o.command == "gen") return detail::cmd_gen(o);
  throw Error(ErrorKind::ParseError, "unknown command " + o.command);
}

inline json error_record(const Options& o, const Error& e) {
  json values = json::object();
  for (const auto& [k, v] : e.values()) values[k] = v;
  return json{{"schema_version", io::schema_version},
              {"command", {{"name", o.command}}},
              {"error", {{"kind", std::string(to_string(e.kind())), }, {"message", e.what()}, {"values", values}}},
              {"exit_code", exit_code(e.kind())}};
}

}  // namespace rdx::cli
