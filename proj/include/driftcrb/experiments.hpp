#pragma once

// Experiment plumbing behind the command-line tool: strictly validated JSON
// configs, deterministic study runners, and plot-ready JSON/CSV result
// bodies. Reruns with the same (config, seed) produce byte-identical output;
// every result carries the config hash and the master seed actually used.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "driftcrb/closed_form.hpp"
#include "driftcrb/errors.hpp"
#include "driftcrb/fisher.hpp"
#include "driftcrb/model.hpp"
#include "driftcrb/simulate.hpp"

namespace driftcrb {

using Json = nlohmann::json;

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Quantile with linear interpolation between order statistics.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw DomainError("percentile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace detail

/// Round-trip decimal form (17 significant digits).
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 16-hex-digit FNV-1a hash of the canonical (sorted-key, compact) dump.
inline std::string config_hash_hex(const Json& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a64(cfg.dump())));
  return buf;
}

// Strict config parsing: unknown keys are rejected so typos fail loudly,
// and structural checks happen before any computation starts.
namespace configio {

inline Json parse_text(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}

inline Json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

inline void reject_unknown(const Json& j, std::string_view where,
                           std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

inline const Json& need(const Json& j, const char* key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(where) + " requires key '" + key + "'");
  return *it;
}

inline double as_number(const Json& v, std::string_view what) {
  if (!v.is_number()) throw ConfigError(std::string(what) + " must be a number");
  return v.get<double>();
}

inline std::int64_t as_integer(const Json& v, std::string_view what) {
  if (!v.is_number_integer()) throw ConfigError(std::string(what) + " must be an integer");
  return v.get<std::int64_t>();
}

inline int as_int(const Json& v, std::string_view what, int lo, int hi) {
  const std::int64_t t = as_integer(v, what);
  if (t < lo || t > hi) {
    throw ConfigError(std::string(what) + " must lie in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  return static_cast<int>(t);
}

inline std::uint64_t as_seed(const Json& v, std::string_view what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(std::string(what) + " must be a nonnegative integer");
}

inline std::uint64_t resolve_seed(const Json& cfg, std::optional<std::uint64_t> override_seed) {
  if (override_seed) return *override_seed;
  if (cfg.contains("seed")) return as_seed(cfg.at("seed"), "seed");
  return 1;
}

/// tau is a positive integer number of periods, or the string "inf".
inline Tau parse_tau(const Json& v, std::string_view where) {
  if (v.is_string() && v.get<std::string>() == "inf") return Tau::infinite();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 1) return Tau{v.get<std::int64_t>()};
  throw ConfigError(std::string(where) + ": tau must be a positive integer or \"inf\"");
}

inline Tau default_tau(const Json& cfg) {
  return cfg.contains("tau") ? parse_tau(cfg.at("tau"), "config") : Tau{1};
}

inline SignalSpec parse_signal(const Json& cfg) {
  const Json& j = need(cfg, "signal", "config");
  if (!j.is_object()) throw ConfigError("signal must be an object");
  reject_unknown(j, "signal", {"P", "beta"});
  SignalSpec s;
  s.order = as_int(need(j, "P", "signal"), "signal.P", 0, 64);
  if (j.contains("beta")) {
    const Json& b = j.at("beta");
    if (!b.is_array() || static_cast<int>(b.size()) != s.order + 1) {
      throw ConfigError("signal.beta must be an array of P + 1 numbers");
    }
    s.beta.resize(s.order + 1);
    for (int i = 0; i <= s.order; ++i) s.beta[i] = as_number(b.at(i), "signal.beta entry");
  }
  return validate_signal(s);
}

inline DriftParams parse_sensor(const Json& j, Tau fallback_tau, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  reject_unknown(j, where, {"sigma2", "gamma", "rho", "tau"});
  DriftParams p;
  p.sigma2 = as_number(need(j, "sigma2", where), "sigma2");
  p.gamma = as_number(need(j, "gamma", where), "gamma");
  p.rho = as_number(need(j, "rho", where), "rho");
  p.tau = j.contains("tau") ? parse_tau(j.at("tau"), where) : fallback_tau;
  return validate_drift_params(p);
}

inline std::vector<DriftParams> parse_sensors(const Json& cfg, Tau fallback_tau) {
  const Json& arr = need(cfg, "sensors", "config");
  if (!arr.is_array() || arr.empty()) throw ConfigError("sensors must be a nonempty array");
  std::vector<DriftParams> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_sensor(arr.at(i), fallback_tau, "sensors[" + std::to_string(i) + "]"));
  }
  return out;
}

inline std::pair<double, double> parse_range(const Json& v, std::string_view what) {
  if (!v.is_array() || v.size() != 2) {
    throw ConfigError(std::string(what) + " must be a [lo, hi] array");
  }
  return {as_number(v.at(0), what), as_number(v.at(1), what)};
}

inline ParameterBox parse_box(const Json& cfg, Tau tau) {
  const Json& j = need(cfg, "box", "config");
  if (!j.is_object()) throw ConfigError("box must be an object");
  reject_unknown(j, "box", {"rho", "sigma2", "gamma"});
  ParameterBox b;
  std::tie(b.rho_lo, b.rho_hi) = parse_range(need(j, "rho", "box"), "box.rho");
  std::tie(b.sigma2_lo, b.sigma2_hi) = parse_range(need(j, "sigma2", "box"), "box.sigma2");
  std::tie(b.gamma_lo, b.gamma_hi) = parse_range(need(j, "gamma", "box"), "box.gamma");
  b.tau = tau;
  return validate_box(b);
}

/// Explicit sensor list, or a box plus M evenly spaced sensors across it.
inline NetworkSpec parse_network(const Json& cfg, Tau fallback_tau) {
  if (cfg.contains("sensors") && cfg.contains("box")) {
    throw ConfigError("give either sensors or box, not both");
  }
  NetworkSpec net;
  if (cfg.contains("sensors")) {
    net.sensors = parse_sensors(cfg, fallback_tau);
  } else if (cfg.contains("box")) {
    const int M = as_int(need(cfg, "M", "config"), "M", 1, 100000);
    net = spaced_network(parse_box(cfg, fallback_tau), M);
  } else {
    throw ConfigError("config requires sensors or box");
  }
  return net;
}

inline std::pair<QuantizerSpec, std::vector<int>> parse_quantizer(const Json& cfg) {
  const Json& j = need(cfg, "quantizer", "config");
  if (!j.is_object()) throw ConfigError("quantizer must be an object");
  reject_unknown(j, "quantizer", {"U0", "U1", "bits"});
  QuantizerSpec q;
  q.lo = as_number(need(j, "U0", "quantizer"), "quantizer.U0");
  q.hi = as_number(need(j, "U1", "quantizer"), "quantizer.U1");
  const Json& bits = need(j, "bits", "quantizer");
  std::vector<int> bit_list;
  if (bits.is_array()) {
    for (const auto& b : bits) bit_list.push_back(as_int(b, "quantizer.bits entry", 1, 30));
  } else {
    bit_list.push_back(as_int(bits, "quantizer.bits", 1, 30));
  }
  if (bit_list.empty()) throw ConfigError("quantizer.bits must not be empty");
  q.bits = bit_list.front();
  validate_quantizer(q);
  return {q, bit_list};
}

inline std::vector<int> parse_int_list(const Json& cfg, const char* key, int lo, int hi) {
  const Json& arr = need(cfg, key, "config");
  if (!arr.is_array() || arr.empty()) {
    throw ConfigError(std::string(key) + " must be a nonempty array");
  }
  std::vector<int> out;
  for (const auto& v : arr) out.push_back(as_int(v, key, lo, hi));
  return out;
}

inline std::int64_t parse_trials(const Json& cfg) {
  const std::int64_t t = as_integer(need(cfg, "trials", "config"), "trials");
  if (t < 100) throw ConfigError("trials must be >= 100");
  return t;
}

}  // namespace configio

/// Finished result body plus any validity warnings the caller may escalate.
struct RunOutput {
  std::string content;
  std::vector<std::string> warnings;
};

namespace detail {

inline void csv_header(std::string& out, const std::string& hash, std::uint64_t seed,
                       std::string_view columns) {
  out += "# config_hash=" + hash + "\n";
  out += "# seed=" + std::to_string(seed) + "\n";
  out += columns;
  out += '\n';
}

inline void csv_row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
}

inline std::string tau_label(Tau tau) {
  return tau.is_infinite() ? std::string("inf") : std::to_string(tau.periods);
}

}  // namespace detail

/// Exact bound plus both closed-form orders at one operating point.
/// Closed-form columns go null (with a warning) where no closed form
/// applies: rho = 0 with drift, or sensors straddling the rho = 1 boundary.
inline RunOutput run_crb(const Json& cfg, std::optional<std::uint64_t> seed_override = {}) {
  configio::reject_unknown(cfg, "crb config", {"signal", "sensors", "tau", "N", "mode", "seed"});
  const SignalSpec signal = configio::parse_signal(cfg);
  const Tau tau = configio::default_tau(cfg);
  NetworkSpec net;
  net.sensors = configio::parse_sensors(cfg, tau);
  const int N = configio::as_int(configio::need(cfg, "N", "config"), "N", 1, 1 << 26);
  std::string mode = "all";
  if (cfg.contains("mode")) {
    if (!cfg.at("mode").is_string()) throw ConfigError("mode must be a string");
    mode = cfg.at("mode").get<std::string>();
    if (mode != "all" && mode != "exact") throw ConfigError("mode must be \"all\" or \"exact\"");
  }

  RunOutput ro;
  const int P = signal.order;
  const Matrix X = build_design_matrix(N, P);
  const CrbExact exact = exact_crb(network_fim(X, net));

  Json out;
  out["config_hash"] = config_hash_hex(cfg);
  out["seed"] = configio::resolve_seed(cfg, seed_override);
  out["N"] = N;
  out["P"] = P;
  out["exact"] = detail::vector_json(exact.diag);
  out["fim_condition"] = exact.condition;
  out["regime"] = nullptr;
  out["closed_second"] = nullptr;
  out["closed_first"] = nullptr;
  out["epsilon"] = nullptr;
  out["mre_second"] = nullptr;
  out["mre_first"] = nullptr;
  out["negative_variance"] = false;

  if (mode == "all") {
    try {
      const XiConstants xi = effective_xi(net.sensors);
      const CrbReport second = closed_form_crb(xi, N, P, CrbOrder::second);
      const CrbReport first = closed_form_crb(xi, N, P, CrbOrder::first);
      out["regime"] = (xi.regime == Regime::stationary) ? "stationary" : "random_walk";
      out["closed_second"] = detail::vector_json(second.diag);
      out["closed_first"] = detail::vector_json(first.diag);
      out["epsilon"] = detail::vector_json(second.epsilon);
      out["negative_variance"] = second.negative_variance || first.negative_variance;
      if (!second.negative_variance) {
        out["mre_second"] = max_relative_error(exact.diag, second.diag);
      }
      if (!first.negative_variance) {
        out["mre_first"] = max_relative_error(exact.diag, first.diag);
      }
      if (second.negative_variance || first.negative_variance) {
        ro.warnings.push_back("closed-form bound is nonpositive; outside the validity region");
      }
      const double eps_max = second.epsilon.maxCoeff();
      if (eps_max > 1.0) {
        ro.warnings.push_back("dropped correction exceeds the leading term (max epsilon " +
                              format_g17(eps_max) + ")");
      }
    } catch (const MixedRegimeError& e) {
      ro.warnings.push_back(std::string("closed-form bounds unavailable: ") + e.what());
    } catch (const DomainError& e) {
      ro.warnings.push_back(std::string("closed-form bounds unavailable: ") + e.what());
    }
  }
  out["warnings"] = ro.warnings;
  ro.content = out.dump(2) + "\n";
  return ro;
}

/// Smallest adequate sample size over a (rho, gamma) grid, for one or both
/// approximation routes. Cells where the search cannot run are recorded as
/// nan with a reason rather than aborting the sweep.
inline RunOutput run_mre_map(const Json& cfg, std::optional<std::uint64_t> seed_override = {}) {
  configio::reject_unknown(cfg, "mre-map config",
                           {"signal", "grid", "tau", "epsilon", "variant", "n_cap", "sigma2", "seed"});
  const SignalSpec signal = configio::parse_signal(cfg);
  const Tau tau = configio::default_tau(cfg);
  const double eps = configio::as_number(configio::need(cfg, "epsilon", "config"), "epsilon");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  const double sigma2 =
      cfg.contains("sigma2") ? configio::as_number(cfg.at("sigma2"), "sigma2") : 1.0;
  double n_cap = 1e6;
  if (cfg.contains("n_cap")) {
    n_cap = configio::as_number(cfg.at("n_cap"), "n_cap");
    if (!(n_cap >= 16)) throw ConfigError("n_cap must be >= 16");
  }

  const Json& grid = configio::need(cfg, "grid", "config");
  if (!grid.is_object()) throw ConfigError("grid must be an object");
  configio::reject_unknown(grid, "grid", {"rho", "gamma"});
  auto read_axis = [](const Json& g, const char* key) {
    const Json& arr = configio::need(g, key, "grid");
    if (!arr.is_array() || arr.empty()) {
      throw ConfigError(std::string("grid.") + key + " must be a nonempty array");
    }
    std::vector<double> vals;
    for (const auto& v : arr) vals.push_back(configio::as_number(v, key));
    return vals;
  };
  const std::vector<double> rhos = read_axis(grid, "rho");
  const std::vector<double> gammas = read_axis(grid, "gamma");

  std::vector<ApproxVariant> variants{ApproxVariant::fim, ApproxVariant::crb};
  if (cfg.contains("variant")) {
    const Json& v = cfg.at("variant");
    if (!v.is_string()) throw ConfigError("variant must be a string");
    const std::string name = v.get<std::string>();
    if (name == "fim") {
      variants = {ApproxVariant::fim};
    } else if (name == "crb") {
      variants = {ApproxVariant::crb};
    } else if (name != "both") {
      throw ConfigError("variant must be \"fim\", \"crb\", or \"both\"");
    }
  }

  RunOutput ro;
  detail::csv_header(ro.content, config_hash_hex(cfg), configio::resolve_seed(cfg, seed_override),
                     "rho,gamma,tau_mode,variant,N_epsilon,reason");
  const std::string tau_mode = detail::tau_label(tau);
  for (double rho : rhos) {
    for (double gamma : gammas) {
      for (ApproxVariant variant : variants) {
        const std::string vname = (variant == ApproxVariant::fim) ? "fim_approx" : "crb_approx";
        std::string n_str = "nan";
        std::string reason;
        try {
          DriftParams p;
          p.sigma2 = sigma2;
          p.gamma = gamma;
          p.rho = rho;
          p.tau = tau;
          validate_drift_params(p);
          NetworkSpec net;
          net.sensors = {p};
          const NEpsilonResult res = n_epsilon(net, signal.order, eps, variant, n_cap);
          n_str = format_g17(res.n);
          reason = res.reason.empty() ? "ok" : res.reason;
        } catch (const Error&) {
          reason = "invalid_regime";
        }
        detail::csv_row(ro.content, {format_g17(rho), format_g17(gamma), tau_mode, vname, n_str,
                                     reason});
      }
    }
  }
  return ro;
}

/// Average bound versus Monte-Carlo spread for randomly drawn networks of
/// M sensors from a parameter box. Stationary boxes run both a calibrated
/// (tau = 1) and an uncalibrated (stationary drift) variant.
inline RunOutput run_multisensor(const Json& cfg, std::optional<std::uint64_t> seed_override = {}) {
  configio::reject_unknown(cfg, "multisensor config",
                           {"signal", "box", "M_list", "N_list", "draws", "trials", "seed"});
  const SignalSpec signal = configio::parse_signal(cfg);
  const int P = signal.order;
  const ParameterBox box0 = configio::parse_box(cfg, Tau{1});
  const std::vector<int> m_list = configio::parse_int_list(cfg, "M_list", 1, 100000);
  const std::vector<int> n_list = configio::parse_int_list(cfg, "N_list", P + 1, 1 << 26);
  const std::int64_t draws =
      configio::as_integer(configio::need(cfg, "draws", "config"), "draws");
  if (draws < 2) throw ConfigError("draws must be >= 2");
  const std::int64_t trials = configio::parse_trials(cfg);
  const std::uint64_t master = configio::resolve_seed(cfg, seed_override);

  std::vector<std::pair<std::string, Tau>> calibrations;
  calibrations.emplace_back("calibrated", Tau{1});
  if (box0.rho_hi < 1.0) calibrations.emplace_back("uncalibrated", Tau::infinite());

  SignalSpec mc_signal;  // variance is coefficient-free in the linear model
  mc_signal.order = P;

  RunOutput ro;
  detail::csv_header(ro.content, config_hash_hex(cfg), master,
                     "N,M,calibration,coeff,avg_crb,mc_mean_variance,band_low,band_high");
  std::uint64_t cell = 0;
  for (int N : n_list) {
    for (int M : m_list) {
      for (const auto& [label, tau] : calibrations) {
        ParameterBox box = box0;
        box.tau = tau;
        const XiConstants xi = effective_xi_integral(box, M);
        const Vector avg = approx_crb_via_fim(xi, N, P);

        const std::uint64_t cell_seed = derive_seed(master, StreamTag::network_draw, cell++);
        RngStream param_rng = make_stream(derive_seed(cell_seed, StreamTag::sensor, 0));
        Matrix draw_var(draws, P + 1);
        for (std::int64_t d = 0; d < draws; ++d) {
          MonteCarloConfig mcc;
          mcc.network = draw_network(box, M, param_rng);
          mcc.signal = mc_signal;
          mcc.N = N;
          mcc.trials = trials;
          mcc.seed = derive_seed(cell_seed, StreamTag::trial, static_cast<std::uint64_t>(d));
          draw_var.row(d) = monte_carlo_variance(mcc).variance.transpose();
        }
        for (int p = 0; p <= P; ++p) {
          std::vector<double> col(draw_var.col(p).data(), draw_var.col(p).data() + draws);
          detail::csv_row(ro.content,
                          {std::to_string(N), std::to_string(M), label, std::to_string(p),
                           format_g17(avg[p]), format_g17(draw_var.col(p).mean()),
                           format_g17(detail::percentile(col, 0.025)),
                           format_g17(detail::percentile(col, 0.975))});
        }
      }
    }
  }
  return ro;
}

/// Quantization sweep: per bit width, the bound under quantization-adjusted
/// parameters against quasi-ML Monte-Carlo variance, plus a full-precision
/// reference row labeled bits=inf.
inline RunOutput run_quantized(const Json& cfg, std::optional<std::uint64_t> seed_override = {}) {
  configio::reject_unknown(
      cfg, "quantized config",
      {"signal", "sensors", "box", "M", "tau", "N", "quantizer", "trials", "seed"});
  const SignalSpec signal = configio::parse_signal(cfg);
  const int P = signal.order;
  const Tau tau = configio::default_tau(cfg);
  const NetworkSpec net = configio::parse_network(cfg, tau);
  const int N = configio::as_int(configio::need(cfg, "N", "config"), "N", P + 1, 1 << 26);
  const auto [qbase, bit_list] = configio::parse_quantizer(cfg);
  const std::int64_t trials = configio::parse_trials(cfg);
  const std::uint64_t master = configio::resolve_seed(cfg, seed_override);

  const Vector full = exact_crb_diag(net, N, P);

  RunOutput ro;
  detail::csv_header(ro.content, config_hash_hex(cfg), master,
                     "bits,coeff,modified_crb,mc_variance,ci_low,ci_high,clip_rate");
  for (int l : bit_list) {
    QuantizerSpec q = qbase;
    q.bits = l;
    const double s2q = q.sigma2_q();
    NetworkSpec adjusted;
    adjusted.sensors.reserve(net.sensors.size());
    for (const auto& s : net.sensors) {
      adjusted.sensors.push_back(quantization_adjusted_params(s, s2q).adjusted);
    }
    const Vector modified = exact_crb_diag(adjusted, N, P);

    MonteCarloConfig mcc;
    mcc.network = net;
    mcc.signal = signal;
    mcc.N = N;
    mcc.trials = trials;
    mcc.seed = derive_seed(master, StreamTag::network_draw, static_cast<std::uint64_t>(l));
    mcc.quantizer = q;
    const MonteCarloResult r = monte_carlo_variance(mcc);
    if (r.clip_rate > 0.01) {
      ro.warnings.push_back("clip rate " + format_g17(r.clip_rate) + " at bits=" +
                            std::to_string(l) + "; quantizer range too narrow");
    }
    for (int p = 0; p <= P; ++p) {
      detail::csv_row(ro.content,
                      {std::to_string(l), std::to_string(p), format_g17(modified[p]),
                       format_g17(r.variance[p]), format_g17(r.ci_low[p]),
                       format_g17(r.ci_high[p]), format_g17(r.clip_rate)});
    }
  }

  // Full-precision reference: plain ML on unquantized observations.
  MonteCarloConfig mcc;
  mcc.network = net;
  mcc.signal = signal;
  mcc.N = N;
  mcc.trials = trials;
  mcc.seed = derive_seed(master, StreamTag::network_draw, 0);
  const MonteCarloResult r = monte_carlo_variance(mcc);
  for (int p = 0; p <= P; ++p) {
    detail::csv_row(ro.content,
                    {"inf", std::to_string(p), format_g17(full[p]), format_g17(r.variance[p]),
                     format_g17(r.ci_low[p]), format_g17(r.ci_high[p]), format_g17(r.clip_rate)});
  }
  return ro;
}

/// Thin wrapper over the Monte-Carlo harness with the exact bound attached.
inline RunOutput run_montecarlo(const Json& cfg, std::optional<std::uint64_t> seed_override = {}) {
  configio::reject_unknown(
      cfg, "montecarlo config",
      {"signal", "sensors", "box", "M", "tau", "N", "trials", "seed", "quantizer"});
  const SignalSpec signal = configio::parse_signal(cfg);
  const int P = signal.order;
  const Tau tau = configio::default_tau(cfg);
  const NetworkSpec net = configio::parse_network(cfg, tau);
  const int N = configio::as_int(configio::need(cfg, "N", "config"), "N", P + 1, 1 << 26);

  MonteCarloConfig mcc;
  mcc.network = net;
  mcc.signal = signal;
  mcc.N = N;
  mcc.trials = configio::parse_trials(cfg);
  mcc.seed = configio::resolve_seed(cfg, seed_override);
  if (cfg.contains("quantizer")) {
    const auto [q, bits] = configio::parse_quantizer(cfg);
    if (bits.size() != 1) throw ConfigError("montecarlo takes a single quantizer.bits value");
    mcc.quantizer = q;
  }
  const MonteCarloResult r = monte_carlo_variance(mcc);
  const Vector reference = exact_crb_diag(net, N, P);

  RunOutput ro;
  Json out;
  out["config_hash"] = config_hash_hex(cfg);
  out["seed"] = mcc.seed;
  out["N"] = N;
  out["P"] = P;
  out["trials"] = r.trials;
  out["variance"] = detail::vector_json(r.variance);
  out["variance_about_mean"] = detail::vector_json(r.variance_about_mean);
  out["mean"] = detail::vector_json(r.mean);
  out["bias"] = detail::vector_json(r.bias);
  out["ci_low"] = detail::vector_json(r.ci_low);
  out["ci_high"] = detail::vector_json(r.ci_high);
  out["clip_rate"] = r.clip_rate;
  out["reference_crb"] = detail::vector_json(reference);
  Vector eff(P + 1);
  for (int p = 0; p <= P; ++p) eff[p] = reference[p] / r.variance[p];
  out["efficiency"] = detail::vector_json(eff);
  out["warnings"] = ro.warnings;
  ro.content = out.dump(2) + "\n";
  return ro;
}

}  // namespace driftcrb
