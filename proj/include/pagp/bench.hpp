#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pagp/algorithms.hpp"

namespace pagp {

// ---------------------------------------------------------------------------
// Theoretical constants and regret bounds
// ---------------------------------------------------------------------------

// Leading constants of the cumulative-regret bounds. c1 drives the
// adjusted-posterior strategy, c2 the plain single-task strategy; r_star is
// the offline-quality threshold below which the adjusted bound is strictly
// smaller than the plain one. With rho = 0 the threshold is undefined
// (there is no gain to be had) and r_star_defined is false.
struct TheoryConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double r_star = std::numeric_limits<double>::quiet_NaN();
  bool r_star_defined = false;
  std::string note;
};

inline TheoryConstants theory_constants(double rho, const NoiseSpec& noise) {
  noise.validate_for_model();
  if (!(std::abs(rho) < 1.0))
    throw InputError("theory_constants: |rho| must be < 1");
  TheoryConstants out;
  const double rho_sq = rho * rho;
  // Effective noise of the prediction-adjusted observation channel.
  const double eff = (noise.eta_sq + rho_sq * noise.eta_ml_sq) / (1.0 - rho_sq);
  out.c1 = 8.0 / std::log1p(1.0 / eff);
  out.c2 = 8.0 / std::log1p(1.0 / noise.eta_sq);
  if (rho == 0.0) {
    out.r_star_defined = false;
    out.note = "no gain when rho=0";
  } else {
    out.r_star_defined = true;
    out.r_star = std::min((out.c2 / out.c1 - (1.0 - rho_sq)) / rho_sq, 1.0);
  }
  return out;
}

// Width-contraction bracket sqrt(1 - (1-R) rho^2): 1 when offline data is
// uninformative (R = 1), approaching 0 as R -> 0 and |rho| -> 1.
inline double ratio_factor(double R, double rho) {
  if (!(R >= 0.0 && R <= 1.0))
    throw InputError("ratio_factor: R must lie in [0, 1]");
  if (!(std::abs(rho) <= 1.0))
    throw InputError("ratio_factor: |rho| must be <= 1");
  return std::sqrt(1.0 - (1.0 - R) * rho * rho);
}

inline constexpr double regret_bound_tail = std::numbers::pi_v<double> *
                                            std::numbers::pi_v<double> / 6.0;

inline double pa_regret_bound(double T, double beta_T, double c1, double R,
                              double rho, double gamma_T) {
  if (!(T >= 0.0 && beta_T >= 0.0 && c1 >= 0.0 && gamma_T >= 0.0))
    throw InputError("pa_regret_bound: inputs must be nonnegative");
  const double bracket = 1.0 - (1.0 - R) * rho * rho;
  return std::sqrt(c1 * beta_T * T * bracket * gamma_T) + regret_bound_tail;
}

inline double vanilla_regret_bound(double T, double beta_T, double c2,
                                   double gamma_T) {
  if (!(T >= 0.0 && beta_T >= 0.0 && c2 >= 0.0 && gamma_T >= 0.0))
    throw InputError("vanilla_regret_bound: inputs must be nonnegative");
  return std::sqrt(c2 * T * beta_T * gamma_T) + regret_bound_tail;
}

// ---------------------------------------------------------------------------
// Information gain
// ---------------------------------------------------------------------------

// (1/2) log det(I + sigma^-2 K_A) for a fixed set of points. The matrix has
// eigenvalues >= 1, so a plain Cholesky factorization never needs jitter.
inline double info_gain(const KernelSpec& kernel, double sigma_sq,
                        std::span<const Point> points) {
  kernel.validate();
  if (!(sigma_sq > 0.0)) throw InputError("info_gain: sigma_sq must be > 0");
  if (points.empty()) return 0.0;
  Eigen::MatrixXd m = gram(kernel, points) / sigma_sq;
  m.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError("info_gain: factorization failed", 0.0);
  return llt.matrixLLT().diagonal().array().log().sum();
}

// Greedy lower estimate of the horizon-T maximum of info_gain over the grid:
// repeatedly add the point with the largest marginal gain
// (1/2) log(1 + sigma^-2 * posterior variance), lowest index on ties.
inline double info_gain_greedy(const KernelSpec& kernel, double sigma_sq,
                               std::span<const Point> grid, int T) {
  kernel.validate();
  if (!(sigma_sq > 0.0))
    throw InputError("info_gain_greedy: sigma_sq must be > 0");
  if (T < 0 || static_cast<std::size_t>(T) > grid.size())
    throw InputError("info_gain_greedy: need 0 <= T <= grid size");
  std::vector<Point> chosen;
  double gain = 0.0;
  for (int step = 0; step < T; ++step) {
    std::size_t best = 0;
    double best_var = -std::numeric_limits<double>::infinity();
    if (chosen.empty()) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = kernel.signal_var;
        if (v > best_var) {
          best_var = v;
          best = i;
        }
      }
    } else {
      Eigen::MatrixXd k = gram(kernel, chosen);
      k.diagonal().array() += sigma_sq;
      const CholFactor fac(k, 0.0, JitterPolicy::for_signal(kernel.signal_var));
      const Eigen::MatrixXd kc =
          gram(kernel, grid, std::span<const Point>(chosen));
      const Eigen::MatrixXd w = fac.solve(Eigen::MatrixXd(kc.transpose()));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        const double q = kc.row(ei).dot(w.col(ei));
        const double v = kernel.signal_var - q;
        if (v > best_var) {
          best_var = v;
          best = i;
        }
      }
    }
    gain += 0.5 * std::log1p(std::max(0.0, best_var) / sigma_sq);
    chosen.push_back(grid[best]);
  }
  return gain;
}

// ---------------------------------------------------------------------------
// Empirical correlation
// ---------------------------------------------------------------------------

inline double estimate_rho_hat(
    std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3)
    throw InputError("estimate_rho_hat: need at least 3 pairs");
  double mean_a = 0.0, mean_b = 0.0;
  for (const auto& [a, b] : pairs) {
    if (!std::isfinite(a) || !std::isfinite(b))
      throw InputError("estimate_rho_hat: non-finite sample");
    mean_a += a;
    mean_b += b;
  }
  const double n = static_cast<double>(pairs.size());
  mean_a /= n;
  mean_b /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (const auto& [a, b] : pairs) {
    saa += (a - mean_a) * (a - mean_a);
    sbb += (b - mean_b) * (b - mean_b);
    sab += (a - mean_a) * (b - mean_b);
  }
  if (!(saa > 0.0) || !(sbb > 0.0))
    throw InputError("estimate_rho_hat: zero variance in a coordinate");
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------
// Environment construction and coupling resolution
// ---------------------------------------------------------------------------

inline Environment build_environment(const RunConfig& cfg) {
  cfg.validate();
  switch (cfg.env.kind) {
    case EnvKind::synthetic:
      return make_synthetic_env(cfg.env, cfg.kernel, cfg.env_rho,
                                cfg.grid_per_dim);
    case EnvKind::finite_arm:
      return make_finite_arm_env(cfg.env);
    case EnvKind::embedded_grid:
      return make_embedded_grid_env(cfg.env, cfg.kernel, cfg.grid_per_dim);
  }
  throw InputError("build_environment: unknown environment kind");
}

// The coupling actually used by a run: either the configured value, or the
// empirical correlation of the environment's two reward tables.
inline TaskCoupling resolve_coupling(const RunConfig& cfg,
                                     const Environment& env) {
  if (!cfg.rho_auto) return cfg.coupling;
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(env.support().size());
  for (std::size_t i = 0; i < env.support().size(); ++i)
    pairs.emplace_back(env.f_at(i), env.f_ml_at(i));
  return TaskCoupling{estimate_rho_hat(pairs)};
}

// Fully concrete run configuration for one environment instance.
inline RunConfig finalize_for_env(RunConfig cfg, const Environment& env) {
  cfg.coupling = resolve_coupling(cfg, env);
  cfg.rho_auto = false;
  return cfg;
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

struct EnsemblePoint {
  int t = 0;
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean (0 for a single run)
  int n = 0;
};

struct EnsembleSeries {
  AlgorithmKind algorithm = AlgorithmKind::pa;
  std::vector<EnsemblePoint> points;
};

struct EnsembleResult {
  std::vector<AlgorithmKind> algorithms;
  std::vector<std::uint64_t> seeds;
  // Traces indexed algorithm-major: traces[a * seeds.size() + s].
  std::vector<RegretTrace> traces;
  std::vector<EnsembleSeries> series;
  std::vector<std::string> failures;  // "algorithm seed=s: message"

  const RegretTrace& trace_at(std::size_t algo_idx,
                              std::size_t seed_idx) const {
    return traces[algo_idx * seeds.size() + seed_idx];
  }
};

namespace detail {

inline EnsembleSeries aggregate_series(AlgorithmKind algo,
                                       std::span<const RegretTrace> traces) {
  EnsembleSeries out;
  out.algorithm = algo;
  // Reduce in seed order, not submission order, so the aggregate is a
  // bit-identical function of the seed *set*.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < traces.size(); ++i)
    if (!traces[i].failure) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (traces[a].seed != traces[b].seed)
      return traces[a].seed < traces[b].seed;
    return a < b;
  });
  std::size_t max_t = 0;
  for (const std::size_t i : order)
    max_t = std::max(max_t, traces[i].rounds.size());
  for (std::size_t t = 0; t < max_t; ++t) {
    double sum = 0.0;
    int n = 0;
    for (const std::size_t i : order)
      if (t < traces[i].rounds.size()) {
        sum += traces[i].rounds[t].cum_regret;
        ++n;
      }
    if (n == 0) continue;
    const double mean = sum / n;
    double ss = 0.0;
    for (const std::size_t i : order)
      if (t < traces[i].rounds.size()) {
        const double d = traces[i].rounds[t].cum_regret - mean;
        ss += d * d;
      }
    const double se =
        n > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n))
              : 0.0;
    out.points.push_back(EnsemblePoint{static_cast<int>(t) + 1, mean, se, n});
  }
  return out;
}

}  // namespace detail

// Runs every (algorithm, seed) combination of the template configuration.
// One environment instance is built per seed and shared by all algorithms of
// that seed, so paired comparisons see identical ground truth and noise.
// Individual failures (including environment construction) are captured in
// the trace's failure field; aggregation uses completed runs only.
inline EnsembleResult run_ensemble(const RunConfig& tpl,
                                   std::span<const std::uint64_t> seeds,
                                   std::span<const AlgorithmKind> algorithms,
                                   int threads = 0) {
  if (seeds.empty()) throw InputError("run_ensemble: need at least one seed");
  if (algorithms.empty())
    throw InputError("run_ensemble: need at least one algorithm");
  EnsembleResult result;
  result.algorithms.assign(algorithms.begin(), algorithms.end());
  result.seeds.assign(seeds.begin(), seeds.end());
  result.traces.resize(algorithms.size() * seeds.size());

  // One job per seed: build the environment once, then run each algorithm.
  const auto run_seed = [&](std::size_t seed_idx) {
    const std::uint64_t seed = seeds[seed_idx];
    std::optional<Environment> env;
    std::optional<RunConfig> base;
    std::string env_failure;
    try {
      RunConfig cfg = tpl;
      cfg.seed = seed;
      cfg.env.seed = seed;
      env.emplace(build_environment(cfg));
      base.emplace(finalize_for_env(cfg, *env));
    } catch (const std::exception& e) {
      env_failure = std::string("environment: ") + e.what();
    }
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      auto& slot = result.traces[a * seeds.size() + seed_idx];
      if (!env) {
        slot.algorithm = algorithms[a];
        slot.seed = seed;
        slot.failure = env_failure;
        continue;
      }
      RunConfig cfg = *base;
      cfg.algorithm = algorithms[a];
      try {
        slot = run_algorithm(cfg, *env);
      } catch (const std::exception& e) {
        slot.algorithm = algorithms[a];
        slot.seed = seed;
        slot.failure = e.what();
      }
    }
  };

  int pool = threads > 0 ? threads
                         : static_cast<int>(std::thread::hardware_concurrency());
  pool = std::clamp(pool, 1, static_cast<int>(seeds.size()));
  if (pool == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) run_seed(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(pool));
    for (int w = 0; w < pool; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < seeds.size();
             i = next.fetch_add(1))
          run_seed(i);
      });
    for (auto& w : workers) w.join();
  }

  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    const std::span<const RegretTrace> slice(
        result.traces.data() + a * seeds.size(), seeds.size());
    result.series.push_back(detail::aggregate_series(algorithms[a], slice));
    for (std::size_t s = 0; s < seeds.size(); ++s)
      if (slice[s].failure)
        result.failures.push_back(std::string(algorithm_name(algorithms[a])) +
                                  " seed=" + std::to_string(seeds[s]) + ": " +
                                  *slice[s].failure);
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV emission and parsing
// ---------------------------------------------------------------------------

namespace detail {

// All floats cross the text boundary with 12 significant digits.
inline std::string fmt_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::vector<std::string> split_simple_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_csv_double(const std::string& s, std::size_t row) {
  if (s == "nan" || s == "-nan")
    return std::numeric_limits<double>::quiet_NaN();
  return parse_double_field(s, "csv field", row);
}

}  // namespace detail

inline std::string trace_csv_header(int dim) {
  std::string h = "run_id,t";
  for (int k = 1; k <= dim; ++k) h += ",x_" + std::to_string(k);
  h += ",y,y_ml,f_x,inst_regret,cum_regret";
  return h;
}

inline void write_trace_csv(std::ostream& os, const RegretTrace& trace,
                            int dim, const std::string& run_id) {
  os << trace_csv_header(dim) << "\n";
  for (const auto& r : trace.rounds) {
    os << run_id << "," << r.t;
    for (int k = 0; k < dim; ++k) os << "," << detail::fmt_g12(r.x[k]);
    os << "," << detail::fmt_g12(r.y) << "," << detail::fmt_g12(r.y_ml) << ","
       << detail::fmt_g12(r.f_x) << "," << detail::fmt_g12(r.inst_regret)
       << "," << detail::fmt_g12(r.cum_regret) << "\n";
  }
}

struct ParsedTrace {
  std::string run_id;
  int dim = 0;
  std::vector<TraceRound> rounds;
};

inline ParsedTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw ParseError("trace csv: missing header", 1);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
    line.pop_back();
  const auto header = detail::split_simple_csv(line);
  if (header.size() < 8 || header[0] != "run_id" || header[1] != "t")
    throw ParseError("trace csv: unexpected header '" + line + "'", 1);
  ParsedTrace out;
  out.dim = static_cast<int>(header.size()) - 7;
  for (int k = 0; k < out.dim; ++k)
    if (header[static_cast<std::size_t>(2 + k)] !=
        "x_" + std::to_string(k + 1))
      throw ParseError("trace csv: unexpected header '" + line + "'", 1);
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
      line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_simple_csv(line);
    if (f.size() != header.size())
      throw ParseError("trace csv: wrong field count", row);
    if (out.rounds.empty()) {
      out.run_id = f[0];
    } else if (f[0] != out.run_id) {
      throw ParseError("trace csv: mixed run_id values", row);
    }
    TraceRound r;
    r.t = static_cast<int>(detail::parse_csv_double(f[1], row));
    r.x = Point(out.dim);
    for (int k = 0; k < out.dim; ++k)
      r.x[k] = detail::parse_csv_double(f[static_cast<std::size_t>(2 + k)], row);
    const std::size_t base = static_cast<std::size_t>(2 + out.dim);
    r.y = detail::parse_csv_double(f[base], row);
    r.y_ml = detail::parse_csv_double(f[base + 1], row);
    r.f_x = detail::parse_csv_double(f[base + 2], row);
    r.inst_regret = detail::parse_csv_double(f[base + 3], row);
    r.cum_regret = detail::parse_csv_double(f[base + 4], row);
    out.rounds.push_back(std::move(r));
  }
  return out;
}

inline constexpr const char* aggregate_csv_header =
    "algorithm,t,mean_cum_regret,stderr,n_runs";

inline void write_aggregate_csv(std::ostream& os,
                                const EnsembleResult& result) {
  os << aggregate_csv_header << "\n";
  for (const auto& s : result.series)
    for (const auto& p : s.points)
      os << algorithm_name(s.algorithm) << "," << p.t << ","
         << detail::fmt_g12(p.mean) << "," << detail::fmt_g12(p.se) << ","
         << p.n << "\n";
}

struct AggregateRow {
  std::string algorithm;
  int t = 0;
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

inline std::vector<AggregateRow> read_aggregate_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw ParseError("aggregate csv: missing header", 1);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
    line.pop_back();
  if (line != aggregate_csv_header)
    throw ParseError("aggregate csv: unexpected header '" + line + "'", 1);
  std::vector<AggregateRow> rows;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
      line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_simple_csv(line);
    if (f.size() != 5)
      throw ParseError("aggregate csv: wrong field count", row);
    AggregateRow r;
    r.algorithm = f[0];
    r.t = static_cast<int>(detail::parse_csv_double(f[1], row));
    r.mean = detail::parse_csv_double(f[2], row);
    r.se = detail::parse_csv_double(f[3], row);
    r.n = static_cast<int>(detail::parse_csv_double(f[4], row));
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG plot
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_svg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline const char* series_color(std::size_t i) {
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#9467bd", "#8c564b", "#e377c2"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace detail

// Mean cumulative regret per algorithm over rounds, with a shaded band of
// +/- one standard error per series. Exactly one <path> element per series;
// axes are drawn with <line> elements.
inline std::string render_regret_svg(const EnsembleResult& result,
                                     int width = 720, int height = 480) {
  const double ml = 60.0, mr = 20.0, mt = 20.0, mb = 40.0;
  const double w = width, h = height;
  int max_t = 1;
  double max_y = 0.0;
  for (const auto& s : result.series)
    for (const auto& p : s.points) {
      max_t = std::max(max_t, p.t);
      max_y = std::max(max_y, p.mean + p.se);
    }
  if (max_y <= 0.0) max_y = 1.0;
  const auto sx = [&](double t) {
    return ml + (t - 1.0) / std::max(1.0, max_t - 1.0) * (w - ml - mr);
  };
  const auto sy = [&](double v) {
    return h - mb - v / max_y * (h - mt - mb);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\""
     << height << "\" fill=\"white\"/>\n";
  os << "  <line x1=\"" << detail::fmt_svg(ml) << "\" y1=\""
     << detail::fmt_svg(h - mb) << "\" x2=\"" << detail::fmt_svg(w - mr)
     << "\" y2=\"" << detail::fmt_svg(h - mb)
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "  <line x1=\"" << detail::fmt_svg(ml) << "\" y1=\""
     << detail::fmt_svg(mt) << "\" x2=\"" << detail::fmt_svg(ml)
     << "\" y2=\"" << detail::fmt_svg(h - mb)
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "  <text x=\"" << detail::fmt_svg((ml + w - mr) / 2.0) << "\" y=\""
     << detail::fmt_svg(h - 8.0)
     << "\" font-size=\"12\" text-anchor=\"middle\">round t</text>\n";
  os << "  <text x=\"14\" y=\"" << detail::fmt_svg((mt + h - mb) / 2.0)
     << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << detail::fmt_svg((mt + h - mb) / 2.0)
     << ")\">mean cumulative regret</text>\n";
  os << "  <text x=\"" << detail::fmt_svg(ml - 6.0) << "\" y=\""
     << detail::fmt_svg(h - mb + 4.0)
     << "\" font-size=\"10\" text-anchor=\"end\">0</text>\n";
  os << "  <text x=\"" << detail::fmt_svg(ml - 6.0) << "\" y=\""
     << detail::fmt_svg(mt + 4.0)
     << "\" font-size=\"10\" text-anchor=\"end\">"
     << detail::fmt_g12(max_y) << "</text>\n";
  os << "  <text x=\"" << detail::fmt_svg(w - mr) << "\" y=\""
     << detail::fmt_svg(h - mb + 14.0)
     << "\" font-size=\"10\" text-anchor=\"end\">" << max_t << "</text>\n";

  for (std::size_t i = 0; i < result.series.size(); ++i) {
    const auto& s = result.series[i];
    if (s.points.empty()) continue;
    const char* color = detail::series_color(i);
    os << "  <polygon fill=\"" << color << "\" fill-opacity=\"0.15\" "
       << "stroke=\"none\" points=\"";
    for (const auto& p : s.points)
      os << detail::fmt_svg(sx(p.t)) << "," << detail::fmt_svg(sy(p.mean + p.se))
         << " ";
    for (auto it = s.points.rbegin(); it != s.points.rend(); ++it)
      os << detail::fmt_svg(sx(it->t)) << ","
         << detail::fmt_svg(sy(std::max(0.0, it->mean - it->se))) << " ";
    os << "\"/>\n";
    os << "  <path fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" d=\"";
    for (std::size_t j = 0; j < s.points.size(); ++j)
      os << (j == 0 ? "M" : " L") << detail::fmt_svg(sx(s.points[j].t)) << " "
         << detail::fmt_svg(sy(s.points[j].mean));
    os << "\"/>\n";
    os << "  <text x=\"" << detail::fmt_svg(ml + 10.0) << "\" y=\""
       << detail::fmt_svg(mt + 16.0 + 14.0 * static_cast<double>(i))
       << "\" font-size=\"12\" fill=\"" << color << "\">"
       << algorithm_name(s.algorithm) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Nearest arms
// ---------------------------------------------------------------------------

struct NearArm {
  std::string arm_id;
  std::string text;
  double distance = 0.0;
};

// The k arms whose embeddings are closest to x in Euclidean distance,
// ascending, ties broken by arm_id lexicographically. Texts are returned
// verbatim.
inline std::vector<NearArm> nearest_arms(const ArmTable& table, const Point& x,
                                         std::size_t k) {
  if (k > table.rows.size())
    throw InputError("nearest_arms: k exceeds the table size");
  if (!table.rows.empty() &&
      x.size() != table.rows.front().embedding.size())
    throw InputError("nearest_arms: query dimension mismatch");
  std::vector<NearArm> all;
  all.reserve(table.rows.size());
  for (const auto& arm : table.rows)
    all.push_back(NearArm{arm.id, arm.text, (arm.embedding - x).norm()});
  std::sort(all.begin(), all.end(), [](const NearArm& a, const NearArm& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.arm_id < b.arm_id;
  });
  all.resize(k);
  return all;
}

}  // namespace pagp
