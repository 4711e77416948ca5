#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pagp/acquisition.hpp"
#include "pagp/environment.hpp"
#include "pagp/joint_model.hpp"
#include "pagp/offline_design.hpp"
#include "pagp/types.hpp"

namespace pagp {

enum class AlgorithmKind { pa, vanilla, naive_offline, naive_offline_online };

inline const char* algorithm_name(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::pa: return "pa";
    case AlgorithmKind::vanilla: return "vanilla";
    case AlgorithmKind::naive_offline: return "naive_offline";
    case AlgorithmKind::naive_offline_online: return "naive_offline_online";
  }
  return "?";
}

inline AlgorithmKind algorithm_from_name(const std::string& name) {
  if (name == "pa") return AlgorithmKind::pa;
  if (name == "vanilla") return AlgorithmKind::vanilla;
  if (name == "naive_offline") return AlgorithmKind::naive_offline;
  if (name == "naive_offline_online")
    return AlgorithmKind::naive_offline_online;
  throw InputError("unknown algorithm '" + name + "'");
}

// Offline stage plan: net radius and per-center replication. A missing plan
// (or zero replicates) means no offline stage at all. With cover_support the
// net is replaced by the environment's full support set — the natural choice
// for finite-arm environments, where scattered embeddings make a box net
// meaningless and the protocol is "N offline predictions per arm".
struct NetPlan {
  double epsilon = 0.1;
  int replicates = 1;
  bool cover_support = false;
};

struct BetaConfig {
  enum class Mode { theoretical, fixed };
  Mode mode = Mode::theoretical;
  double delta = 0.1;
  double a = 1.0;
  double b = 1.0;
  double fixed_beta = 4.0;

  double value(int t, int d, double r) const {
    if (mode == Mode::theoretical) return beta_theoretical(t, d, delta, a, b, r);
    if (!(fixed_beta > 0.0)) throw InputError("BetaConfig: beta must be > 0");
    return fixed_beta;
  }
};

struct RunConfig {
  EnvironmentSpec env;
  KernelSpec kernel;
  TaskCoupling coupling{0.5};
  bool rho_auto = false;  // estimate the coupling from the environment tables
  double env_rho = 0.8;   // coupling used when synthesizing a surface pair
  int horizon = 100;
  std::optional<NetPlan> net;
  BetaConfig beta;
  AlgorithmKind algorithm = AlgorithmKind::pa;
  std::uint64_t seed = 1;
  bool random_init = false;
  int grid_per_dim = 512;

  void validate() const {
    env.validate();
    kernel.validate();
    coupling.validate();
    if (horizon < 1) throw InputError("RunConfig: horizon must be >= 1");
    if (grid_per_dim < 1)
      throw InputError("RunConfig: grid_per_dim must be >= 1");
    if (net) {
      if (!net->cover_support && !(net->epsilon > 0.0))
        throw InputError("RunConfig: net epsilon must be > 0");
      if (net->replicates < 0)
        throw InputError("RunConfig: net replicates must be >= 0");
    }
    if (!(std::abs(env_rho) <= 1.0))
      throw InputError("RunConfig: env_rho must lie in [-1, 1]");
  }
};

struct TraceRound {
  int t = 0;
  Point x;
  double y = 0.0;
  double y_ml = std::numeric_limits<double>::quiet_NaN();
  double f_x = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
};

// Extremal statistics accumulated over every candidate summary the run
// evaluated, used by the dominance and bound checks.
struct RunDiagnostics {
  double max_pa_std_excess = -std::numeric_limits<double>::infinity();
  double max_mlall_std_excess = -std::numeric_limits<double>::infinity();
  // Running max over rounds and candidates of the clamped squared width
  // ratio: the sequence-empirical analogue of the offline quality ratio.
  double max_ratio_sq = 0.0;
  std::size_t summaries_seen = 0;
};

struct RegretTrace {
  AlgorithmKind algorithm = AlgorithmKind::pa;
  std::uint64_t seed = 0;
  std::vector<TraceRound> rounds;
  RunDiagnostics diag;
  std::optional<std::string> failure;

  double final_cum_regret() const {
    return rounds.empty() ? 0.0 : rounds.back().cum_regret;
  }
};

// ---------------------------------------------------------------------------
// Baseline models
// ---------------------------------------------------------------------------

// Plain single-output GP over truth observations: the vanilla baseline's
// entire belief state.
class SingleTaskGp {
 public:
  SingleTaskGp(const KernelSpec& kernel, const Domain& domain, double eta_sq)
      : kernel_(kernel), domain_(domain), eta_sq_(eta_sq) {
    kernel_.validate();
    domain_.validate();
    if (!(eta_sq > 0.0)) throw InputError("SingleTaskGp: eta_sq must be > 0");
  }

  void observe(const Point& x, double y) {
    if (!domain_.contains(x))
      throw InputError("SingleTaskGp: point outside the domain");
    if (!std::isfinite(y)) throw InputError("SingleTaskGp: non-finite value");
    xs_.push_back(x);
    ys_.push_back(y);
    solved_.reset();
  }

  std::vector<TaskMoments> moments(std::span<const Point> xs) const {
    const double s2 = kernel_.signal_var;
    std::vector<TaskMoments> out(xs.size());
    if (xs_.empty()) {
      for (auto& o : out) o = TaskMoments{0.0, std::sqrt(s2)};
      return out;
    }
    if (!solved_) {
      Eigen::MatrixXd k = gram(kernel_, xs_);
      k.diagonal().array() += eta_sq_;
      Solved s{CholFactor(k, 0.0, JitterPolicy::for_signal(s2)), {}};
      const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
          ys_.data(), static_cast<Eigen::Index>(ys_.size()));
      s.alpha = s.fac.solve(y);
      solved_.emplace(std::move(s));
    }
    const Eigen::MatrixXd kc = gram(kernel_, xs, xs_);  // g x m
    const Eigen::VectorXd mu = kc * solved_->alpha;
    const Eigen::MatrixXd w = solved_->fac.solve(Eigen::MatrixXd(kc.transpose()));
    const Eigen::ArrayXd q =
        (kc.transpose().array() * w.array()).colwise().sum();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto ei = static_cast<Eigen::Index>(i);
      out[i] = TaskMoments{mu[ei], std::sqrt(std::max(0.0, s2 - q[ei]))};
    }
    return out;
  }

 private:
  struct Solved {
    CholFactor fac;
    Eigen::VectorXd alpha;
  };
  KernelSpec kernel_;
  Domain domain_;
  double eta_sq_;
  std::vector<Point> xs_;
  std::vector<double> ys_;
  mutable std::optional<Solved> solved_;
};

// Belief state of the offline-only naive baseline: a joint GP conditioned on
// aggregated offline prediction observations plus online truth observations
// (never online predictions). Exposes the truth-task marginal.
class NaiveOfflineModel {
 public:
  NaiveOfflineModel(const KernelSpec& kernel, const Domain& domain,
                    const TaskCoupling& coupling, const NoiseSpec& noise)
      : kernel_(kernel), domain_(domain), coupling_(coupling), noise_(noise) {
    kernel_.validate();
    domain_.validate();
    coupling_.validate();
    noise_.validate_for_model();
  }

  void observe_offline(const Point& center, std::span<const double> obs) {
    if (!domain_.contains(center))
      throw InputError("NaiveOfflineModel: center outside the domain");
    if (obs.empty())
      throw InputError("NaiveOfflineModel: empty observation batch");
    double sum = 0.0;
    for (double v : obs) {
      if (!std::isfinite(v))
        throw InputError("NaiveOfflineModel: non-finite offline value");
      sum += v;
    }
    for (auto& e : offline_) {
      if (e.center.size() == center.size() &&
          (e.center.array() == center.array()).all()) {
        const double total = e.mean_obs * e.count + sum;
        e.count += static_cast<int>(obs.size());
        e.mean_obs = total / e.count;
        solved_.reset();
        return;
      }
    }
    OfflineEntry entry;
    entry.center = center;
    entry.count = static_cast<int>(obs.size());
    entry.mean_obs = sum / entry.count;
    offline_.push_back(std::move(entry));
    solved_.reset();
  }

  void observe_online_truth(const Point& x, double y) {
    if (!domain_.contains(x))
      throw InputError("NaiveOfflineModel: point outside the domain");
    if (!std::isfinite(y))
      throw InputError("NaiveOfflineModel: non-finite value");
    xs_.push_back(x);
    ys_.push_back(y);
    solved_.reset();
  }

  std::vector<TaskMoments> truth_moments(std::span<const Point> xs) const {
    const double s2 = kernel_.signal_var;
    const double rho = coupling_.rho;
    const auto mo = static_cast<Eigen::Index>(offline_.size());
    const auto mn = static_cast<Eigen::Index>(xs_.size());
    std::vector<TaskMoments> out(xs.size());
    if (mo + mn == 0) {
      for (auto& o : out) o = TaskMoments{0.0, std::sqrt(s2)};
      return out;
    }
    if (!solved_) {
      Eigen::MatrixXd k(mo + mn, mo + mn);
      std::vector<Point> centers;
      for (const auto& e : offline_) centers.push_back(e.center);
      if (mo > 0) {
        k.topLeftCorner(mo, mo) = gram(kernel_, centers);
        for (Eigen::Index j = 0; j < mo; ++j)
          k(j, j) += noise_.eta_ml_sq / offline_[static_cast<std::size_t>(j)].count;
      }
      if (mn > 0) {
        k.bottomRightCorner(mn, mn) = gram(kernel_, xs_);
        k.bottomRightCorner(mn, mn).diagonal().array() += noise_.eta_sq;
      }
      if (mo > 0 && mn > 0) {
        const Eigen::MatrixXd cross = rho * gram(kernel_, centers, xs_);
        k.topRightCorner(mo, mn) = cross;
        k.bottomLeftCorner(mn, mo) = cross.transpose();
      }
      Eigen::VectorXd vals(mo + mn);
      for (Eigen::Index j = 0; j < mo; ++j)
        vals[j] = offline_[static_cast<std::size_t>(j)].mean_obs;
      for (Eigen::Index i = 0; i < mn; ++i)
        vals[mo + i] = ys_[static_cast<std::size_t>(i)];
      Solved s{CholFactor(k, 0.0, JitterPolicy::for_signal(s2)), {}};
      s.alpha = s.fac.solve(vals);
      solved_.emplace(std::move(s));
    }

    std::vector<Point> centers;
    for (const auto& e : offline_) centers.push_back(e.center);
    Eigen::MatrixXd c(mo + mn, static_cast<Eigen::Index>(xs.size()));
    if (mo > 0) c.topRows(mo) = rho * gram(kernel_, centers, xs);
    if (mn > 0) c.bottomRows(mn) = gram(kernel_, xs_, xs);
    const Eigen::VectorXd mu = c.transpose() * solved_->alpha;
    const Eigen::MatrixXd w = solved_->fac.solve(c);
    const Eigen::ArrayXd q = (c.array() * w.array()).colwise().sum();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto ei = static_cast<Eigen::Index>(i);
      out[i] = TaskMoments{mu[ei], std::sqrt(std::max(0.0, s2 - q[ei]))};
    }
    return out;
  }

  const std::vector<OfflineEntry>& offline_history() const { return offline_; }

 private:
  struct Solved {
    CholFactor fac;
    Eigen::VectorXd alpha;
  };
  KernelSpec kernel_;
  Domain domain_;
  TaskCoupling coupling_;
  NoiseSpec noise_;
  std::vector<OfflineEntry> offline_;
  std::vector<Point> xs_;
  std::vector<double> ys_;
  mutable std::optional<Solved> solved_;
};

// ---------------------------------------------------------------------------
// Run loops
// ---------------------------------------------------------------------------

namespace detail {

// Model noise must be strictly positive even when the environment itself is
// noise-free; the floor is far below any signal scale used here.
inline NoiseSpec model_noise(const NoiseSpec& env_noise) {
  return NoiseSpec{std::max(env_noise.eta_sq, 1e-12),
                   std::max(env_noise.eta_ml_sq, 1e-12)};
}

// Offline prediction batches, already snapped onto the environment support:
// net center -> nearest support point, N draws per center in net order.
struct OfflineBatch {
  std::size_t support_index;
  std::vector<double> values;
};

inline std::vector<OfflineBatch> collect_offline(const RunConfig& cfg,
                                                 const Environment& env,
                                                 NoiseStreams& streams) {
  std::vector<OfflineBatch> batches;
  if (!cfg.net || cfg.net->replicates == 0) return batches;
  std::vector<std::size_t> indices;
  if (cfg.net->cover_support) {
    indices.resize(env.support().size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  } else {
    const auto net = epsilon_net(cfg.env.domain, cfg.net->epsilon);
    indices.reserve(net.centers.size());
    for (const auto& center : net.centers)
      indices.push_back(env.nearest_index(center));
  }
  for (const std::size_t idx : indices) {
    OfflineBatch batch;
    batch.support_index = idx;
    batch.values.resize(static_cast<std::size_t>(cfg.net->replicates));
    for (auto& v : batch.values)
      v = env.query_index(batch.support_index, Task::prediction, streams,
                          QueryPhase::offline);
    batches.push_back(std::move(batch));
  }
  return batches;
}

// Shared online loop: round bookkeeping, the optional random first query,
// oracle calls, regret accounting and mid-run failure capture. The
// algorithm-specific part is the `select` callback (scores + diagnostics)
// and the `learn` callback (model update).
inline RegretTrace run_loop(
    const RunConfig& cfg, const Environment& env, bool uses_pred_online,
    const std::function<std::size_t(int, double, RunDiagnostics&)>& select,
    const std::function<void(const Point&, double, double)>& learn,
    NoiseStreams& streams) {
  RegretTrace trace;
  trace.algorithm = cfg.algorithm;
  trace.seed = cfg.seed;
  const auto& support = env.support();
  double cum = 0.0;

  std::mt19937_64 init_eng(substream_seed(cfg.seed, 0x696e69747261636bULL));

  for (int t = 1; t <= cfg.horizon; ++t) {
    try {
      std::size_t idx;
      if (cfg.random_init && t == 1) {
        std::uniform_int_distribution<std::size_t> pick(0, support.size() - 1);
        idx = pick(init_eng);
      } else {
        const double beta =
            cfg.beta.value(t, cfg.env.domain.dim, cfg.env.domain.side);
        idx = select(t, beta, trace.diag);
      }

      TraceRound round;
      round.t = t;
      round.x = support[idx];
      round.y = env.query_index(idx, Task::truth, streams);
      if (uses_pred_online)
        round.y_ml = env.query_index(idx, Task::prediction, streams,
                                     QueryPhase::online);
      round.f_x = env.f_at(idx);
      round.inst_regret = env.ground().f_star - round.f_x;
      cum += round.inst_regret;
      round.cum_regret = cum;
      learn(round.x, round.y, round.y_ml);
      trace.rounds.push_back(std::move(round));
    } catch (const std::exception& e) {
      trace.failure = std::string("round ") + std::to_string(t) + ": " +
                      e.what();
      break;
    }
  }
  return trace;
}

// Highest mu + sqrt(beta) sigma, lowest index on ties — the plain UCB rule
// shared by the vanilla and naive baselines.
inline std::size_t argmax_ucb(const std::vector<TaskMoments>& moments,
                              double beta) {
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  const double root_beta = std::sqrt(beta);
  for (std::size_t i = 0; i < moments.size(); ++i) {
    const double v = moments[i].mu + root_beta * moments[i].sigma;
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

inline void note_summaries(const std::vector<BivariateSummary>& sums,
                           double signal_var, RunDiagnostics& diag) {
  const double tau = 1e-12 * signal_var;
  for (const auto& s : sums) {
    diag.max_pa_std_excess =
        std::max(diag.max_pa_std_excess, pa_std(s) - s.sigma_true);
    diag.max_mlall_std_excess =
        std::max(diag.max_mlall_std_excess, s.sigma_ml_all - s.sigma_ml);
    if (s.sigma_ml >= tau) {
      const double ratio = s.sigma_ml_all / s.sigma_ml;
      diag.max_ratio_sq =
          std::max(diag.max_ratio_sq, std::clamp(ratio * ratio, 0.0, 1.0));
    }
    ++diag.summaries_seen;
  }
}

}  // namespace detail

// Offline net stage into the joint model, then T rounds of adjusted-UCB
// selection with paired oracle observation.
inline RegretTrace run_pa_gp_ucb(const RunConfig& cfg, const Environment& env) {
  cfg.validate();
  if (cfg.algorithm != AlgorithmKind::pa)
    throw InputError("run_pa_gp_ucb: cfg.algorithm must be pa");
  NoiseStreams streams(cfg.seed);
  JointModel model(cfg.kernel, cfg.env.domain, cfg.coupling,
                   detail::model_noise(cfg.env.noise));
  try {
    for (const auto& batch : detail::collect_offline(cfg, env, streams))
      model.observe_offline(env.support()[batch.support_index], batch.values);
  } catch (const std::exception& e) {
    RegretTrace trace;
    trace.algorithm = cfg.algorithm;
    trace.seed = cfg.seed;
    trace.failure = std::string("offline stage: ") + e.what();
    return trace;
  }

  const auto& candidates = env.support();
  auto select = [&](int, double beta, RunDiagnostics& diag) {
    const auto sums = model.summaries(candidates);
    detail::note_summaries(sums, cfg.kernel.signal_var, diag);
    return select_from_summaries(sums, beta).index;
  };
  auto learn = [&](const Point& x, double y, double y_ml) {
    model.observe_online(x, y, y_ml);
  };
  return detail::run_loop(cfg, env, /*uses_pred_online=*/true, select, learn,
                          streams);
}

// Plain UCB on a truth-only GP; the offline plan is ignored entirely.
inline RegretTrace run_vanilla_gp_ucb(const RunConfig& cfg,
                                      const Environment& env) {
  cfg.validate();
  if (cfg.algorithm != AlgorithmKind::vanilla)
    throw InputError("run_vanilla_gp_ucb: cfg.algorithm must be vanilla");
  NoiseStreams streams(cfg.seed);
  SingleTaskGp gp(cfg.kernel, cfg.env.domain,
                  detail::model_noise(cfg.env.noise).eta_sq);

  const auto& candidates = env.support();
  auto select = [&](int, double beta, RunDiagnostics&) {
    return detail::argmax_ucb(gp.moments(candidates), beta);
  };
  auto learn = [&](const Point& x, double y, double) { gp.observe(x, y); };
  return detail::run_loop(cfg, env, /*uses_pred_online=*/false, select, learn,
                          streams);
}

// The two uncorrected baselines: truth-task marginal UCB over either the
// offline-plus-truth model or the fully augmented model.
inline RegretTrace run_naive(const RunConfig& cfg, const Environment& env) {
  cfg.validate();
  const auto& candidates = env.support();
  NoiseStreams streams(cfg.seed);

  if (cfg.algorithm == AlgorithmKind::naive_offline) {
    NaiveOfflineModel model(cfg.kernel, cfg.env.domain, cfg.coupling,
                            detail::model_noise(cfg.env.noise));
    try {
      for (const auto& batch : detail::collect_offline(cfg, env, streams))
        model.observe_offline(env.support()[batch.support_index], batch.values);
    } catch (const std::exception& e) {
      RegretTrace trace;
      trace.algorithm = cfg.algorithm;
      trace.seed = cfg.seed;
      trace.failure = std::string("offline stage: ") + e.what();
      return trace;
    }
    auto select = [&](int, double beta, RunDiagnostics&) {
      return detail::argmax_ucb(model.truth_moments(candidates), beta);
    };
    auto learn = [&](const Point& x, double y, double) {
      model.observe_online_truth(x, y);
    };
    return detail::run_loop(cfg, env, /*uses_pred_online=*/false, select,
                            learn, streams);
  }

  if (cfg.algorithm != AlgorithmKind::naive_offline_online)
    throw InputError("run_naive: cfg.algorithm must be a naive variant");

  JointModel model(cfg.kernel, cfg.env.domain, cfg.coupling,
                   detail::model_noise(cfg.env.noise));
  try {
    for (const auto& batch : detail::collect_offline(cfg, env, streams))
      model.observe_offline(env.support()[batch.support_index], batch.values);
  } catch (const std::exception& e) {
    RegretTrace trace;
    trace.algorithm = cfg.algorithm;
    trace.seed = cfg.seed;
    trace.failure = std::string("offline stage: ") + e.what();
    return trace;
  }
  auto select = [&](int, double beta, RunDiagnostics&) {
    return detail::argmax_ucb(model.augmented_task(Task::truth, candidates),
                              beta);
  };
  auto learn = [&](const Point& x, double y, double y_ml) {
    model.observe_online(x, y, y_ml);
  };
  return detail::run_loop(cfg, env, /*uses_pred_online=*/true, select, learn,
                          streams);
}

inline RegretTrace run_algorithm(const RunConfig& cfg, const Environment& env) {
  switch (cfg.algorithm) {
    case AlgorithmKind::pa: return run_pa_gp_ucb(cfg, env);
    case AlgorithmKind::vanilla: return run_vanilla_gp_ucb(cfg, env);
    case AlgorithmKind::naive_offline:
    case AlgorithmKind::naive_offline_online: return run_naive(cfg, env);
  }
  throw InputError("run_algorithm: unknown algorithm");
}

// Exact table-lookup regret recomputation for a finished trace.
struct RegretSeries {
  std::vector<double> inst;
  double total = 0.0;
};

inline RegretSeries regret(const RegretTrace& trace, const Environment& env) {
  RegretSeries series;
  for (const auto& round : trace.rounds) {
    const std::size_t idx = env.require_index(round.x);
    const double r = env.ground().f_star - env.f_at(idx);
    series.inst.push_back(r);
    series.total += r;
  }
  return series;
}

}  // namespace pagp
