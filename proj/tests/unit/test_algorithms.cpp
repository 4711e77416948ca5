#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pagp/algorithms.hpp"

using namespace pagp;

namespace {

Point pt1(double x) {
  Point p(1);
  p[0] = x;
  return p;
}

RunConfig base_config(double model_rho, double env_rho, std::uint64_t seed) {
  RunConfig cfg;
  cfg.env.kind = EnvKind::synthetic;
  cfg.env.domain = Domain{1, 1.0};
  cfg.env.noise = NoiseSpec{0.01, 0.01};
  cfg.env.seed = seed;
  cfg.kernel = KernelSpec{.length_scale = 0.2, .signal_var = 1.0};
  cfg.coupling = TaskCoupling{model_rho};
  cfg.env_rho = env_rho;
  cfg.horizon = 20;
  cfg.seed = seed;
  cfg.grid_per_dim = 64;
  return cfg;
}

Environment env_for(const RunConfig& cfg) {
  return make_synthetic_env(cfg.env, cfg.kernel, cfg.env_rho,
                            cfg.grid_per_dim);
}

std::vector<std::size_t> chosen_indices(const RegretTrace& trace,
                                        const Environment& env) {
  std::vector<std::size_t> idx;
  for (const auto& r : trace.rounds) idx.push_back(env.require_index(r.x));
  return idx;
}

}  // namespace

TEST_CASE("round one with an empty prior picks the first grid point") {
  for (auto kind : {AlgorithmKind::pa, AlgorithmKind::vanilla,
                    AlgorithmKind::naive_offline,
                    AlgorithmKind::naive_offline_online}) {
    auto cfg = base_config(0.5, 0.8, 3);
    cfg.algorithm = kind;
    cfg.horizon = 1;
    cfg.net = std::nullopt;
    const auto env = env_for(cfg);
    const auto trace = run_algorithm(cfg, env);
    REQUIRE(!trace.failure.has_value());
    REQUIRE(trace.rounds.size() == 1);
    INFO("algorithm " << algorithm_name(kind));
    REQUIRE(env.require_index(trace.rounds[0].x) == 0);
  }
}

TEST_CASE("decoupled runs ignore the offline stage field by field") {
  for (std::uint64_t seed : {1ULL, 5ULL, 9ULL}) {
    auto with_net = base_config(0.0, 0.0, seed);
    with_net.algorithm = AlgorithmKind::pa;
    with_net.net = NetPlan{0.1, 5};
    auto without_net = with_net;
    without_net.net = std::nullopt;
    const auto env = env_for(with_net);
    const auto a = run_pa_gp_ucb(with_net, env);
    const auto b = run_pa_gp_ucb(without_net, env);
    REQUIRE(!a.failure.has_value());
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (std::size_t i = 0; i < a.rounds.size(); ++i) {
      REQUIRE(std::abs(a.rounds[i].x[0] - b.rounds[i].x[0]) < 1e-9);
      REQUIRE(std::abs(a.rounds[i].y - b.rounds[i].y) < 1e-9);
      REQUIRE(std::abs(a.rounds[i].y_ml - b.rounds[i].y_ml) < 1e-9);
      REQUIRE(std::abs(a.rounds[i].f_x - b.rounds[i].f_x) < 1e-9);
      REQUIRE(std::abs(a.rounds[i].cum_regret - b.rounds[i].cum_regret) <
              1e-9);
    }
  }
}

TEST_CASE("decoupled model makes all four strategies choose alike") {
  for (std::uint64_t seed : {2ULL, 7ULL, 11ULL}) {
    auto cfg = base_config(0.0, 0.5, seed);
    cfg.horizon = 25;
    cfg.net = NetPlan{0.1, 3};
    const auto env = env_for(cfg);

    cfg.algorithm = AlgorithmKind::pa;
    const auto pa = chosen_indices(run_algorithm(cfg, env), env);
    cfg.algorithm = AlgorithmKind::vanilla;
    const auto vanilla = chosen_indices(run_algorithm(cfg, env), env);
    cfg.algorithm = AlgorithmKind::naive_offline;
    const auto n_off = chosen_indices(run_algorithm(cfg, env), env);
    cfg.algorithm = AlgorithmKind::naive_offline_online;
    const auto n_oo = chosen_indices(run_algorithm(cfg, env), env);

    REQUIRE(pa == vanilla);
    REQUIRE(pa == n_off);
    REQUIRE(pa == n_oo);
  }
}

TEST_CASE("with no offline data the model pairs coincide") {
  for (std::uint64_t seed : {4ULL, 8ULL}) {
    auto cfg = base_config(0.7, 0.7, seed);
    cfg.net = std::nullopt;
    const auto env = env_for(cfg);

    cfg.algorithm = AlgorithmKind::pa;
    const auto pa = chosen_indices(run_algorithm(cfg, env), env);
    cfg.algorithm = AlgorithmKind::naive_offline_online;
    const auto n_oo = chosen_indices(run_algorithm(cfg, env), env);
    REQUIRE(pa == n_oo);

    cfg.algorithm = AlgorithmKind::vanilla;
    const auto vanilla = chosen_indices(run_algorithm(cfg, env), env);
    cfg.algorithm = AlgorithmKind::naive_offline;
    const auto n_off = chosen_indices(run_algorithm(cfg, env), env);
    REQUIRE(vanilla == n_off);
  }
}

TEST_CASE("noise-free constant surface gives zero regret everywhere") {
  EnvironmentSpec spec;
  spec.kind = EnvKind::synthetic;
  spec.domain = Domain{1, 1.0};
  spec.noise = NoiseSpec{0.0, 0.0};
  spec.seed = 1;
  const auto grid = uniform_grid(spec.domain, 32);
  GroundPair pair;
  pair.f_table = Eigen::VectorXd::Constant(32, 0.5);
  pair.f_ml_table = Eigen::VectorXd::Constant(32, 0.25);
  recompute_star(pair, grid);
  const Environment env(spec, grid, pair);

  RunConfig cfg;
  cfg.env = spec;
  cfg.kernel = KernelSpec{.length_scale = 0.2, .signal_var = 1.0};
  cfg.algorithm = AlgorithmKind::vanilla;
  cfg.horizon = 10;
  cfg.grid_per_dim = 32;
  const auto trace = run_vanilla_gp_ucb(cfg, env);
  REQUIRE(!trace.failure.has_value());
  REQUIRE(trace.rounds.size() == 10);
  for (const auto& r : trace.rounds) {
    REQUIRE(r.inst_regret == 0.0);
    REQUIRE(r.y == r.f_x);  // noise-free queries return the table value
  }
  REQUIRE(trace.final_cum_regret() == 0.0);
}

TEST_CASE("identical configuration reproduces the trace bit for bit") {
  auto cfg = base_config(0.8, 0.8, 13);
  cfg.algorithm = AlgorithmKind::pa;
  cfg.net = NetPlan{0.1, 4};
  cfg.horizon = 15;
  const auto env = env_for(cfg);
  const auto a = run_pa_gp_ucb(cfg, env);
  const auto b = run_pa_gp_ucb(cfg, env);
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t i = 0; i < a.rounds.size(); ++i) {
    REQUIRE(a.rounds[i].x[0] == b.rounds[i].x[0]);
    REQUIRE(a.rounds[i].y == b.rounds[i].y);
    REQUIRE(a.rounds[i].y_ml == b.rounds[i].y_ml);
    REQUIRE(a.rounds[i].cum_regret == b.rounds[i].cum_regret);
  }
  // A different seed must actually change something.
  auto other = cfg;
  other.seed = 14;
  other.env.seed = 14;
  const auto c = run_pa_gp_ucb(other, env_for(other));
  bool any_diff = false;
  for (std::size_t i = 0; i < std::min(c.rounds.size(), a.rounds.size()); ++i)
    any_diff = any_diff || c.rounds[i].y != a.rounds[i].y;
  REQUIRE(any_diff);
}

TEST_CASE("traces are monotone with bounded instantaneous regret") {
  for (auto kind : {AlgorithmKind::pa, AlgorithmKind::vanilla,
                    AlgorithmKind::naive_offline,
                    AlgorithmKind::naive_offline_online}) {
    auto cfg = base_config(0.8, 0.8, 21);
    cfg.algorithm = kind;
    cfg.net = NetPlan{0.125, 3};
    const auto env = env_for(cfg);
    const auto trace = run_algorithm(cfg, env);
    REQUIRE(!trace.failure.has_value());
    const double worst =
        env.ground().f_star - env.ground().f_table.minCoeff();
    double prev = 0.0;
    for (const auto& r : trace.rounds) {
      REQUIRE(r.inst_regret >= 0.0);
      REQUIRE(r.inst_regret <= worst + 1e-12);
      REQUIRE(r.cum_regret >= prev - 1e-12);
      prev = r.cum_regret;
    }
    // Prediction column populated exactly when the strategy queries it.
    const bool wants_pred = kind == AlgorithmKind::pa ||
                            kind == AlgorithmKind::naive_offline_online;
    for (const auto& r : trace.rounds)
      REQUIRE(std::isfinite(r.y_ml) == wants_pred);
  }
}

TEST_CASE("regret recomputation agrees with the recorded trace") {
  auto cfg = base_config(0.8, 0.8, 31);
  cfg.algorithm = AlgorithmKind::pa;
  cfg.net = NetPlan{0.25, 2};
  cfg.horizon = 10;
  const auto env = env_for(cfg);
  const auto trace = run_pa_gp_ucb(cfg, env);
  const auto series = regret(trace, env);
  REQUIRE(series.inst.size() == trace.rounds.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.inst.size(); ++i) {
    REQUIRE(series.inst[i] == trace.rounds[i].inst_regret);
    acc += series.inst[i];
  }
  REQUIRE(series.total == Catch::Approx(acc).margin(0.0));
  REQUIRE(series.total ==
          Catch::Approx(trace.final_cum_regret()).margin(1e-12));
}

TEST_CASE("regret lookup covers the boundary cases") {
  auto cfg = base_config(0.8, 0.8, 33);
  const auto env = env_for(cfg);

  RegretTrace at_star;
  at_star.rounds.resize(3);
  for (auto& r : at_star.rounds) r.x = env.ground().x_star;
  REQUIRE(regret(at_star, env).total == 0.0);

  Eigen::Index argmin = 0;
  env.ground().f_table.minCoeff(&argmin);
  RegretTrace at_min;
  at_min.rounds.resize(1);
  at_min.rounds[0].x = env.support()[static_cast<std::size_t>(argmin)];
  REQUIRE(regret(at_min, env).total ==
          Catch::Approx(env.ground().f_star -
                        env.ground().f_table.minCoeff()).margin(1e-15));

  RegretTrace off_grid;
  off_grid.rounds.resize(1);
  off_grid.rounds[0].x = pt1(0.1234567);
  REQUIRE_THROWS_AS(regret(off_grid, env), InputError);
}

TEST_CASE("offline data tightens the tracked width ratio") {
  auto cfg = base_config(0.8, 0.8, 41);
  cfg.algorithm = AlgorithmKind::pa;
  cfg.net = std::nullopt;
  const auto env = env_for(cfg);
  const auto bare = run_pa_gp_ucb(cfg, env);
  REQUIRE(bare.diag.max_ratio_sq == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(bare.diag.max_pa_std_excess <= 1e-10);
  REQUIRE(bare.diag.max_mlall_std_excess <= 1e-8);

  cfg.net = NetPlan{0.05, 10};
  const auto rich = run_pa_gp_ucb(cfg, env);
  REQUIRE(rich.diag.max_ratio_sq < 1.0);
  REQUIRE(rich.diag.max_ratio_sq > 0.0);
  REQUIRE(rich.diag.max_pa_std_excess <= 1e-10);
  REQUIRE(rich.diag.max_mlall_std_excess <= 1e-8);
  REQUIRE(rich.diag.summaries_seen ==
          static_cast<std::size_t>(cfg.horizon) * env.support().size());
}

TEST_CASE("random initialization changes only the first round") {
  auto cfg = base_config(0.8, 0.8, 17);
  cfg.algorithm = AlgorithmKind::vanilla;
  cfg.horizon = 3;
  const auto env = env_for(cfg);
  const auto plain = run_vanilla_gp_ucb(cfg, env);
  cfg.random_init = true;
  const auto randomized = run_vanilla_gp_ucb(cfg, env);
  const auto randomized2 = run_vanilla_gp_ucb(cfg, env);
  REQUIRE(env.require_index(plain.rounds[0].x) == 0);
  REQUIRE(randomized.rounds[0].x[0] == randomized2.rounds[0].x[0]);
  REQUIRE(randomized.rounds[0].x[0] != plain.rounds[0].x[0]);
}

TEST_CASE("mid-run errors truncate the trace with a marker") {
  auto cfg = base_config(0.8, 0.8, 51);
  cfg.algorithm = AlgorithmKind::pa;
  cfg.beta.mode = BetaConfig::Mode::fixed;
  cfg.beta.fixed_beta = -1.0;  // rejected at selection time
  const auto env = env_for(cfg);
  const auto trace = run_pa_gp_ucb(cfg, env);
  REQUIRE(trace.failure.has_value());
  REQUIRE(trace.rounds.empty());
  REQUIRE(trace.failure->find("round 1") != std::string::npos);
}

TEST_CASE("configuration validation rejects malformed runs") {
  auto cfg = base_config(0.8, 0.8, 1);
  cfg.horizon = 0;
  REQUIRE_THROWS_AS(cfg.validate(), InputError);
  cfg = base_config(0.8, 0.8, 1);
  cfg.net = NetPlan{-0.1, 3};
  REQUIRE_THROWS_AS(cfg.validate(), InputError);
  cfg = base_config(0.8, 0.8, 1);
  cfg.algorithm = AlgorithmKind::vanilla;
  REQUIRE_THROWS_AS(run_pa_gp_ucb(cfg, env_for(cfg)), InputError);
  REQUIRE_THROWS_AS(algorithm_from_name("unknown"), InputError);
  REQUIRE(algorithm_from_name("naive_offline_online") ==
          AlgorithmKind::naive_offline_online);
}
