// Command-line driver: single runs, ensembles, offline-design and bound
// calculators, paired-sample correlation, and nearest-arm lookup.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pagp/bench.hpp"
#include "pagp/config.hpp"

#include <CLI11.hpp>

namespace {

using namespace pagp;

Point parse_point_arg(const std::string& text) {
  std::vector<double> coords;
  std::string field;
  std::istringstream is(text);
  while (std::getline(is, field, ','))
    coords.push_back(detail::parse_double_field(detail::trim(field),
                                                "coordinate", 1));
  if (coords.empty()) throw InputError("expected comma-separated coordinates");
  Point p(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i)
    p[static_cast<Eigen::Index>(i)] = coords[i];
  return p;
}

std::vector<std::uint64_t> make_seeds(std::uint64_t start, int count,
                                      const std::string& list) {
  std::vector<std::uint64_t> seeds;
  if (!list.empty()) {
    std::string field;
    std::istringstream is(list);
    while (std::getline(is, field, ',')) {
      const double v =
          detail::parse_double_field(detail::trim(field), "seed", 1);
      if (v < 0 || v != std::floor(v))
        throw InputError("seed list entries must be nonnegative integers");
      seeds.push_back(static_cast<std::uint64_t>(v));
    }
    return seeds;
  }
  if (count < 1) throw InputError("--seeds must be >= 1");
  for (int i = 0; i < count; ++i)
    seeds.push_back(start + static_cast<std::uint64_t>(i));
  return seeds;
}

std::vector<AlgorithmKind> parse_algorithms(const std::string& list) {
  std::vector<AlgorithmKind> out;
  std::string field;
  std::istringstream is(list);
  while (std::getline(is, field, ','))
    out.push_back(algorithm_from_name(detail::trim(field)));
  if (out.empty()) throw InputError("expected at least one algorithm");
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string kv(const std::string& key, double value) {
  return key + "=" + detail::fmt_g12(value) + "\n";
}

struct CommonOverrides {
  std::string config_path;
  std::optional<std::string> algorithm;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::optional<int> grid;
};

RunConfig assemble_config(const CommonOverrides& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = load_run_config(o.config_path);
  if (o.algorithm) cfg.algorithm = algorithm_from_name(*o.algorithm);
  if (o.seed) cfg.seed = *o.seed;
  if (o.horizon) cfg.horizon = *o.horizon;
  if (o.grid) cfg.grid_per_dim = *o.grid;
  cfg.validate();
  return cfg;
}

int cmd_run(const CommonOverrides& o, const std::string& out_path,
            std::string run_id) {
  RunConfig cfg = assemble_config(o);
  cfg.env.seed = cfg.seed;
  const Environment env = build_environment(cfg);
  cfg = finalize_for_env(cfg, env);
  const RegretTrace trace = run_algorithm(cfg, env);

  if (run_id.empty())
    run_id = std::string(algorithm_name(cfg.algorithm)) + "-s" +
             std::to_string(cfg.seed);
  std::ostringstream csv;
  write_trace_csv(csv, trace, cfg.env.domain.dim, run_id);
  if (out_path.empty())
    std::cout << csv.str();
  else
    write_text_file(out_path, csv.str());

  std::cerr << "algorithm=" << algorithm_name(cfg.algorithm)
            << " seed=" << cfg.seed << " rho="
            << detail::fmt_g12(cfg.coupling.rho)
            << " rounds=" << trace.rounds.size() << " final_cum_regret="
            << detail::fmt_g12(trace.final_cum_regret()) << "\n";
  if (trace.failure) {
    std::cerr << "failure: " << *trace.failure << "\n";
    return 1;
  }
  return 0;
}

int cmd_bench(const CommonOverrides& o, std::uint64_t seed_start,
              int seed_count, const std::string& seed_list,
              const std::string& algo_list, int threads,
              const std::string& out_path, const std::string& svg_path) {
  const RunConfig cfg = assemble_config(o);
  const auto seeds = make_seeds(seed_start, seed_count, seed_list);
  const auto algos = parse_algorithms(algo_list);
  const EnsembleResult res = run_ensemble(cfg, seeds, algos, threads);

  std::ostringstream csv;
  write_aggregate_csv(csv, res);
  if (out_path.empty())
    std::cout << csv.str();
  else
    write_text_file(out_path, csv.str());
  if (!svg_path.empty()) write_text_file(svg_path, render_regret_svg(res));

  for (const auto& s : res.series)
    if (!s.points.empty())
      std::cerr << algorithm_name(s.algorithm) << ": mean final regret "
                << detail::fmt_g12(s.points.back().mean) << " over "
                << s.points.back().n << " runs\n";
  for (const auto& f : res.failures) std::cerr << "failed: " << f << "\n";
  return res.failures.empty() ? 0 : 1;
}

int cmd_net_design(double R, int T, double eta_sq, double eta_ml_sq,
                   double rho, double k_min, double delta, double a, double b,
                   int d) {
  const auto design = sufficient_design(R, T, NoiseSpec{eta_sq, eta_ml_sq},
                                        rho, k_min, delta, a, b, d);
  std::cout << kv("sigma_min_sq", design.sigma_min_sq)
            << kv("epsilon_max", design.epsilon_max)
            << kv("n_min_raw", design.n_min_raw)
            << "n_min=" << design.n_min << "\n";
  return 0;
}

int cmd_bounds(double T, double rho, double eta_sq, double eta_ml_sq, double R,
               int d, double side, double delta, double a, double b,
               std::optional<double> gamma, int greedy_grid) {
  const NoiseSpec noise{eta_sq, eta_ml_sq};
  const auto c = theory_constants(rho, noise);
  const double beta_T =
      beta_theoretical(static_cast<int>(T), d, delta, a, b, side);

  double gamma_T;
  if (gamma) {
    gamma_T = *gamma;
  } else {
    const KernelSpec kernel{};  // calculator default surface model
    const Domain dom{d, side};
    const auto grid = uniform_grid(dom, greedy_grid);
    const int steps = std::min<int>(static_cast<int>(T),
                                    static_cast<int>(grid.size()));
    gamma_T = info_gain_greedy(kernel, eta_sq, grid, steps);
  }

  std::cout << kv("c1", c.c1) << kv("c2", c.c2);
  if (c.r_star_defined)
    std::cout << kv("r_star", c.r_star);
  else
    std::cout << "r_star=undefined (" << c.note << ")\n";
  std::cout << kv("ratio_factor", ratio_factor(R, rho))
            << kv("beta_T", beta_T) << kv("gamma_T", gamma_T)
            << kv("pa_bound",
                  pa_regret_bound(T, beta_T, c.c1, R, rho, gamma_T))
            << kv("vanilla_bound",
                  vanilla_regret_bound(T, beta_T, c.c2, gamma_T));
  return 0;
}

int cmd_rhohat(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::pair<double, double>> pairs;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
      line.pop_back();
    if (line.empty()) continue;
    if (row == 1 && line == "f,f_ml") continue;  // optional header
    const auto fields = detail::split_simple_csv(line);
    if (fields.size() != 2)
      throw ParseError("rhohat: expected two comma-separated values", row);
    pairs.emplace_back(detail::parse_double_field(fields[0], "f", row),
                       detail::parse_double_field(fields[1], "f_ml", row));
  }
  std::cout << kv("rho_hat", estimate_rho_hat(pairs));
  return 0;
}

int cmd_arms_near(const std::string& table_path, const std::string& x_text,
                  std::size_t k) {
  const ArmTable table = load_arm_table(table_path);
  const Point x = parse_point_arg(x_text);
  for (const auto& arm : nearest_arms(table, x, k))
    std::cout << arm.arm_id << "," << detail::fmt_g12(arm.distance) << ","
              << arm.text << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Bandit optimization with a cheap auxiliary prediction oracle: "
      "runs, ensembles, offline-design and bound calculators."};
  app.require_subcommand(1);

  CommonOverrides common;
  std::string out_path, svg_path, run_id;

  auto* run = app.add_subcommand("run", "Single run, trace CSV output");
  run->add_option("--config", common.config_path, "key=value config file");
  run->add_option("--algorithm", common.algorithm,
                  "pa|vanilla|naive_offline|naive_offline_online");
  run->add_option("--seed", common.seed, "run seed");
  run->add_option("--horizon", common.horizon, "number of online rounds");
  run->add_option("--grid", common.grid, "candidate grid points per dimension");
  run->add_option("--out", out_path, "trace CSV path (default: stdout)");
  run->add_option("--run-id", run_id, "run_id column value");

  std::uint64_t seed_start = 1;
  int seed_count = 10;
  std::string seed_list, algo_list = "pa,vanilla";
  int threads = 0;
  auto* bench =
      app.add_subcommand("bench", "Ensemble over seeds, aggregate CSV output");
  bench->add_option("--config", common.config_path, "key=value config file");
  bench->add_option("--horizon", common.horizon, "number of online rounds");
  bench->add_option("--grid", common.grid,
                    "candidate grid points per dimension");
  bench->add_option("--seeds", seed_count, "number of consecutive seeds");
  bench->add_option("--seed-start", seed_start, "first seed");
  bench->add_option("--seed-list", seed_list,
                    "explicit comma-separated seeds (overrides --seeds)");
  bench->add_option("--algorithms", algo_list,
                    "comma-separated algorithm names");
  bench->add_option("--threads", threads, "worker threads (0 = auto)");
  bench->add_option("--out", out_path, "aggregate CSV path (default: stdout)");
  bench->add_option("--svg", svg_path, "also render an SVG regret plot");

  double nd_R = 0.5, nd_eta_sq = 1.0, nd_eta_ml_sq = 1.0, nd_rho = 0.0,
         nd_k_min = 1.0, nd_delta = 0.1, nd_a = 1.0, nd_b = 1.0;
  int nd_T = 1, nd_d = 1;
  auto* net_design = app.add_subcommand(
      "net-design", "Offline stage sizing for a target width ratio");
  net_design->add_option("--R", nd_R, "target squared width ratio in (0, 1]")
      ->required();
  net_design->add_option("--T", nd_T, "online horizon")->required();
  net_design->add_option("--eta-sq", nd_eta_sq, "truth noise variance");
  net_design->add_option("--eta-ml-sq", nd_eta_ml_sq,
                         "prediction noise variance");
  net_design->add_option("--rho", nd_rho, "task coupling");
  net_design->add_option("--k-min", nd_k_min, "minimum kernel value on the net");
  net_design->add_option("--delta", nd_delta, "confidence level");
  net_design->add_option("--a", nd_a, "smoothness constant a");
  net_design->add_option("--b", nd_b, "smoothness constant b");
  net_design->add_option("--d", nd_d, "input dimension");

  double bd_T = 100, bd_rho = 0.8, bd_eta_sq = 0.01, bd_eta_ml_sq = 0.01,
         bd_R = 1.0, bd_side = 1.0, bd_delta = 0.1, bd_a = 1.0, bd_b = 1.0;
  int bd_d = 1, bd_grid = 64;
  std::optional<double> bd_gamma;
  auto* bounds = app.add_subcommand(
      "bounds", "Theoretical constants and cumulative-regret bounds");
  bounds->add_option("--T", bd_T, "horizon");
  bounds->add_option("--rho", bd_rho, "task coupling");
  bounds->add_option("--eta-sq", bd_eta_sq, "truth noise variance");
  bounds->add_option("--eta-ml-sq", bd_eta_ml_sq, "prediction noise variance");
  bounds->add_option("--R", bd_R, "achieved squared width ratio");
  bounds->add_option("--d", bd_d, "input dimension");
  bounds->add_option("--side", bd_side, "domain side length");
  bounds->add_option("--delta", bd_delta, "confidence level");
  bounds->add_option("--a", bd_a, "smoothness constant a");
  bounds->add_option("--b", bd_b, "smoothness constant b");
  bounds->add_option("--gamma", bd_gamma,
                     "explicit information-gain value (skips the greedy "
                     "surrogate)");
  bounds->add_option("--greedy-grid", bd_grid,
                     "grid points per dimension for the greedy surrogate");

  std::string rh_path;
  auto* rhohat = app.add_subcommand(
      "rhohat", "Pearson correlation of paired samples from a CSV file");
  rhohat->add_option("file", rh_path, "CSV of f,f_ml pairs")->required();

  auto* arms = app.add_subcommand("arms", "Arm-table utilities");
  arms->require_subcommand(1);
  std::string arms_table, arms_x;
  std::size_t arms_k = 6;
  auto* near = arms->add_subcommand("near", "k nearest arms to a point");
  near->add_option("--table", arms_table, "arm table CSV")->required();
  near->add_option("--x", arms_x, "query point, comma-separated coordinates")
      ->required();
  near->add_option("--k", arms_k, "number of arms");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(common, out_path, run_id);
    if (bench->parsed())
      return cmd_bench(common, seed_start, seed_count, seed_list, algo_list,
                       threads, out_path, svg_path);
    if (net_design->parsed())
      return cmd_net_design(nd_R, nd_T, nd_eta_sq, nd_eta_ml_sq, nd_rho,
                            nd_k_min, nd_delta, nd_a, nd_b, nd_d);
    if (bounds->parsed())
      return cmd_bounds(bd_T, bd_rho, bd_eta_sq, bd_eta_ml_sq, bd_R, bd_d,
                        bd_side, bd_delta, bd_a, bd_b, bd_gamma, bd_grid);
    if (rhohat->parsed()) return cmd_rhohat(rh_path);
    if (near->parsed()) return cmd_arms_near(arms_table, arms_x, arms_k);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
