#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pagp/kernel.hpp"
#include "pagp/linalg.hpp"
#include "pagp/types.hpp"

namespace pagp {

enum class EnvKind { synthetic, finite_arm, embedded_grid };

inline const char* env_kind_name(EnvKind k) {
  switch (k) {
    case EnvKind::synthetic: return "synthetic";
    case EnvKind::finite_arm: return "finite_arm";
    case EnvKind::embedded_grid: return "embedded_grid";
  }
  return "?";
}

// Axis-aligned flip region; empty() regions leave the tables untouched.
struct FlipBox {
  Point lo;
  Point hi;

  bool contains(const Point& x) const {
    for (Eigen::Index k = 0; k < x.size(); ++k)
      if (x[k] < lo[k] || x[k] > hi[k]) return false;
    return true;
  }
};

struct EnvironmentSpec {
  EnvKind kind = EnvKind::synthetic;
  Domain domain{1, 1.0};
  NoiseSpec noise{0.01, 0.01};
  std::uint64_t seed = 1;
  // synthetic only
  std::optional<FlipBox> sign_flip;
  // finite_arm / embedded_grid only
  std::string arm_table_path;
  double planted_corr = 0.66;

  void validate() const {
    domain.validate();
    noise.validate_for_environment();
    const bool tabular = kind != EnvKind::synthetic;
    if (tabular && arm_table_path.empty())
      throw InputError(std::string("EnvironmentSpec: kind ") +
                       env_kind_name(kind) + " requires arm_table_path");
    if (!tabular && !arm_table_path.empty())
      throw InputError("EnvironmentSpec: arm_table_path is a finite_arm / "
                       "embedded_grid field");
    if (tabular && sign_flip)
      throw InputError("EnvironmentSpec: sign_flip is a synthetic-only field");
    if (tabular && !(std::abs(planted_corr) <= 1.0))
      throw InputError("EnvironmentSpec: planted_corr must lie in [-1, 1]");
    if (sign_flip) {
      if (sign_flip->lo.size() != domain.dim || sign_flip->hi.size() != domain.dim)
        throw InputError("EnvironmentSpec: sign_flip box dimension mismatch");
      for (int k = 0; k < domain.dim; ++k) {
        if (sign_flip->lo[k] < -1e-12 || sign_flip->hi[k] > domain.side + 1e-12)
          throw InputError("EnvironmentSpec: sign_flip box must lie in the domain");
      }
    }
  }
};

// Ground-truth tables for one instance: both reward surfaces on a fixed
// support set, plus the location and value of the truth optimum.
struct GroundPair {
  Eigen::VectorXd f_table;
  Eigen::VectorXd f_ml_table;
  std::size_t star_index = 0;
  Point x_star;
  double f_star = 0.0;
};

inline void recompute_star(GroundPair& pair, const std::vector<Point>& support) {
  if (support.empty() || pair.f_table.size() == 0)
    throw InputError("GroundPair: empty support");
  std::size_t best = 0;
  for (std::size_t i = 1; i < support.size(); ++i)
    if (pair.f_table[static_cast<Eigen::Index>(i)] >
        pair.f_table[static_cast<Eigen::Index>(best)])
      best = i;  // strict: first index wins ties
  pair.star_index = best;
  pair.x_star = support[best];
  pair.f_star = pair.f_table[static_cast<Eigen::Index>(best)];
}

// Evenly spaced cell-center grid over the box, per_dim points per axis.
inline std::vector<Point> uniform_grid(const Domain& domain, int per_dim) {
  domain.validate();
  if (per_dim < 1) throw InputError("uniform_grid: per_dim must be >= 1");
  double total = 1.0;
  for (int k = 0; k < domain.dim; ++k) total *= per_dim;
  if (total > 16384.0)
    throw InputError("uniform_grid: more than 16384 grid points requested");
  const auto n = static_cast<std::size_t>(total);
  std::vector<Point> grid(n, Point(domain.dim));
  std::vector<int> idx(static_cast<std::size_t>(domain.dim), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < domain.dim; ++k)
      grid[i][k] = (idx[static_cast<std::size_t>(k)] + 0.5) * domain.side /
                   per_dim;
    for (int k = domain.dim - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < per_dim) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return grid;
}

// Draws a correlated pair of surfaces from GP(0, k) on the support points:
// f and an independent g, combined as f_ml = rho f + sqrt(1-rho^2) g.
// Deterministic given seed.
inline GroundPair sample_synthetic_pair(const KernelSpec& kernel, double rho,
                                        const std::vector<Point>& grid,
                                        std::uint64_t seed) {
  kernel.validate();
  if (!(std::abs(rho) <= 1.0))
    throw InputError("sample_synthetic_pair: |rho| must be <= 1");
  if (grid.empty()) throw InputError("sample_synthetic_pair: empty grid");

  const Eigen::MatrixXd gram_m = gram(kernel, grid);
  CholFactor fac(gram_m, 0.0, JitterPolicy::for_signal(kernel.signal_var));
  const Eigen::MatrixXd l = fac.llt().matrixL();

  const auto n = static_cast<Eigen::Index>(grid.size());
  std::mt19937_64 eng_f(substream_seed(seed, 0x66706169756c6631ULL));
  std::mt19937_64 eng_g(substream_seed(seed, 0x67706169756c6632ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd zf(n), zg(n);
  for (Eigen::Index i = 0; i < n; ++i) zf[i] = gauss(eng_f);
  for (Eigen::Index i = 0; i < n; ++i) zg[i] = gauss(eng_g);

  GroundPair pair;
  pair.f_table = l * zf;
  if (rho == 1.0) {
    pair.f_ml_table = pair.f_table;
  } else if (rho == -1.0) {
    pair.f_ml_table = -pair.f_table;
  } else {
    pair.f_ml_table =
        rho * pair.f_table + std::sqrt(1.0 - rho * rho) * (l * zg);
  }
  recompute_star(pair, grid);
  return pair;
}

// Negates the prediction surface on support points inside the box; the truth
// surface and everything outside the box are untouched bit-exactly.
inline GroundPair apply_sign_flip(GroundPair pair,
                                  const std::vector<Point>& support,
                                  const FlipBox& box) {
  if (support.size() != static_cast<std::size_t>(pair.f_ml_table.size()))
    throw InputError("apply_sign_flip: support/table size mismatch");
  for (std::size_t i = 0; i < support.size(); ++i)
    if (box.contains(support[i]))
      pair.f_ml_table[static_cast<Eigen::Index>(i)] =
          -pair.f_ml_table[static_cast<Eigen::Index>(i)];
  return pair;
}

// ---------------------------------------------------------------------------
// Arm tables
// ---------------------------------------------------------------------------

struct ArmRow {
  std::string id;
  std::string text;
  Point embedding;
  double mean_reward = 0.0;
};

struct ArmTable {
  std::vector<ArmRow> rows;
  int dim = 0;
};

namespace detail {

// Splits one CSV record into fields; double quotes wrap fields that contain
// commas or quotes, with "" as the escaped quote.
inline std::vector<std::string> split_csv_row(const std::string& line,
                                              std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty())
        throw ParseError("csv: quote inside unquoted field", row);
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field", row);
  fields.push_back(cur);
  return fields;
}

inline double parse_double_field(const std::string& s, const char* what,
                                 std::size_t row) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    if (!std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("csv: non-numeric ") + what + " value '" + s +
                         "'",
                     row);
  }
}

}  // namespace detail

// Reads `arm_id,text,e1..ed,mean_reward` with a mandatory header, validates
// uniqueness and rescales every embedding dimension to [0, 1] (a constant
// dimension maps to 0.5).
inline ArmTable load_arm_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_arm_table: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("load_arm_table: empty file", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = detail::split_csv_row(line, 0);
  if (header.size() < 4 || header.front() != "arm_id" || header[1] != "text" ||
      header.back() != "mean_reward")
    throw ParseError(
        "load_arm_table: header must be arm_id,text,e1..ed,mean_reward", 0);
  const int dim = static_cast<int>(header.size()) - 3;
  for (int k = 0; k < dim; ++k) {
    const std::string want = "e" + std::to_string(k + 1);
    if (header[static_cast<std::size_t>(k) + 2] != want)
      throw ParseError("load_arm_table: embedding column " +
                           std::to_string(k + 3) + " must be named " + want,
                       0);
  }

  ArmTable table;
  table.dim = dim;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_row(line, row);
    if (fields.size() != header.size())
      throw ParseError("load_arm_table: expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       row);
    ArmRow arm;
    arm.id = fields[0];
    arm.text = fields[1];
    if (arm.id.empty()) throw ParseError("load_arm_table: empty arm_id", row);
    arm.embedding = Point(dim);
    for (int k = 0; k < dim; ++k)
      arm.embedding[k] = detail::parse_double_field(
          fields[static_cast<std::size_t>(k) + 2], "embedding", row);
    arm.mean_reward =
        detail::parse_double_field(fields.back(), "mean_reward", row);
    for (const auto& prev : table.rows)
      if (prev.id == arm.id)
        throw ParseError("load_arm_table: duplicate arm_id '" + arm.id + "'",
                         row);
    table.rows.push_back(std::move(arm));
  }
  if (table.rows.empty())
    throw ParseError("load_arm_table: no data rows", row);

  for (int k = 0; k < dim; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& arm : table.rows) {
      lo = std::min(lo, arm.embedding[k]);
      hi = std::max(hi, arm.embedding[k]);
    }
    const double span = hi - lo;
    for (auto& arm : table.rows)
      arm.embedding[k] = span > 0.0 ? (arm.embedding[k] - lo) / span : 0.5;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Noise streams
// ---------------------------------------------------------------------------

// Three independent Gaussian streams per run. Truth draws, online prediction
// draws and offline prediction draws never share an engine, so removing the
// offline stage (or ignoring predictions entirely) cannot shift the noise
// seen by the other streams.
class NoiseStreams {
 public:
  explicit NoiseStreams(std::uint64_t run_seed)
      : truth_eng_(substream_seed(run_seed, 0x74727574685f6e31ULL)),
        pred_online_eng_(substream_seed(run_seed, 0x706f6e6c696e6532ULL)),
        pred_offline_eng_(substream_seed(run_seed, 0x706f66666c696e33ULL)) {}

  double truth() { return truth_gauss_(truth_eng_); }
  double pred_online() { return pred_online_gauss_(pred_online_eng_); }
  double pred_offline() { return pred_offline_gauss_(pred_offline_eng_); }

 private:
  std::mt19937_64 truth_eng_;
  std::mt19937_64 pred_online_eng_;
  std::mt19937_64 pred_offline_eng_;
  // One distribution per engine: normal_distribution caches a spare variate,
  // so sharing a single instance across engines would leak draws between
  // streams and break the removal identities.
  std::normal_distribution<double> truth_gauss_{0.0, 1.0};
  std::normal_distribution<double> pred_online_gauss_{0.0, 1.0};
  std::normal_distribution<double> pred_offline_gauss_{0.0, 1.0};
};

enum class QueryPhase { online, offline };

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

// An immutable tabulated instance: support points, both reward tables, and
// noisy oracle access. All randomness is injected through NoiseStreams so
// the environment itself can be shared across runs.
class Environment {
 public:
  Environment(EnvironmentSpec spec, std::vector<Point> support,
              GroundPair ground)
      : spec_(std::move(spec)),
        support_(std::move(support)),
        ground_(std::move(ground)) {
    if (support_.empty()) throw InputError("Environment: empty support");
    if (ground_.f_table.size() != static_cast<Eigen::Index>(support_.size()) ||
        ground_.f_ml_table.size() != ground_.f_table.size())
      throw InputError("Environment: table/support size mismatch");
  }

  const EnvironmentSpec& spec() const { return spec_; }
  const std::vector<Point>& support() const { return support_; }
  const GroundPair& ground() const { return ground_; }
  int dim() const { return spec_.domain.dim; }

  std::optional<std::size_t> find_index(const Point& x) const {
    if (x.size() != spec_.domain.dim) return std::nullopt;
    for (std::size_t i = 0; i < support_.size(); ++i)
      if ((support_[i].array() == x.array()).all()) return i;
    // Tolerant second pass for values that went through text round-trips.
    for (std::size_t i = 0; i < support_.size(); ++i)
      if ((support_[i] - x).cwiseAbs().maxCoeff() < 1e-12) return i;
    return std::nullopt;
  }

  std::size_t require_index(const Point& x) const {
    const auto idx = find_index(x);
    if (!idx)
      throw InputError("Environment: point is not in the support set");
    return *idx;
  }

  // Index of the support point closest to x in Euclidean distance
  // (lowest index on ties); used to snap net centers onto the support.
  std::size_t nearest_index(const Point& x) const {
    if (x.size() != spec_.domain.dim)
      throw InputError("Environment: nearest_index dimension mismatch");
    std::size_t best = 0;
    double best_d = (support_[0] - x).squaredNorm();
    for (std::size_t i = 1; i < support_.size(); ++i) {
      const double d = (support_[i] - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  double f_at(std::size_t i) const {
    return ground_.f_table[static_cast<Eigen::Index>(i)];
  }
  double f_ml_at(std::size_t i) const {
    return ground_.f_ml_table[static_cast<Eigen::Index>(i)];
  }

  double query_index(std::size_t i, Task which, NoiseStreams& streams,
                     QueryPhase phase = QueryPhase::online) const {
    if (i >= support_.size())
      throw InputError("Environment: query index out of range");
    if (which == Task::truth) {
      return f_at(i) + std::sqrt(spec_.noise.eta_sq) * streams.truth();
    }
    const double z = phase == QueryPhase::online ? streams.pred_online()
                                                 : streams.pred_offline();
    return f_ml_at(i) + std::sqrt(spec_.noise.eta_ml_sq) * z;
  }

  double query(const Point& x, Task which, NoiseStreams& streams,
               QueryPhase phase = QueryPhase::online) const {
    return query_index(require_index(x), which, streams, phase);
  }

 private:
  EnvironmentSpec spec_;
  std::vector<Point> support_;
  GroundPair ground_;
};

// ---------------------------------------------------------------------------
// Environment factories
// ---------------------------------------------------------------------------

inline Environment make_synthetic_env(const EnvironmentSpec& spec,
                                      const KernelSpec& kernel, double rho,
                                      int grid_per_dim) {
  spec.validate();
  if (spec.kind != EnvKind::synthetic)
    throw InputError("make_synthetic_env: spec.kind must be synthetic");
  auto grid = uniform_grid(spec.domain, grid_per_dim);
  GroundPair pair = sample_synthetic_pair(kernel, rho, grid, spec.seed);
  if (spec.sign_flip) {
    pair = apply_sign_flip(std::move(pair), grid, *spec.sign_flip);
    recompute_star(pair, grid);  // flip never touches f, but keep the
                                 // invariant explicit
  }
  return Environment(spec, std::move(grid), std::move(pair));
}

namespace detail {

// Prediction surface with an exact sample Pearson correlation `corr` to f:
// mix the standardized f with an orthogonalized standardized Gaussian
// direction, then restore f's location and scale.
inline Eigen::VectorXd planted_predictor(const Eigen::VectorXd& f, double corr,
                                         std::uint64_t seed) {
  const Eigen::Index n = f.size();
  if (n < 3) throw InputError("planted_predictor: need at least 3 values");
  const double mean = f.mean();
  Eigen::VectorXd z = f.array() - mean;
  const double sd = std::sqrt(z.squaredNorm() / static_cast<double>(n - 1));
  if (!(sd > 1e-12))
    throw InputError("planted_predictor: rewards have zero variance");
  z /= sd;

  std::mt19937_64 eng(substream_seed(seed, 0x706c616e74636f72ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = gauss(eng);
  g.array() -= g.mean();
  g -= (g.dot(z) / z.squaredNorm()) * z;
  const double gsd = std::sqrt(g.squaredNorm() / static_cast<double>(n - 1));
  if (!(gsd > 1e-12))
    throw InputError("planted_predictor: degenerate orthogonal direction");
  g /= gsd;

  const Eigen::VectorXd mixed =
      corr * z + std::sqrt(std::max(0.0, 1.0 - corr * corr)) * g;
  return (mean + (sd * mixed).array()).matrix();
}

}  // namespace detail

// Finite-arm instance: support = rescaled embeddings, truth = tabulated arm
// rewards, prediction = planted correlated surface (or explicit values, e.g.
// gathered from a remote predictor).
inline Environment make_finite_arm_env(
    const EnvironmentSpec& spec, const ArmTable& table,
    const std::optional<std::vector<double>>& explicit_preds = std::nullopt) {
  spec.validate();
  if (spec.kind != EnvKind::finite_arm)
    throw InputError("make_finite_arm_env: spec.kind must be finite_arm");
  if (table.dim != spec.domain.dim)
    throw InputError("make_finite_arm_env: table dimension " +
                     std::to_string(table.dim) + " != domain dimension " +
                     std::to_string(spec.domain.dim));
  std::vector<Point> support;
  GroundPair pair;
  pair.f_table.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    support.push_back(table.rows[i].embedding);
    pair.f_table[static_cast<Eigen::Index>(i)] = table.rows[i].mean_reward;
  }
  if (explicit_preds) {
    if (explicit_preds->size() != table.rows.size())
      throw InputError("make_finite_arm_env: prediction list size mismatch");
    pair.f_ml_table = Eigen::Map<const Eigen::VectorXd>(
        explicit_preds->data(), static_cast<Eigen::Index>(explicit_preds->size()));
  } else {
    pair.f_ml_table =
        detail::planted_predictor(pair.f_table, spec.planted_corr, spec.seed);
  }
  recompute_star(pair, support);
  return Environment(spec, std::move(support), std::move(pair));
}

inline Environment make_finite_arm_env(const EnvironmentSpec& spec) {
  return make_finite_arm_env(spec, load_arm_table(spec.arm_table_path));
}

// Embeds tabulated arm surfaces into the continuous box: both tables are the
// GP posterior-mean fits (small fit noise) of the arm values, evaluated on a
// dense uniform grid.
inline Environment make_embedded_grid_env(const EnvironmentSpec& spec,
                                          const KernelSpec& kernel,
                                          int grid_per_dim,
                                          double fit_noise_sq = 1e-4) {
  spec.validate();
  if (spec.kind != EnvKind::embedded_grid)
    throw InputError("make_embedded_grid_env: spec.kind must be embedded_grid");
  const ArmTable table = load_arm_table(spec.arm_table_path);
  if (table.dim != spec.domain.dim)
    throw InputError("make_embedded_grid_env: table dimension mismatch");
  if (!(fit_noise_sq > 0.0))
    throw InputError("make_embedded_grid_env: fit noise must be positive");

  std::vector<Point> arms;
  Eigen::VectorXd rewards(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    arms.push_back(table.rows[i].embedding);
    rewards[static_cast<Eigen::Index>(i)] = table.rows[i].mean_reward;
  }
  const Eigen::VectorXd preds =
      detail::planted_predictor(rewards, spec.planted_corr, spec.seed);

  auto grid = uniform_grid(spec.domain, grid_per_dim);
  Eigen::MatrixXd k_aa = gram(kernel, arms);
  k_aa.diagonal().array() += fit_noise_sq;
  CholFactor fac(k_aa, 0.0, JitterPolicy::for_signal(kernel.signal_var));
  const Eigen::MatrixXd k_ga = gram(kernel, grid, arms);

  GroundPair pair;
  pair.f_table = k_ga * fac.solve(rewards);
  pair.f_ml_table = k_ga * fac.solve(preds);
  recompute_star(pair, grid);
  return Environment(spec, std::move(grid), std::move(pair));
}

}  // namespace pagp
