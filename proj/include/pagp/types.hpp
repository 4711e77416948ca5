#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pagp {

using Point = Eigen::VectorXd;

// Precondition violations: bad arguments, malformed config values.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A linear solve failed after exhausting the jitter escalation schedule.
// jitter_tried is the last regularization that was attempted.
struct NumericalError : std::runtime_error {
  double jitter_tried = 0.0;
  NumericalError(const std::string& msg, double jitter)
      : std::runtime_error(msg), jitter_tried(jitter) {}
};

// Malformed input file. row is 1-based and counts the header line.
struct ParseError : std::runtime_error {
  std::size_t row = 0;
  ParseError(const std::string& msg, std::size_t row_)
      : std::runtime_error(msg), row(row_) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Task { truth = 0, prediction = 1 };

// Axis-aligned box [0, side]^dim.
struct Domain {
  int dim = 1;
  double side = 1.0;

  void validate() const {
    if (dim < 1) throw InputError("domain dim must be >= 1");
    if (!(side > 0.0)) throw InputError("domain side must be > 0");
  }

  bool contains(const Point& x, double tol = 1e-9) const {
    if (x.size() != dim) return false;
    const double slack = tol * side;
    for (int i = 0; i < dim; ++i) {
      if (!(x[i] >= -slack) || !(x[i] <= side + slack)) return false;
    }
    return true;
  }
};

enum class KernelKind { rbf };

// Isotropic squared-exponential kernel,
//   k(x, x') = signal_var * exp(-|x - x'|^2 / (2 length_scale^2)).
// signal_var is capped at 1 so that k(x, x) <= 1.
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double length_scale = 0.1;
  double signal_var = 1.0;

  void validate() const {
    if (kind != KernelKind::rbf) throw InputError("unsupported kernel kind");
    if (!(length_scale > 0.0)) throw InputError("length_scale must be > 0");
    if (!(signal_var > 0.0 && signal_var <= 1.0))
      throw InputError("signal_var must be in (0, 1]");
  }
};

// Cross-task correlation of the bivariate prior; the task covariance is
// B = [[1, rho], [rho, 1]].
struct TaskCoupling {
  double rho = 0.0;

  void validate() const {
    if (!(rho >= -1.0 && rho <= 1.0))
      throw InputError("task coupling rho must be in [-1, 1]");
  }
};

// Observation noise variances of the two oracles.
// Models require both strictly positive; environments may be noise-free.
struct NoiseSpec {
  double eta_sq = 0.01;
  double eta_ml_sq = 0.01;

  void validate_for_model() const {
    if (!(eta_sq > 0.0)) throw InputError("eta_sq must be > 0");
    if (!(eta_ml_sq > 0.0)) throw InputError("eta_ml_sq must be > 0");
  }

  void validate_for_environment() const {
    if (!(eta_sq >= 0.0)) throw InputError("eta_sq must be >= 0");
    if (!(eta_ml_sq >= 0.0)) throw InputError("eta_ml_sq must be >= 0");
  }
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent named stream from one run seed. Streams with
// distinct tags never share draws, so deleting one consumer of randomness
// leaves the others byte-identical.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed + 0x632be59bd9b4e019ull * (tag + 1);
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b >> 1);
}

}  // namespace pagp
