#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pagp/joint_model.hpp"
#include "pagp/types.hpp"

namespace pagp {

// Covering design for the offline stage: centers of a 2*epsilon cell
// partition of the box, so every point of the domain lies within epsilon of
// some center (in the max metric per axis, hence also within epsilon*sqrt(d)
// in Euclidean distance; the per-axis bound is what the design analysis
// uses).
struct NetDesign {
  double epsilon = 0.0;
  std::vector<Point> centers;
  int replicates = 1;
};

namespace detail {

inline std::vector<double> net_axis(double side, double epsilon) {
  if (epsilon > side / 2.0) return {side / 2.0};
  const int m = static_cast<int>(std::ceil(side / (2.0 * epsilon)));
  std::vector<double> c(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    c[static_cast<std::size_t>(i)] =
        std::min((2.0 * i + 1.0) * epsilon, side - epsilon);
  return c;
}

}  // namespace detail

inline NetDesign epsilon_net(const Domain& domain, double epsilon,
                             int replicates = 1) {
  domain.validate();
  if (!(epsilon > 0.0)) throw InputError("epsilon_net: epsilon must be > 0");
  if (replicates < 1)
    throw InputError("epsilon_net: replicates must be >= 1");
  const auto axis = detail::net_axis(domain.side, epsilon);
  const std::size_t per_dim = axis.size();
  double total = 1.0;
  for (int i = 0; i < domain.dim; ++i) total *= static_cast<double>(per_dim);
  if (total > 1e7)
    throw InputError("epsilon_net: net would exceed 1e7 centers");

  NetDesign out;
  out.epsilon = epsilon;
  out.replicates = replicates;
  const std::size_t m = static_cast<std::size_t>(total);
  out.centers.reserve(m);
  std::vector<std::size_t> idx(static_cast<std::size_t>(domain.dim), 0);
  for (std::size_t c = 0; c < m; ++c) {
    Point p(domain.dim);
    for (int d = 0; d < domain.dim; ++d)
      p[d] = axis[idx[static_cast<std::size_t>(d)]];
    out.centers.push_back(std::move(p));
    for (int d = domain.dim - 1; d >= 0; --d) {
      if (++idx[static_cast<std::size_t>(d)] < per_dim) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
  }
  return out;
}

// Lower bound on the prediction-task posterior variance after T online
// rounds, valid for any query sequence. k_min is the smallest prior
// variance over the domain; for the stationary kernel here that is the
// signal variance itself.
inline double sigma_min_ml_sq(int T, double eta_sq, double eta_ml_sq,
                              double rho, double k_min) {
  if (T < 1) throw InputError("sigma_min_ml_sq: T must be >= 1");
  if (!(eta_sq > 0.0 && eta_ml_sq > 0.0))
    throw InputError("sigma_min_ml_sq: noise variances must be > 0");
  if (!(std::abs(rho) < 1.0))
    throw InputError("sigma_min_ml_sq: |rho| must be < 1");
  if (!(k_min > 0.0 && k_min <= 1.0))
    throw InputError("sigma_min_ml_sq: k_min must be in (0, 1]");
  const double om = 1.0 - rho * rho;
  const double t = static_cast<double>(T);
  const double num = 1.0 / om + t / eta_sq;
  const double den = t * t / (eta_ml_sq * eta_sq) +
                     (1.0 / eta_ml_sq + 1.0 / eta_sq) * t / (k_min * om) +
                     om / (k_min * k_min);
  return num / den;
}

struct SufficientDesign {
  double epsilon_max = 0.0;
  long n_min = 0;        // ceil of n_min_raw, at least 1
  double n_min_raw = 0.0;
  double sigma_min_sq = 0.0;
};

// Net spacing and replicate count sufficient to keep the offline shrink
// ratio below R uniformly over the first T rounds. The Lipschitz constant
// of a prior sample path enters through L = b * sqrt(log(d*a/delta)).
inline SufficientDesign sufficient_design(double R, int T,
                                          const NoiseSpec& noise, double rho,
                                          double k_min, double delta, double a,
                                          double b, int d) {
  if (!(R > 0.0 && R <= 1.0))
    throw InputError("sufficient_design: R must be in (0, 1]");
  if (d < 1) throw InputError("sufficient_design: d must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw InputError("sufficient_design: delta must be in (0, 1)");
  if (!(a > 0.0 && b > 0.0))
    throw InputError("sufficient_design: a, b must be > 0");
  if (!(d * a / delta > 1.0))
    throw InputError(
        "sufficient_design: d*a/delta must exceed 1; increase a or decrease "
        "delta");
  SufficientDesign out;
  out.sigma_min_sq = sigma_min_ml_sq(T, noise.eta_sq, noise.eta_ml_sq, rho,
                                     k_min);
  const double l_sq = b * b * std::log(d * a / delta);
  out.epsilon_max = std::sqrt(out.sigma_min_sq * R / (2.0 * l_sq * d * d));
  out.n_min_raw = 2.0 * noise.eta_ml_sq / (out.sigma_min_sq * R);
  out.n_min = std::max(1L, static_cast<long>(std::ceil(out.n_min_raw)));
  return out;
}

struct RHatEstimate {
  double r_hat = 1.0;
  int skipped = 0;  // holdout points with a degenerate online width
};

// Empirical shrink ratio: the worst clamped (sigma_ml_all / sigma_ml)^2
// over the holdout. Points where the online prediction width has already
// collapsed are skipped and counted. With no offline data the two widths
// coincide and the estimate is exactly 1.
inline RHatEstimate estimate_r_hat(const JointModel& model,
                                   std::span<const Point> holdout) {
  if (holdout.empty())
    throw InputError("estimate_r_hat: holdout is empty");
  const double tau = 1e-12 * model.kernel().signal_var;
  const auto on = model.online_posterior(holdout);
  const auto aug = model.augmented_posterior(holdout);
  RHatEstimate out;
  out.r_hat = 0.0;
  int valid = 0;
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    if (on[i].sigma_ml < tau) {
      ++out.skipped;
      continue;
    }
    const double ratio = aug[i].sigma / on[i].sigma_ml;
    out.r_hat = std::max(out.r_hat, std::clamp(ratio * ratio, 0.0, 1.0));
    ++valid;
  }
  if (valid == 0) out.r_hat = 1.0;
  return out;
}

}  // namespace pagp
