#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "pagp/joint_model.hpp"
#include "pagp/types.hpp"

namespace pagp {

// Prediction-adjusted posterior mean: the online truth mean minus a
// regression correction proportional to how far the online prediction mean
// sits from the offline-augmented one. With a degenerate posterior
// correlation the correction is dropped entirely.
inline double pa_mean(const BivariateSummary& s) {
  if (s.rho_t == 0.0) return s.mu_true;
  return s.mu_true -
         s.rho_t * (s.sigma_true / s.sigma_ml) * (s.mu_ml - s.mu_ml_all);
}

// Prediction-adjusted width. The shrink ratio sigma_ml_all / sigma_ml is
// clamped to [0, 1] so roundoff can never inflate the width past sigma_true.
inline double pa_std(const BivariateSummary& s) {
  if (s.rho_t == 0.0) return s.sigma_true;
  const double ratio =
      std::clamp(s.sigma_ml_all / s.sigma_ml, 0.0, 1.0);
  const double r2 = s.rho_t * s.rho_t;
  return s.sigma_true * std::sqrt(r2 * ratio * ratio + (1.0 - r2));
}

// Confidence multiplier for round t on [0, r]^d with Lipschitz tail
// constants a, b and failure probability delta.
inline double beta_theoretical(int t, int d, double delta, double a, double b,
                               double r) {
  if (t < 1) throw InputError("beta_theoretical: t must be >= 1");
  if (d < 1) throw InputError("beta_theoretical: d must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw InputError("beta_theoretical: delta must be in (0, 1)");
  if (!(a > 0.0 && b > 0.0 && r > 0.0))
    throw InputError("beta_theoretical: a, b, r must be > 0");
  const double inner = 4.0 * d * a / delta;
  if (inner <= 1.0)
    throw InputError(
        "beta_theoretical: 4*d*a/delta must exceed 1; increase a or decrease "
        "delta");
  const double pi = 3.14159265358979323846;
  const double first =
      2.0 * std::log(2.0 * pi * pi * static_cast<double>(t) * t / (3.0 * delta));
  const double second =
      4.0 * d *
      std::log(d * static_cast<double>(t) * b * r * std::sqrt(std::log(inner)));
  return first + second;
}

inline double ucb_score(const BivariateSummary& s, double beta) {
  if (!(beta >= 0.0)) throw InputError("ucb_score: beta must be >= 0");
  return pa_mean(s) + std::sqrt(beta) * pa_std(s);
}

struct Selection {
  std::size_t index = 0;
  double score = 0.0;
};

// Argmax of the adjusted UCB over precomputed summaries. Ties resolve to
// the lowest index so reruns are reproducible.
inline Selection select_from_summaries(std::span<const BivariateSummary> sums,
                                       double beta) {
  if (sums.empty())
    throw InputError("select_from_summaries: candidate set is empty");
  Selection best{0, ucb_score(sums[0], beta)};
  for (std::size_t i = 1; i < sums.size(); ++i) {
    const double v = ucb_score(sums[i], beta);
    if (v > best.score) best = Selection{i, v};
  }
  return best;
}

// Argmax of the adjusted UCB over the candidate set.
inline Selection select_next(const JointModel& model,
                             std::span<const Point> candidates, double beta) {
  if (candidates.empty())
    throw InputError("select_next: candidate set is empty");
  const auto sums = model.summaries(candidates);
  return select_from_summaries(sums, beta);
}

}  // namespace pagp
