#pragma once

#include <Eigen/Dense>

#include <vector>

#include "pagp/kernel.hpp"
#include "pagp/linalg.hpp"
#include "pagp/types.hpp"

namespace pagp {

struct ReferencePosterior {
  Eigen::VectorXd mean;  // one entry per query
  Eigen::MatrixXd cov;   // full posterior covariance of the queries
  double jitter_used = 0.0;
};

// Exact GP conditioning over an arbitrary index set. The kernel is any
// callable k(i, j) -> double over indices, noise_cov is the full PSD noise
// covariance of the observations. Slow and direct by design: this is the
// oracle the structured model implementations are checked against.
template <typename Index, typename KernelFn>
ReferencePosterior reference_posterior(KernelFn&& kernel,
                                       const Eigen::MatrixXd& noise_cov,
                                       const std::vector<Index>& obs_index,
                                       const Eigen::VectorXd& obs_values,
                                       const std::vector<Index>& queries,
                                       const JitterPolicy& policy = JitterPolicy{}) {
  const Eigen::Index n = static_cast<Eigen::Index>(obs_index.size());
  const Eigen::Index q = static_cast<Eigen::Index>(queries.size());
  if (obs_values.size() != n)
    throw InputError("reference_posterior: observation count mismatch");
  if (n > 0 && (noise_cov.rows() != n || noise_cov.cols() != n))
    throw InputError("reference_posterior: noise covariance shape mismatch");

  ReferencePosterior out;
  Eigen::MatrixXd kqq(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j)
      kqq(i, j) = kernel(queries[static_cast<std::size_t>(i)],
                         queries[static_cast<std::size_t>(j)]);
  if (n == 0) {
    out.mean = Eigen::VectorXd::Zero(q);
    out.cov = kqq;
    return out;
  }

  Eigen::MatrixXd kxx(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      kxx(i, j) = kernel(obs_index[static_cast<std::size_t>(i)],
                         obs_index[static_cast<std::size_t>(j)]);
  Eigen::MatrixXd kqx(q, n);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      kqx(i, j) = kernel(queries[static_cast<std::size_t>(i)],
                         obs_index[static_cast<std::size_t>(j)]);

  CholFactor fac(kxx + noise_cov, 0.0, policy);
  out.jitter_used = fac.jitter();
  out.mean = kqx * fac.solve(obs_values);
  out.cov = kqq - kqx * fac.solve(Eigen::MatrixXd(kqx.transpose()));
  return out;
}

// Index over the bivariate process: a location plus which output it belongs
// to. Prior covariance between tasks i, j at x, x' is B_ij * k(x, x').
struct TaskPoint {
  Point x;
  Task task = Task::truth;
};

inline double bivariate_kernel(const KernelSpec& k, const TaskCoupling& c,
                               const TaskPoint& a, const TaskPoint& b) {
  const double base = kernel_value(k, a.x, b.x);
  return a.task == b.task ? base : c.rho * base;
}

}  // namespace pagp
