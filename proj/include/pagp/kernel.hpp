#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "pagp/types.hpp"

namespace pagp {

inline double kernel_value(const KernelSpec& k, const Point& a, const Point& b) {
  if (a.size() != b.size())
    throw InputError("kernel_value: points have mismatched dimensions");
  const double d2 = (a - b).squaredNorm();
  return k.signal_var * std::exp(-d2 / (2.0 * k.length_scale * k.length_scale));
}

// Cross-covariance matrix, entry (i, j) = k(x[i], y[j]).
inline Eigen::MatrixXd gram(const KernelSpec& k, std::span<const Point> x,
                            std::span<const Point> y) {
  k.validate();
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index m = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      out(i, j) = kernel_value(k, x[static_cast<std::size_t>(i)],
                               y[static_cast<std::size_t>(j)]);
  return out;
}

inline Eigen::MatrixXd gram(const KernelSpec& k, std::span<const Point> x) {
  return gram(k, x, x);
}

}  // namespace pagp
