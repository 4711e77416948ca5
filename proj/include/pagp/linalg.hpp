#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <string>
#include <utility>

#include "pagp/types.hpp"

namespace pagp {

// Escalation schedule for Cholesky regularization. The floor and cap scale
// with the kernel signal variance so behaviour is invariant to rescaling
// the reward unit.
struct JitterPolicy {
  double floor = 1e-9;
  double cap = 1e-3;
  double growth = 10.0;

  static JitterPolicy for_signal(double signal_var) {
    return JitterPolicy{1e-9 * signal_var, 1e-3 * signal_var, 10.0};
  }
};

// Cholesky factor of A + jitter*I. Starts at the requested jitter (0 means
// try the matrix as given), then escalates geometrically from the policy
// floor until the factorization succeeds or the cap is exceeded.
class CholFactor {
 public:
  CholFactor(const Eigen::MatrixXd& a, double jitter0,
             const JitterPolicy& policy = JitterPolicy{}) {
    if (a.rows() != a.cols())
      throw InputError("CholFactor: matrix must be square");
    if (jitter0 < 0.0) throw InputError("CholFactor: jitter must be >= 0");
    double jitter = jitter0;
    while (true) {
      if (jitter == 0.0) {
        llt_.compute(a);
      } else {
        Eigen::MatrixXd reg = a;
        reg.diagonal().array() += jitter;
        llt_.compute(reg);
      }
      if (llt_.info() == Eigen::Success) {
        jitter_ = jitter;
        return;
      }
      const double next =
          jitter < policy.floor ? policy.floor : jitter * policy.growth;
      if (next > policy.cap * (1.0 + 1e-12) || next <= jitter)
        throw NumericalError("Cholesky factorization failed; last jitter " +
                                 std::to_string(jitter),
                             jitter);
      jitter = next;
    }
  }

  double jitter() const { return jitter_; }

  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    return llt_.solve(rhs);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    return llt_.solve(rhs);
  }

  // log det(A + jitter*I)
  double log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

// Solves (A + jitter*I) x = rhs for symmetric A, escalating the jitter per
// the policy when the factorization fails.
inline Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& a, double jitter,
                                  const Eigen::MatrixXd& rhs,
                                  const JitterPolicy& policy = JitterPolicy{}) {
  if (a.rows() != rhs.rows())
    throw InputError("chol_solve: rhs rows must match matrix size");
  CholFactor fac(a, jitter, policy);
  return fac.solve(rhs);
}

}  // namespace pagp
