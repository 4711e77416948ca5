#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "pagp/kernel.hpp"
#include "pagp/linalg.hpp"
#include "pagp/types.hpp"

namespace pagp {

struct PairedObs {
  Point x;
  double y;     // ground-truth oracle sample
  double y_ml;  // prediction oracle sample at the same location
};

// Replicated prediction queries at one center, stored in aggregated form.
// The mean of count replicates carries effective noise eta_ml_sq / count,
// which is a sufficient statistic for the raw replicates.
struct OfflineEntry {
  Point center;
  double mean_obs;
  int count;
};

// Moments of the paired posterior conditioned on online data only.
struct OnlineMoments {
  double mu_true = 0.0;
  double mu_ml = 0.0;
  double sigma_true = 0.0;
  double sigma_ml = 0.0;
  double rho_t = 0.0;  // posterior cross-correlation at the query point
};

struct TaskMoments {
  double mu = 0.0;
  double sigma = 0.0;
};

// Everything the acquisition rule needs at one candidate point.
struct BivariateSummary {
  double mu_true = 0.0;
  double mu_ml = 0.0;
  double mu_ml_all = 0.0;
  double sigma_true = 0.0;
  double sigma_ml = 0.0;
  double sigma_ml_all = 0.0;
  double rho_t = 0.0;
};

// Two-output GP over (f, f_ml) with prior covariance k(x,x') * B,
// B = [[1, rho], [rho, 1]]. Maintains the paired online history and the
// aggregated offline prediction history, and exposes three conditionings:
//   online:    paired data only
//   offline:   prediction task given offline data only
//   augmented: prediction task given offline plus all online data
// Factorizations are rebuilt from scratch whenever the histories change;
// at the horizons this library targets, refitting costs less than it is
// worth to maintain incremental updates.
class JointModel {
 public:
  JointModel(const KernelSpec& kernel, const Domain& domain,
             const TaskCoupling& coupling, const NoiseSpec& noise)
      : kernel_(kernel), domain_(domain), coupling_(coupling), noise_(noise) {
    kernel_.validate();
    domain_.validate();
    coupling_.validate();
    noise_.validate_for_model();
    policy_ = JitterPolicy::for_signal(kernel_.signal_var);
  }

  const KernelSpec& kernel() const { return kernel_; }
  const Domain& domain() const { return domain_; }
  const TaskCoupling& coupling() const { return coupling_; }
  const NoiseSpec& noise() const { return noise_; }
  const std::vector<PairedObs>& online_history() const { return online_; }
  const std::vector<OfflineEntry>& offline_history() const { return offline_; }

  void observe_online(const Point& x, double y, double y_ml) {
    if (!domain_.contains(x))
      throw InputError("observe_online: point outside the domain box");
    if (!std::isfinite(y) || !std::isfinite(y_ml))
      throw InputError("observe_online: observations must be finite");
    online_.push_back(PairedObs{x, y, y_ml});
    invalidate();
  }

  // Replicated prediction observations at one center. Repeated calls with a
  // bitwise-identical center merge into a single aggregated entry.
  void observe_offline(const Point& center, std::span<const double> obs) {
    if (!domain_.contains(center))
      throw InputError("observe_offline: center outside the domain box");
    if (obs.empty())
      throw InputError("observe_offline: need at least one observation");
    double sum = 0.0;
    for (double v : obs) {
      if (!std::isfinite(v))
        throw InputError("observe_offline: observations must be finite");
      sum += v;
    }
    const double mean = sum / static_cast<double>(obs.size());
    const int count = static_cast<int>(obs.size());
    for (auto& e : offline_) {
      if (e.center.size() == center.size() &&
          (e.center.array() == center.array()).all()) {
        const double total = static_cast<double>(e.count) + count;
        e.mean_obs = (e.mean_obs * e.count + mean * count) / total;
        e.count += count;
        invalidate();
        return;
      }
    }
    offline_.push_back(OfflineEntry{center, mean, count});
    invalidate();
  }

  std::vector<OnlineMoments> online_posterior(std::span<const Point> xs) const;
  std::vector<TaskMoments> offline_posterior(std::span<const Point> xs) const;
  std::vector<TaskMoments> augmented_posterior(std::span<const Point> xs) const {
    return augmented_task(Task::prediction, xs);
  }
  // Marginal of either output under the augmented conditioning.
  std::vector<TaskMoments> augmented_task(Task task,
                                          std::span<const Point> xs) const;
  std::vector<BivariateSummary> summaries(std::span<const Point> xs) const;

  OnlineMoments online_posterior(const Point& x) const {
    return online_posterior(std::span<const Point>(&x, 1)).front();
  }
  TaskMoments offline_posterior(const Point& x) const {
    return offline_posterior(std::span<const Point>(&x, 1)).front();
  }
  TaskMoments augmented_posterior(const Point& x) const {
    return augmented_posterior(std::span<const Point>(&x, 1)).front();
  }
  BivariateSummary summary(const Point& x) const {
    return summaries(std::span<const Point>(&x, 1)).front();
  }

 private:
  struct Solved {
    CholFactor fac;
    Eigen::VectorXd alpha;  // (K + noise)^{-1} y
  };

  void invalidate() {
    online_sys_.reset();
    offline_sys_.reset();
    aug_sys_.reset();
  }

  void check_query(std::span<const Point> xs) const {
    for (const Point& x : xs)
      if (!domain_.contains(x))
        throw InputError("posterior query outside the domain box");
  }

  std::vector<Point> online_points() const {
    std::vector<Point> xs;
    xs.reserve(online_.size());
    for (const auto& o : online_) xs.push_back(o.x);
    return xs;
  }

  std::vector<Point> offline_centers() const {
    std::vector<Point> xs;
    xs.reserve(offline_.size());
    for (const auto& e : offline_) xs.push_back(e.center);
    return xs;
  }

  // Stacked online system over [truth block; prediction block].
  const Solved& online_sys() const {
    if (!online_sys_) {
      const Eigen::Index m = static_cast<Eigen::Index>(online_.size());
      const auto xs = online_points();
      const Eigen::MatrixXd k = gram(kernel_, xs);
      const double rho = coupling_.rho;
      Eigen::MatrixXd s(2 * m, 2 * m);
      s.topLeftCorner(m, m) = k;
      s.topLeftCorner(m, m).diagonal().array() += noise_.eta_sq;
      s.topRightCorner(m, m) = rho * k;
      s.bottomLeftCorner(m, m) = rho * k;
      s.bottomRightCorner(m, m) = k;
      s.bottomRightCorner(m, m).diagonal().array() += noise_.eta_ml_sq;
      Eigen::VectorXd y(2 * m);
      for (Eigen::Index i = 0; i < m; ++i) {
        y[i] = online_[static_cast<std::size_t>(i)].y;
        y[m + i] = online_[static_cast<std::size_t>(i)].y_ml;
      }
      CholFactor fac(s, 0.0, policy_);
      Eigen::VectorXd alpha = fac.solve(y);
      online_sys_.emplace(Solved{std::move(fac), std::move(alpha)});
    }
    return *online_sys_;
  }

  // Prediction-task system over the offline centers alone.
  const Solved& offline_sys() const {
    if (!offline_sys_) {
      const auto xs = offline_centers();
      Eigen::MatrixXd s = gram(kernel_, xs);
      Eigen::VectorXd y(static_cast<Eigen::Index>(offline_.size()));
      for (std::size_t i = 0; i < offline_.size(); ++i) {
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) +=
            noise_.eta_ml_sq / offline_[i].count;
        y[static_cast<Eigen::Index>(i)] = offline_[i].mean_obs;
      }
      CholFactor fac(s, 0.0, policy_);
      Eigen::VectorXd alpha = fac.solve(y);
      offline_sys_.emplace(Solved{std::move(fac), std::move(alpha)});
    }
    return *offline_sys_;
  }

  // Augmented system over [offline block; online truth block; online
  // prediction block]. Cross blocks between tasks pick up one factor of rho.
  const Solved& aug_sys() const {
    if (!aug_sys_) {
      const Eigen::Index mo = static_cast<Eigen::Index>(offline_.size());
      const Eigen::Index mn = static_cast<Eigen::Index>(online_.size());
      const auto xo = offline_centers();
      const auto xn = online_points();
      const double rho = coupling_.rho;
      const Eigen::MatrixXd koo = gram(kernel_, xo);
      const Eigen::MatrixXd kon = gram(kernel_, xo, xn);
      const Eigen::MatrixXd knn = gram(kernel_, xn);
      const Eigen::Index n = mo + 2 * mn;
      Eigen::MatrixXd s(n, n);
      s.block(0, 0, mo, mo) = koo;
      for (Eigen::Index i = 0; i < mo; ++i)
        s(i, i) += noise_.eta_ml_sq / offline_[static_cast<std::size_t>(i)].count;
      s.block(0, mo, mo, mn) = rho * kon;
      s.block(0, mo + mn, mo, mn) = kon;
      s.block(mo, 0, mn, mo) = rho * kon.transpose();
      s.block(mo + mn, 0, mn, mo) = kon.transpose();
      s.block(mo, mo, mn, mn) = knn;
      s.block(mo, mo, mn, mn).diagonal().array() += noise_.eta_sq;
      s.block(mo, mo + mn, mn, mn) = rho * knn;
      s.block(mo + mn, mo, mn, mn) = rho * knn;
      s.block(mo + mn, mo + mn, mn, mn) = knn;
      s.block(mo + mn, mo + mn, mn, mn).diagonal().array() +=
          noise_.eta_ml_sq;
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < mo; ++i)
        y[i] = offline_[static_cast<std::size_t>(i)].mean_obs;
      for (Eigen::Index i = 0; i < mn; ++i) {
        y[mo + i] = online_[static_cast<std::size_t>(i)].y;
        y[mo + mn + i] = online_[static_cast<std::size_t>(i)].y_ml;
      }
      CholFactor fac(s, 0.0, policy_);
      Eigen::VectorXd alpha = fac.solve(y);
      aug_sys_.emplace(Solved{std::move(fac), std::move(alpha)});
    }
    return *aug_sys_;
  }

  KernelSpec kernel_;
  Domain domain_;
  TaskCoupling coupling_;
  NoiseSpec noise_;
  JitterPolicy policy_;
  std::vector<PairedObs> online_;
  std::vector<OfflineEntry> offline_;
  mutable std::optional<Solved> online_sys_;
  mutable std::optional<Solved> offline_sys_;
  mutable std::optional<Solved> aug_sys_;
};

inline std::vector<OnlineMoments> JointModel::online_posterior(
    std::span<const Point> xs) const {
  check_query(xs);
  const Eigen::Index g = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index m = static_cast<Eigen::Index>(online_.size());
  const double s2 = kernel_.signal_var;
  const double rho = coupling_.rho;
  const double tau = 1e-12 * s2;
  std::vector<OnlineMoments> out(xs.size());
  if (m == 0) {
    const double sd = std::sqrt(s2);
    for (auto& o : out) {
      o.mu_true = 0.0;
      o.mu_ml = 0.0;
      o.sigma_true = sd;
      o.sigma_ml = sd;
      o.rho_t = sd * sd < tau ? 0.0 : rho;
    }
    return out;
  }
  const auto& sys = online_sys();
  const auto xn = online_points();
  const Eigen::MatrixXd kc = gram(kernel_, xs, xn);  // g x m

  // Stacked cross-covariance rows: truth query is [kc, rho*kc], prediction
  // query is [rho*kc, kc]. Means come from alpha, variances from one solve
  // per task block.
  Eigen::MatrixXd ct(2 * m, g);
  ct.topRows(m) = kc.transpose();
  ct.bottomRows(m) = rho * kc.transpose();
  Eigen::MatrixXd cm(2 * m, g);
  cm.topRows(m) = rho * kc.transpose();
  cm.bottomRows(m) = kc.transpose();

  const Eigen::VectorXd mu_t = ct.transpose() * sys.alpha;
  const Eigen::VectorXd mu_m = cm.transpose() * sys.alpha;
  const Eigen::MatrixXd wt = sys.fac.solve(ct);
  const Eigen::MatrixXd wm = sys.fac.solve(cm);
  const Eigen::ArrayXd qtt = (ct.array() * wt.array()).colwise().sum();
  const Eigen::ArrayXd qmm = (cm.array() * wm.array()).colwise().sum();
  const Eigen::ArrayXd qtm = (ct.array() * wm.array()).colwise().sum();

  for (Eigen::Index i = 0; i < g; ++i) {
    OnlineMoments& o = out[static_cast<std::size_t>(i)];
    o.mu_true = mu_t[i];
    o.mu_ml = mu_m[i];
    const double vt = std::max(0.0, s2 - qtt[i]);
    const double vm = std::max(0.0, s2 - qmm[i]);
    o.sigma_true = std::sqrt(vt);
    o.sigma_ml = std::sqrt(vm);
    const double cov = rho * s2 - qtm[i];
    const double denom = o.sigma_true * o.sigma_ml;
    o.rho_t = denom < tau ? 0.0 : std::clamp(cov / denom, -1.0, 1.0);
  }
  return out;
}

inline std::vector<TaskMoments> JointModel::offline_posterior(
    std::span<const Point> xs) const {
  check_query(xs);
  const Eigen::Index g = static_cast<Eigen::Index>(xs.size());
  const double s2 = kernel_.signal_var;
  std::vector<TaskMoments> out(xs.size());
  if (offline_.empty()) {
    for (auto& o : out) o = TaskMoments{0.0, std::sqrt(s2)};
    return out;
  }
  const auto& sys = offline_sys();
  const auto xo = offline_centers();
  const Eigen::MatrixXd kc = gram(kernel_, xs, xo);  // g x mo
  const Eigen::VectorXd mu = kc * sys.alpha;
  const Eigen::MatrixXd w = sys.fac.solve(Eigen::MatrixXd(kc.transpose()));
  const Eigen::ArrayXd q = (kc.transpose().array() * w.array()).colwise().sum();
  for (Eigen::Index i = 0; i < g; ++i) {
    out[static_cast<std::size_t>(i)].mu = mu[i];
    out[static_cast<std::size_t>(i)].sigma =
        std::sqrt(std::max(0.0, s2 - q[i]));
  }
  return out;
}

inline std::vector<TaskMoments> JointModel::augmented_task(
    Task task, std::span<const Point> xs) const {
  check_query(xs);
  const Eigen::Index g = static_cast<Eigen::Index>(xs.size());
  const Eigen::Index mo = static_cast<Eigen::Index>(offline_.size());
  const Eigen::Index mn = static_cast<Eigen::Index>(online_.size());
  const double s2 = kernel_.signal_var;
  const double rho = coupling_.rho;
  std::vector<TaskMoments> out(xs.size());
  if (mo + mn == 0) {
    for (auto& o : out) o = TaskMoments{0.0, std::sqrt(s2)};
    return out;
  }
  const auto& sys = aug_sys();
  const auto xo = offline_centers();
  const auto xn = online_points();
  const Eigen::MatrixXd ko = gram(kernel_, xs, xo);  // g x mo
  const Eigen::MatrixXd kn = gram(kernel_, xs, xn);  // g x mn

  // Prediction-task cross row: [ko, rho*kn, kn]; truth swaps the rho.
  const double ro = task == Task::prediction ? 1.0 : rho;
  const double rn_true = task == Task::prediction ? rho : 1.0;
  const double rn_ml = task == Task::prediction ? 1.0 : rho;
  Eigen::MatrixXd c(mo + 2 * mn, g);
  c.topRows(mo) = ro * ko.transpose();
  c.middleRows(mo, mn) = rn_true * kn.transpose();
  c.bottomRows(mn) = rn_ml * kn.transpose();

  const Eigen::VectorXd mu = c.transpose() * sys.alpha;
  const Eigen::MatrixXd w = sys.fac.solve(c);
  const Eigen::ArrayXd q = (c.array() * w.array()).colwise().sum();
  for (Eigen::Index i = 0; i < g; ++i) {
    out[static_cast<std::size_t>(i)].mu = mu[i];
    out[static_cast<std::size_t>(i)].sigma =
        std::sqrt(std::max(0.0, s2 - q[i]));
  }
  return out;
}

inline std::vector<BivariateSummary> JointModel::summaries(
    std::span<const Point> xs) const {
  const auto on = online_posterior(xs);
  const auto aug = augmented_posterior(xs);
  std::vector<BivariateSummary> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i].mu_true = on[i].mu_true;
    out[i].mu_ml = on[i].mu_ml;
    out[i].sigma_true = on[i].sigma_true;
    out[i].sigma_ml = on[i].sigma_ml;
    out[i].rho_t = on[i].rho_t;
    out[i].mu_ml_all = aug[i].mu;
    out[i].sigma_ml_all = aug[i].sigma;
  }
  return out;
}

}  // namespace pagp
