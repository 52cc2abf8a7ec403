#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/conformal/quantile.hpp"
#include "cpreach/dynamics/trajectory.hpp"
#include "cpreach/error.hpp"
#include "cpreach/geometry/interval_box.hpp"
#include "cpreach/parallel.hpp"
#include "cpreach/reach/flowpipe.hpp"
#include "cpreach/surrogate/composite.hpp"

namespace cpreach {

/// L x (n K) absolute prediction errors on held-out trajectories; column j
/// is trajectory component n + j. The initial state is copied exactly and
/// carries no residual.
struct CalibrationMatrix {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  RowMatrix residuals;

  Eigen::Index L() const { return residuals.rows(); }
};

inline CalibrationMatrix residual_matrix(const CompositeSurrogate& F, const TrajectoryDataset& dtest) {
  dtest.validate();
  require(dtest.n == F.n() && dtest.K == F.K(), ErrorKind::ShapeMismatch,
          "calibration data (n=" + std::to_string(dtest.n) + ", K=" + std::to_string(dtest.K) +
              ") does not match the surrogate (n=" + std::to_string(F.n()) + ", K=" + std::to_string(F.K()) + ")");
  require(dtest.size() >= 1, ErrorKind::ShapeMismatch, "calibration data has no trajectories");
  const Eigen::Index n = dtest.n;
  const Eigen::Index m = n * dtest.K;
  CalibrationMatrix cm{n, dtest.K, RowMatrix(dtest.size(), m)};
  parallel_for(static_cast<std::size_t>(dtest.size()), [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd sigma = dtest.rows.row(row).transpose();
    const Eigen::VectorXd pred = F.predict(sigma.head(n));
    cm.residuals.row(row) = (sigma.tail(m) - pred.tail(m)).cwiseAbs().transpose();
  });
  return cm;
}

/// Conformal quantiles R* of every residual column at level delta.
struct QuantileVector {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  Eigen::Index L = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::int64_t ell = 0;
  Eigen::VectorXd r_star;  // n K entries
};

inline QuantileVector conformal_quantiles(const CalibrationMatrix& cm, double delta, double epsilon) {
  require(cm.residuals.cols() == cm.n * cm.K, ErrorKind::ShapeMismatch, "residual matrix must have n*K columns");
  require(cm.L() >= 1, ErrorKind::InsufficientCalibration, "residual matrix has no rows");
  QuantileVector q{cm.n, cm.K, cm.L(), epsilon, delta, feasible_quantile_index(cm.L(), delta),
                   Eigen::VectorXd(cm.n * cm.K)};
  parallel_for(static_cast<std::size_t>(q.r_star.size()), [&](std::size_t j) {
    const auto col = static_cast<Eigen::Index>(j);
    std::vector<double> column(static_cast<std::size_t>(cm.L()));
    for (Eigen::Index i = 0; i < cm.L(); ++i) column[static_cast<std::size_t>(i)] = cm.residuals(i, col);
    q.r_star[col] = conformal_quantile(std::move(column), delta).value;
  });
  return q;
}

/// Quantiles at the per-component level implied by a joint failure
/// probability epsilon.
inline QuantileVector conformal_quantiles(const CalibrationMatrix& cm, double epsilon) {
  return conformal_quantiles(cm, delta_from_epsilon(epsilon, cm.n, cm.K), epsilon);
}

/// Surrogate flowpipe widened by R* on every post-initial component.
struct ConfidentFlowpipe {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  IntervalBox bounds;
  double epsilon = 0.0;
  double delta = 0.0;
  double Delta = 0.0;
};

inline ConfidentFlowpipe inflate_flowpipe(const IntervalBox& xbar, const QuantileVector& q) {
  const Eigen::Index n = q.n;
  require(q.r_star.size() == q.n * q.K, ErrorKind::ShapeMismatch, "quantile vector must have n*K entries");
  require(xbar.dim() == (q.K + 1) * n, ErrorKind::ShapeMismatch,
          "surrogate flowpipe has " + std::to_string(xbar.dim()) + " components, quantiles cover (K+1)*n = " +
              std::to_string((q.K + 1) * n));
  require((q.r_star.array() >= 0.0).all(), ErrorKind::ShapeMismatch, "quantiles must be nonnegative");
  Eigen::VectorXd lo = xbar.lower(), hi = xbar.upper();
  lo.tail(n * q.K) -= q.r_star;
  hi.tail(n * q.K) += q.r_star;
  return {n, q.K, IntervalBox(std::move(lo), std::move(hi)), q.epsilon, q.delta, joint_confidence(q.delta, n, q.K)};
}

inline ConfidentFlowpipe inflate_flowpipe(const SurrogateFlowpipe& xbar, const QuantileVector& q) {
  return inflate_flowpipe(xbar.bounds, q);
}

/// Fraction of trajectories lying entirely inside the bounds (closed
/// intervals, no tolerance).
inline double empirical_coverage(const IntervalBox& bounds, const TrajectoryDataset& fresh) {
  fresh.validate();
  require(fresh.width() == bounds.dim(), ErrorKind::ShapeMismatch,
          "trajectories have " + std::to_string(fresh.width()) + " components, flowpipe has " +
              std::to_string(bounds.dim()));
  require(fresh.size() >= 1, ErrorKind::ShapeMismatch, "coverage needs at least one trajectory");
  Eigen::Index inside = 0;
  for (Eigen::Index i = 0; i < fresh.size(); ++i) {
    if (bounds.contains(Eigen::VectorXd(fresh.rows.row(i).transpose()))) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(fresh.size());
}

inline double empirical_coverage(const ConfidentFlowpipe& X, const TrajectoryDataset& fresh) {
  return empirical_coverage(X.bounds, fresh);
}

}  // namespace cpreach
