#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/error.hpp"
#include "cpreach/geometry/interval_box.hpp"
#include "cpreach/geometry/simplex.hpp"

namespace cpreach {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

/// Star set {c + V alpha | C alpha <= d, alpha_lower <= alpha <= alpha_upper}.
///
/// Stars built by this library always carry finite alpha bounds, so every
/// bounding LP is bounded. Callers may pass infinite bounds; queries in an
/// unbounded direction then raise ErrorKind::Unbounded.
class StarSet {
 public:
  StarSet() = default;

  StarSet(Eigen::VectorXd center, Eigen::MatrixXd basis, Eigen::MatrixXd constraints, Eigen::VectorXd bounds,
          Eigen::VectorXd alpha_lower, Eigen::VectorXd alpha_upper)
      : center_(std::move(center)),
        basis_(std::move(basis)),
        constraints_(std::move(constraints)),
        bounds_(std::move(bounds)),
        alpha_lower_(std::move(alpha_lower)),
        alpha_upper_(std::move(alpha_upper)) {
    const Eigen::Index p = alpha_lower_.size();
    if (basis_.size() == 0) basis_.resize(center_.size(), p);
    if (constraints_.size() == 0) constraints_.resize(bounds_.size(), p);
    require(basis_.rows() == center_.size(), ErrorKind::DimensionMismatch, "star basis rows must equal dimension");
    require(basis_.cols() == p, ErrorKind::DimensionMismatch, "star basis columns must equal alpha count");
    require(constraints_.cols() == p, ErrorKind::DimensionMismatch, "constraint columns must equal alpha count");
    require(constraints_.rows() == bounds_.size(), ErrorKind::DimensionMismatch, "constraint rows must match d");
    require(alpha_upper_.size() == p, ErrorKind::DimensionMismatch, "alpha bound lengths differ");
  }

  /// Star with only box bounds on alpha.
  static StarSet from_box_parameters(Eigen::VectorXd center, Eigen::MatrixXd basis, Eigen::VectorXd alpha_lower,
                                     Eigen::VectorXd alpha_upper) {
    const Eigen::Index p = alpha_lower.size();
    return StarSet(std::move(center), std::move(basis), Eigen::MatrixXd(0, p), Eigen::VectorXd(0),
                   std::move(alpha_lower), std::move(alpha_upper));
  }

  Eigen::Index dim() const { return center_.size(); }
  Eigen::Index num_alpha() const { return alpha_lower_.size(); }
  Eigen::Index num_constraints() const { return constraints_.rows(); }

  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::MatrixXd& constraints() const { return constraints_; }
  const Eigen::VectorXd& bounds() const { return bounds_; }
  const Eigen::VectorXd& alpha_lower() const { return alpha_lower_; }
  const Eigen::VectorXd& alpha_upper() const { return alpha_upper_; }

  Eigen::VectorXd map(const Eigen::VectorXd& alpha) const { return center_ + basis_ * alpha; }

  bool admits(const Eigen::VectorXd& alpha, double tol = kLpTolerance) const {
    if (alpha.size() != num_alpha()) return false;
    for (Eigen::Index k = 0; k < num_alpha(); ++k) {
      if (alpha[k] < alpha_lower_[k] - tol || alpha[k] > alpha_upper_[k] + tol) return false;
    }
    if (num_constraints() == 0) return true;
    return ((constraints_ * alpha - bounds_).array() <= tol).all();
  }

  /// Interval bounds from the alpha box alone (ignores C alpha <= d); a cheap
  /// outer bound used to skip LPs for provably stable neurons.
  Interval box_bounds(Eigen::Index i) const {
    double lo = center_[i];
    double hi = center_[i];
    for (Eigen::Index k = 0; k < num_alpha(); ++k) {
      const double v = basis_(i, k);
      if (v == 0.0) continue;
      const double a = v * alpha_lower_[k];
      const double b = v * alpha_upper_[k];
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    return {lo, hi};
  }

  /// Star with an extra half-space constraint row . alpha <= bound.
  StarSet with_constraint(const Eigen::RowVectorXd& row, double bound) const {
    Eigen::MatrixXd C(num_constraints() + 1, num_alpha());
    Eigen::VectorXd d(num_constraints() + 1);
    C.topRows(num_constraints()) = constraints_;
    C.row(num_constraints()) = row;
    d.head(num_constraints()) = bounds_;
    d[num_constraints()] = bound;
    return StarSet(center_, basis_, std::move(C), std::move(d), alpha_lower_, alpha_upper_);
  }

  /// Same constraints, coordinate i forced to zero.
  StarSet with_zeroed_coordinate(Eigen::Index i) const {
    StarSet out = *this;
    out.center_[i] = 0.0;
    out.basis_.row(i).setZero();
    return out;
  }

 private:
  friend class StarBounds;

  Eigen::VectorXd center_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd constraints_;
  Eigen::VectorXd bounds_;
  Eigen::VectorXd alpha_lower_;
  Eigen::VectorXd alpha_upper_;
};

/// LP-backed bound queries on one constraint system, returning the solver's
/// certified bounds. Holds a warm simplex so
/// repeated queries on a star (or on affine images sharing its constraints)
/// only pay for Phase 1 once. Not thread-safe; use one per worker.
class StarBounds {
 public:
  explicit StarBounds(const StarSet& star)
      : lp_(star.constraints(), star.bounds(), star.alpha_lower(), star.alpha_upper()) {}

  bool empty() { return !lp_.feasible(); }

  /// min/max of row . alpha + offset over the alpha-polytope.
  Interval range(const Eigen::VectorXd& row, double offset) {
    const LpResult lo = lp_.minimize(row);
    check(lo.status);
    const LpResult hi = lp_.maximize(row);
    check(hi.status);
    return {lo.bound + offset, hi.bound + offset};
  }

  double minimum(const Eigen::VectorXd& row, double offset) {
    const LpResult r = lp_.minimize(row);
    check(r.status);
    return r.bound + offset;
  }

  double maximum(const Eigen::VectorXd& row, double offset) {
    const LpResult r = lp_.maximize(row);
    check(r.status);
    return r.bound + offset;
  }

  Interval coordinate(const StarSet& star, Eigen::Index i) {
    if (star.basis().row(i).isZero(0.0)) {
      if (empty()) fail(ErrorKind::EmptySet, "star constraints are infeasible");
      return {star.center()[i], star.center()[i]};
    }
    return range(star.basis().row(i).transpose(), star.center()[i]);
  }

 private:
  static void check(LpStatus status) {
    if (status == LpStatus::Infeasible) fail(ErrorKind::EmptySet, "star constraints are infeasible");
    if (status == LpStatus::Unbounded) fail(ErrorKind::Unbounded, "star is unbounded in the queried direction");
  }

  BoundedSimplex lp_;
};

/// Image of the star under x -> W x + b.
inline StarSet affine_map(const StarSet& s, const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias) {
  require(weights.cols() == s.dim(), ErrorKind::DimensionMismatch, "affine_map: weight columns must equal star dimension");
  require(bias.size() == weights.rows(), ErrorKind::DimensionMismatch, "affine_map: bias length must equal weight rows");
  Eigen::VectorXd c = weights * s.center() + bias;
  Eigen::MatrixXd v = weights * s.basis();
  return StarSet(std::move(c), std::move(v), s.constraints(), s.bounds(), s.alpha_lower(), s.alpha_upper());
}

/// Exact range of coordinate i, solved as two LPs.
inline Interval star_coordinate_bounds(const StarSet& s, Eigen::Index i) {
  require(i >= 0 && i < s.dim(), ErrorKind::DimensionMismatch, "star_coordinate_bounds: index out of range");
  StarBounds lp(s);
  return lp.coordinate(s, i);
}

/// Box as a star: one alpha per non-degenerate coordinate ranging over that
/// coordinate's interval (unit basis, zero center), so coordinate bounds
/// reproduce the box endpoints exactly. Zero-width coordinates are folded
/// into the center.
inline StarSet box_to_star(const IntervalBox& box) {
  const Eigen::Index n = box.dim();
  std::vector<Eigen::Index> free_dims;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!box.is_degenerate(i)) free_dims.push_back(i);
  }
  const Eigen::Index p = static_cast<Eigen::Index>(free_dims.size());
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd center = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd lo(p), hi(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index i = free_dims[static_cast<std::size_t>(k)];
    basis(i, k) = 1.0;
    lo[k] = box.lower(i);
    hi[k] = box.upper(i);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (box.is_degenerate(i)) center[i] = box.lower(i);
  }
  return StarSet::from_box_parameters(std::move(center), std::move(basis), std::move(lo), std::move(hi));
}

/// Per-coordinate bounds of one star, or nullopt if it is empty.
inline std::optional<IntervalBox> star_bounds(const StarSet& s) {
  StarBounds lp(s);
  if (lp.empty()) return std::nullopt;
  Eigen::VectorXd lo(s.dim());
  Eigen::VectorXd hi(s.dim());
  for (Eigen::Index i = 0; i < s.dim(); ++i) {
    const Interval r = lp.coordinate(s, i);
    lo[i] = r.lower;
    hi[i] = std::max(r.lower, r.upper);
  }
  return IntervalBox(std::move(lo), std::move(hi));
}

/// Component-wise hull of all nonempty stars.
inline IntervalBox interval_hull(std::span<const StarSet> stars) {
  require(!stars.empty(), ErrorKind::AllEmpty, "interval_hull of an empty list");
  const Eigen::Index dim = stars.front().dim();
  std::optional<IntervalBox> hull;
  for (const StarSet& s : stars) {
    require(s.dim() == dim, ErrorKind::DimensionMismatch, "interval_hull: stars differ in dimension");
    std::optional<IntervalBox> b = star_bounds(s);
    if (!b) continue;
    hull = hull ? hull->hull(*b) : *b;
  }
  if (!hull) fail(ErrorKind::AllEmpty, "every star in the list is empty");
  return *hull;
}

}  // namespace cpreach
