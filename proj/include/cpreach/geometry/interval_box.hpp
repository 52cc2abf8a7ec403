#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "cpreach/error.hpp"

namespace cpreach {

/// Axis-aligned box {x | lower <= x <= upper}.
class IntervalBox {
 public:
  IntervalBox() = default;

  IntervalBox(Eigen::VectorXd lower, Eigen::VectorXd upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    require(lower_.size() == upper_.size(), ErrorKind::DimensionMismatch, "box lower/upper lengths differ");
    require(lower_.size() > 0, ErrorKind::DimensionMismatch, "box must have positive dimension");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
      if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] > upper_[i]) {
        std::ostringstream msg;
        msg << "invalid interval [" << lower_[i] << ", " << upper_[i] << "] at coordinate " << i;
        fail(ErrorKind::DimensionMismatch, msg.str());
      }
    }
  }

  static IntervalBox point(const Eigen::VectorXd& p) { return IntervalBox(p, p); }

  Eigen::Index dim() const { return lower_.size(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  double lower(Eigen::Index i) const { return lower_[i]; }
  double upper(Eigen::Index i) const { return upper_[i]; }

  Eigen::VectorXd center() const { return 0.5 * (lower_ + upper_); }
  Eigen::VectorXd radius() const { return 0.5 * (upper_ - lower_); }
  Eigen::VectorXd widths() const { return upper_ - lower_; }

  bool is_degenerate(Eigen::Index i) const { return lower_[i] == upper_[i]; }

  /// Product of side lengths.
  double volume() const { return widths().prod(); }

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (Eigen::Index i = 0; i < dim(); ++i) {
      if (!(x[i] >= lower_[i] - tol && x[i] <= upper_[i] + tol)) return false;
    }
    return true;
  }

  bool contains(const IntervalBox& other, double tol = 0.0) const {
    if (other.dim() != dim()) return false;
    return ((other.lower_.array() >= lower_.array() - tol) && (other.upper_.array() <= upper_.array() + tol)).all();
  }

  /// Smallest box containing both operands.
  IntervalBox hull(const IntervalBox& other) const {
    require(other.dim() == dim(), ErrorKind::DimensionMismatch, "hull of boxes with different dimensions");
    return IntervalBox(lower_.cwiseMin(other.lower_), upper_.cwiseMax(other.upper_));
  }

  friend bool operator==(const IntervalBox& a, const IntervalBox& b) {
    return a.lower_.size() == b.lower_.size() && a.lower_ == b.lower_ && a.upper_ == b.upper_;
  }

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

}  // namespace cpreach
