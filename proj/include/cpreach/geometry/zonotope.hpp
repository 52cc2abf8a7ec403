#pragma once

#include <Eigen/Dense>

#include "cpreach/error.hpp"
#include "cpreach/geometry/interval_box.hpp"

namespace cpreach {

/// Zonotope {center + G beta | beta in [-1,1]^k}; generators are the columns of G.
class Zonotope {
 public:
  Zonotope() = default;

  Zonotope(Eigen::VectorXd center, Eigen::MatrixXd generators)
      : center_(std::move(center)), generators_(std::move(generators)) {
    if (generators_.size() == 0) generators_.resize(center_.size(), 0);
    require(generators_.rows() == center_.size(), ErrorKind::DimensionMismatch,
            "zonotope generators must have the dimension of the center");
  }

  explicit Zonotope(const IntervalBox& box) : Zonotope(box.center(), box.radius().asDiagonal().toDenseMatrix()) {}

  Eigen::Index dim() const { return center_.size(); }
  Eigen::Index num_generators() const { return generators_.cols(); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& generators() const { return generators_; }

  /// center +- sum_k |g_k|, component-wise.
  IntervalBox interval_hull() const {
    const Eigen::VectorXd spread = generators_.cwiseAbs().rowwise().sum();
    return IntervalBox(center_ - spread, center_ + spread);
  }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd generators_;
};

inline Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
  require(a.dim() == b.dim(), ErrorKind::DimensionMismatch, "minkowski_sum of zonotopes with different dimensions");
  Eigen::MatrixXd gens(a.dim(), a.num_generators() + b.num_generators());
  gens << a.generators(), b.generators();
  return Zonotope(a.center() + b.center(), std::move(gens));
}

}  // namespace cpreach
