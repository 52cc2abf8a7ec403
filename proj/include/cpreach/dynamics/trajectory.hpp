#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/error.hpp"

namespace cpreach {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One sampled rollout, time-major: component j of state k sits at k*n + j.
struct Trajectory {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  Eigen::VectorXd data;

  Eigen::Index length() const { return (K + 1) * n; }
  auto state(Eigen::Index k) const { return data.segment(k * n, n); }
};

/// L i.i.d. trajectories sharing (n, K), one per row.
struct TrajectoryDataset {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  std::uint64_t seed = 0;
  std::string model_name;
  double dt = 0.0;
  RowMatrix rows;

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index width() const { return (K + 1) * n; }

  Trajectory trajectory(Eigen::Index i) const {
    Trajectory t;
    t.n = n;
    t.K = K;
    t.data = rows.row(i).transpose();
    return t;
  }

  void validate() const {
    require(n > 0, ErrorKind::ShapeMismatch, "dataset state dimension must be positive");
    require(rows.cols() == width(), ErrorKind::ShapeMismatch, "dataset rows must have (K+1)*n columns");
  }
};

}  // namespace cpreach
