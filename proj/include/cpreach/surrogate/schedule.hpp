#pragma once

#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/error.hpp"

namespace cpreach {

/// Sub-horizon lengths pi_1..pi_v with pi_1 = 1 and sum = K + 1. Stage s
/// (0-based) trains a model from the pi_s states starting at offset(s) to the
/// pi_{s+1} states starting at offset(s+1).
class SubHorizonSchedule {
 public:
  SubHorizonSchedule() = default;

  explicit SubHorizonSchedule(std::vector<Eigen::Index> pis) : pis_(std::move(pis)) {
    require(pis_.size() >= 2, ErrorKind::ScheduleMismatch, "a schedule needs at least two sub-horizons");
    require(pis_.front() == 1, ErrorKind::ScheduleMismatch, "the first sub-horizon must be the initial state (pi_1 = 1)");
    for (Eigen::Index p : pis_) require(p >= 1, ErrorKind::ScheduleMismatch, "sub-horizon lengths must be positive");
  }

  /// Pi = {1, 1, ..., 1}: one single-step model per time step.
  static SubHorizonSchedule one_step(Eigen::Index K) {
    require(K >= 1, ErrorKind::ScheduleMismatch, "horizon must be at least 1");
    return SubHorizonSchedule(std::vector<Eigen::Index>(static_cast<std::size_t>(K + 1), 1));
  }

  const std::vector<Eigen::Index>& pis() const { return pis_; }
  std::size_t size() const { return pis_.size(); }
  std::size_t num_models() const { return pis_.size() - 1; }
  Eigen::Index pi(std::size_t i) const { return pis_[i]; }

  /// theta_i = pi_1 + ... + pi_i, with theta_0 = 0.
  Eigen::Index theta(std::size_t i) const {
    return std::accumulate(pis_.begin(), pis_.begin() + static_cast<std::ptrdiff_t>(i), Eigen::Index{0});
  }

  Eigen::Index total() const { return theta(pis_.size()); }

  /// First state index consumed by stage s.
  Eigen::Index feature_offset(std::size_t stage) const { return theta(stage); }
  /// First state index produced by stage s.
  Eigen::Index target_offset(std::size_t stage) const { return theta(stage + 1); }

  void check_horizon(Eigen::Index K) const {
    if (total() != K + 1) {
      fail(ErrorKind::ScheduleMismatch, "sub-horizons sum to " + std::to_string(total()) + " but K + 1 = " +
                                            std::to_string(K + 1));
    }
  }

  friend bool operator==(const SubHorizonSchedule&, const SubHorizonSchedule&) = default;

 private:
  std::vector<Eigen::Index> pis_;
};

}  // namespace cpreach
