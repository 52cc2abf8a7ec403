#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/dynamics/simulate.hpp"
#include "cpreach/dynamics/trajectory.hpp"
#include "cpreach/error.hpp"
#include "cpreach/parallel.hpp"
#include "cpreach/surrogate/schedule.hpp"
#include "cpreach/surrogate/training.hpp"

namespace cpreach {

struct StageData {
  RowMatrix features;
  RowMatrix targets;
};

/// Training pairs for stage s (0-based): the pi_s states starting at
/// theta_s map to the pi_{s+1} states starting at theta_{s+1}.
inline StageData decompose_dataset(const TrajectoryDataset& ds, const SubHorizonSchedule& sched, std::size_t stage) {
  ds.validate();
  sched.check_horizon(ds.K);
  require(stage < sched.num_models(), ErrorKind::ScheduleMismatch,
          "stage " + std::to_string(stage) + " is out of range for a schedule with " +
              std::to_string(sched.num_models()) + " models");
  const Eigen::Index n = ds.n;
  StageData out;
  out.features = ds.rows.middleCols(sched.feature_offset(stage) * n, sched.pi(stage) * n);
  out.targets = ds.rows.middleCols(sched.target_offset(stage) * n, sched.pi(stage + 1) * n);
  return out;
}

/// Chained sub-horizon models F: R^n -> R^{(K+1)n}. The prediction buffer
/// starts as s0; each stage reads the trailing pi_s states and appends its
/// pi_{s+1} predicted states.
class CompositeSurrogate {
 public:
  CompositeSurrogate() = default;

  CompositeSurrogate(SubHorizonSchedule schedule, std::vector<SubModel> models, Eigen::Index n)
      : schedule_(std::move(schedule)), models_(std::move(models)), n_(n) {
    validate();
  }

  const SubHorizonSchedule& schedule() const { return schedule_; }
  const std::vector<SubModel>& models() const { return models_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index K() const { return schedule_.total() - 1; }
  Eigen::Index output_dim() const { return schedule_.total() * n_; }

  Eigen::VectorXd predict(const Eigen::VectorXd& s0) const {
    require(s0.size() == n_, ErrorKind::DimensionMismatch, "initial state has the wrong dimension");
    Eigen::VectorXd buffer(output_dim());
    buffer.head(n_) = s0;
    for (std::size_t s = 0; s < models_.size(); ++s) {
      const Eigen::Index in_at = schedule_.feature_offset(s) * n_;
      const Eigen::Index out_at = schedule_.target_offset(s) * n_;
      const Eigen::Index out_len = schedule_.pi(s + 1) * n_;
      buffer.segment(out_at, out_len) = models_[s](buffer.segment(in_at, schedule_.pi(s) * n_));
    }
    return buffer;
  }

  void validate() const {
    require(n_ > 0, ErrorKind::DimensionMismatch, "state dimension must be positive");
    require(models_.size() == schedule_.num_models(), ErrorKind::ScheduleMismatch,
            "model count must equal the number of schedule stages");
    for (std::size_t s = 0; s < models_.size(); ++s) {
      const std::string where = "stage " + std::to_string(s);
      require(models_[s].input_dim() == schedule_.pi(s) * n_, ErrorKind::DimensionMismatch,
              where + ": model input must have pi_s * n entries");
      require(models_[s].output_dim() == schedule_.pi(s + 1) * n_, ErrorKind::DimensionMismatch,
              where + ": model output must have pi_{s+1} * n entries");
      require(models_[s].input.mean.size() == models_[s].input_dim() &&
                  models_[s].output.mean.size() == models_[s].output_dim(),
              ErrorKind::DimensionMismatch, where + ": standardisation has the wrong length");
    }
  }

 private:
  SubHorizonSchedule schedule_;
  std::vector<SubModel> models_;
  Eigen::Index n_ = 0;
};

inline CompositeSurrogate compose(std::vector<SubModel> models, const SubHorizonSchedule& sched, Eigen::Index n) {
  return CompositeSurrogate(sched, std::move(models), n);
}

/// Trains every stage independently (in parallel) with per-stage seeds
/// derived from hp.seed. hidden lists the hidden-layer widths.
inline CompositeSurrogate train_composite(const TrajectoryDataset& ds, const SubHorizonSchedule& sched,
                                          const std::vector<Eigen::Index>& hidden, const TrainingHyperparams& hp) {
  sched.check_horizon(ds.K);
  std::vector<SubModel> models(sched.num_models());
  parallel_for(models.size(), [&](std::size_t s) {
    const StageData data = decompose_dataset(ds, sched, s);
    std::vector<Eigen::Index> sizes{data.features.cols()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(data.targets.cols());
    TrainingHyperparams stage_hp = hp;
    stage_hp.seed = mix_seed(hp.seed, s);
    try {
      models[s] = train_model(data.features, data.targets, sizes, stage_hp);
    } catch (const Error& e) {
      fail(e.kind(), "stage " + std::to_string(s) + ": " + e.message());
    }
  });
  return CompositeSurrogate(sched, std::move(models), ds.n);
}

}  // namespace cpreach
