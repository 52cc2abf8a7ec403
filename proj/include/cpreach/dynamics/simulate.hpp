#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "cpreach/dynamics/system_model.hpp"
#include "cpreach/dynamics/trajectory.hpp"
#include "cpreach/error.hpp"
#include "cpreach/parallel.hpp"

namespace cpreach {

inline constexpr int kRk4Substeps = 4;

using Rng = std::mt19937_64;

/// Independent stream for (seed, index); parallel and serial generation agree.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// splitmix64 finaliser; used to derive disjoint seeds for separate datasets.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Eigen::VectorXd sample_initial(const IntervalBox& box, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd s(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    const double u = unit(rng);
    s[i] = box.is_degenerate(i) ? box.lower(i) : box.lower(i) + u * (box.upper(i) - box.lower(i));
  }
  return s;
}

/// K-step rollout from s0. Per step: one noise draw and one control
/// evaluation, both held while RK4 integrates over dt.
inline Trajectory simulate_trajectory(const SystemModel& model, const Eigen::VectorXd& s0, Eigen::Index K, Rng& rng) {
  const Eigen::Index n = model.state_dim();
  require(s0.size() == n, ErrorKind::DimensionMismatch, "initial state length must equal the model dimension");
  require(K >= 0, ErrorKind::DimensionMismatch, "horizon must be nonnegative");
  Trajectory traj;
  traj.n = n;
  traj.K = K;
  traj.data.resize((K + 1) * n);
  traj.data.head(n) = s0;

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double h = model.dt / kRk4Substeps;
  Eigen::VectorXd s = s0;
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = model.noise_std[i] * gauss(rng);
    const Eigen::VectorXd u = controller(model, s);
    auto f = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return rhs_eval(model, x, u) + v; };
    for (int sub = 0; sub < kRk4Substeps; ++sub) {
      const Eigen::VectorXd k1 = f(s);
      const Eigen::VectorXd k2 = f(s + 0.5 * h * k1);
      const Eigen::VectorXd k3 = f(s + 0.5 * h * k2);
      const Eigen::VectorXd k4 = f(s + h * k3);
      s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!s.allFinite()) fail(ErrorKind::NonFinite, "state became non-finite at step " + std::to_string(k + 1));
    traj.data.segment((k + 1) * n, n) = s;
  }
  return traj;
}

/// L independent trajectories; trajectory i uses stream_rng(seed, i) for both
/// its initial state and its noise.
inline TrajectoryDataset generate_dataset(const SystemModel& model, Eigen::Index L, Eigen::Index K, std::uint64_t seed) {
  require(L >= 1, ErrorKind::Config, "dataset size must be at least 1");
  model.validate();
  TrajectoryDataset ds;
  ds.n = model.state_dim();
  ds.K = K;
  ds.seed = seed;
  ds.model_name = model.name();
  ds.dt = model.dt;
  ds.rows.resize(L, (K + 1) * ds.n);
  parallel_for(static_cast<std::size_t>(L), [&](std::size_t i) {
    Rng rng = stream_rng(seed, i);
    const Eigen::VectorXd s0 = sample_initial(model.initial_box, rng);
    try {
      ds.rows.row(static_cast<Eigen::Index>(i)) = simulate_trajectory(model, s0, K, rng).data.transpose();
    } catch (const Error& e) {
      throw Error(e.kind(), "trajectory " + std::to_string(i) + ": " + e.message());
    }
  });
  return ds;
}

}  // namespace cpreach
