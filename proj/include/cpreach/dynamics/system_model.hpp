#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "cpreach/error.hpp"
#include "cpreach/geometry/interval_box.hpp"

namespace cpreach {

enum class SystemKind { ACC, Quadcopter, Laubloomis, Linear2D };

inline std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::ACC: return "ACC";
    case SystemKind::Quadcopter: return "Quadcopter";
    case SystemKind::Laubloomis: return "Laubloomis";
    case SystemKind::Linear2D: return "Linear2D";
  }
  return "Unknown";
}

inline SystemKind system_kind_from_string(std::string_view name) {
  if (name == "ACC") return SystemKind::ACC;
  if (name == "Quadcopter") return SystemKind::Quadcopter;
  if (name == "Laubloomis") return SystemKind::Laubloomis;
  if (name == "Linear2D") return SystemKind::Linear2D;
  fail(ErrorKind::Config, "unknown system model '" + std::string(name) + "'");
}

/// Spacing controller for the follower vehicle:
/// u = clamp(kp (x1 - x4 - safe_distance) + kv (x2 - x5), [u_min, u_max]).
struct AccController {
  double kp = 0.1;
  double kv = 0.5;
  double safe_distance = 10.0;
  double u_min = -3.0;
  double u_max = 3.0;
};

/// A black-box closed-loop system: vector field, feedback policy, additive
/// Gaussian noise held constant per sampling interval, and the initial box.
struct SystemModel {
  SystemKind kind = SystemKind::Linear2D;
  double dt = 0.1;
  Eigen::VectorXd noise_std;
  IntervalBox initial_box;
  AccController acc;
  Eigen::MatrixXd feedback_gain;  // Quadcopter: u = -feedback_gain * s (3 x 12)
  Eigen::Matrix2d linear_a;       // Linear2D drift matrix

  Eigen::Index state_dim() const { return initial_box.dim(); }
  std::string name() const { return to_string(kind); }

  Eigen::Index control_dim() const {
    switch (kind) {
      case SystemKind::ACC: return 1;
      case SystemKind::Quadcopter: return 3;
      default: return 0;
    }
  }

  void validate() const {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::Config, "sampling time must be positive");
    require(noise_std.size() == state_dim(), ErrorKind::Config, "noise_std length must equal the state dimension");
    require((noise_std.array() >= 0.0).all(), ErrorKind::Config, "noise_std must be nonnegative");
    const Eigen::Index expected = kind == SystemKind::ACC ? 6 : kind == SystemKind::Quadcopter ? 12
                                  : kind == SystemKind::Laubloomis ? 7 : 2;
    require(state_dim() == expected, ErrorKind::Config,
            name() + " requires an initial box of dimension " + std::to_string(expected));
    if (kind == SystemKind::Quadcopter) {
      require(feedback_gain.rows() == 3 && feedback_gain.cols() == 12, ErrorKind::Config,
              "quadcopter feedback gain must be 3 x 12");
    }
  }
};

namespace detail {

inline IntervalBox make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(lo.size())), h(static_cast<Eigen::Index>(hi.size()));
  std::copy(lo.begin(), lo.end(), l.data());
  std::copy(hi.begin(), hi.end(), h.data());
  return IntervalBox(l, h);
}

}  // namespace detail

inline constexpr double kAccFriction = 1e-4;
inline constexpr double kGravity = 9.81;

// Hover-stabilising state feedback for the quadcopter. The linearisation at
// s = 0, u = 0 decouples into a vertical double integrator (u1) and two
// fourth-order chains (u2 for y/roll, u3 for x/pitch); each chain is placed at
// a repeated pole s = -2, i.e. characteristic polynomial s^4 + 8s^3 + 24s^2 +
// 32s + 16 and s^2 + 4s + 4 for the vertical axis. Yaw (x9, x12) is left
// uncontrolled since it does not enter the linearised dynamics.
inline Eigen::MatrixXd quadcopter_hover_gain() {
  constexpr double g = kGravity;
  constexpr double b = 18.5185;
  constexpr double k0 = 16.0, k1 = 32.0, k2 = 24.0, k3 = 8.0;
  Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(3, 12);
  // u1 = 1.4 (-4 x3 + 4 x6)  since  x3'' = u1 / 1.4.
  gain(0, 2) = 1.4 * 4.0;
  gain(0, 5) = -1.4 * 4.0;
  // y-chain: x2' = x5, x5' = g x7, x7' = x10, x10' = b u2.
  gain(1, 1) = k0 / (g * b);
  gain(1, 4) = k1 / (g * b);
  gain(1, 6) = k2 * g / (g * b);
  gain(1, 9) = k3 * g / (g * b);
  // x-chain: x1' = x4, x4' = -g x8, x8' = x11, x11' = b u3.
  gain(2, 0) = -k0 / (g * b);
  gain(2, 3) = -k1 / (g * b);
  gain(2, 7) = k2 * g / (g * b);
  gain(2, 10) = k3 * g / (g * b);
  return gain;
}

inline SystemModel acc_model() {
  SystemModel m;
  m.kind = SystemKind::ACC;
  m.dt = 0.1;
  m.initial_box = detail::make_box({90, 32, 0, 10, 30, 0}, {110, 32.2, 0, 11, 30.2, 0});
  m.noise_std.resize(6);
  m.noise_std << 1, 0.1, 0.05, 1, 0.1, 0.05;
  return m;
}

inline SystemModel quadcopter_model() {
  SystemModel m;
  m.kind = SystemKind::Quadcopter;
  m.dt = 0.1;
  m.initial_box = detail::make_box({-0.2, -0.2, -0.2, -0.2, -0.2, -0.2, 0, 0, 0, 0, 0, 0},
                                   {0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0, 0, 0, 0, 0, 0});
  m.noise_std.resize(12);
  m.noise_std << 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01;
  m.feedback_gain = quadcopter_hover_gain();
  return m;
}

inline SystemModel laubloomis_model() {
  SystemModel m;
  m.kind = SystemKind::Laubloomis;
  m.dt = 0.01;
  m.initial_box = detail::make_box({1.05, 0.9, 1.35, 2.25, 0.85, -0.05, 0.3}, {1.35, 1.2, 1.65, 2.55, 1.15, 0.25, 0.6});
  m.noise_std = Eigen::VectorXd::Zero(7);
  return m;
}

inline SystemModel linear2d_model() {
  SystemModel m;
  m.kind = SystemKind::Linear2D;
  m.dt = 0.1;
  m.initial_box = detail::make_box({0.9, -0.1}, {1.1, 0.1});
  m.noise_std = Eigen::VectorXd::Constant(2, 0.01);
  m.linear_a << 0.0, 1.0, -1.0, -0.5;
  return m;
}

inline SystemModel default_model(SystemKind kind) {
  switch (kind) {
    case SystemKind::ACC: return acc_model();
    case SystemKind::Quadcopter: return quadcopter_model();
    case SystemKind::Laubloomis: return laubloomis_model();
    case SystemKind::Linear2D: return linear2d_model();
  }
  return linear2d_model();
}

/// Feedback policy u = controller(s).
inline Eigen::VectorXd controller(const SystemModel& model, const Eigen::VectorXd& s) {
  switch (model.kind) {
    case SystemKind::ACC: {
      const AccController& c = model.acc;
      const double u = c.kp * (s[0] - s[3] - c.safe_distance) + c.kv * (s[1] - s[4]);
      return Eigen::VectorXd::Constant(1, std::clamp(u, c.u_min, c.u_max));
    }
    case SystemKind::Quadcopter:
      return -model.feedback_gain * s;
    default:
      return Eigen::VectorXd(0);
  }
}

/// Noise-free vector field f(s, u).
inline Eigen::VectorXd rhs_eval(const SystemModel& model, const Eigen::VectorXd& s, const Eigen::VectorXd& u) {
  require(s.size() == model.state_dim(), ErrorKind::DimensionMismatch, "state length must equal the model dimension");
  Eigen::VectorXd ds(s.size());
  switch (model.kind) {
    case SystemKind::ACC: {
      require(u.size() == 1, ErrorKind::DimensionMismatch, "ACC expects one control input");
      const double mu = kAccFriction;
      ds << s[1], s[2], -2.0 * s[2] - 4.0 - mu * s[1] * s[1], s[4], s[5],
          -2.0 * s[5] + 2.0 * u[0] - mu * s[3] * s[3];
      break;
    }
    case SystemKind::Quadcopter: {
      require(u.size() == 3, ErrorKind::DimensionMismatch, "quadcopter expects three control inputs");
      const double x4 = s[3], x5 = s[4], x6 = s[5];
      const double x7 = s[6], x8 = s[7], x9 = s[8];
      const double x10 = s[9], x11 = s[10], x12 = s[11];
      const double c7 = std::cos(x7), s7 = std::sin(x7);
      const double c8 = std::cos(x8), s8 = std::sin(x8);
      const double c9 = std::cos(x9), s9 = std::sin(x9);
      if (std::abs(c8) < 1e-12) fail(ErrorKind::DomainError, "quadcopter pitch at +-pi/2 (cos(x8) = 0)");
      const double t8 = s8 / c8;
      ds[0] = c8 * c9 * x4 + (s7 * s8 * c9 - c7 * s9) * x5 + (c7 * s8 * c9 + s7 * s9) * x6;
      ds[1] = c8 * s9 * x4 + (s7 * s8 * s9 + c7 * c9) * x5 + (c7 * s8 * s9 - s7 * c9) * x6;
      ds[2] = s8 * x4 - s7 * c8 * x5 - c7 * c8 * x6;
      ds[3] = x12 * x5 - x11 * x6 - kGravity * s8;
      ds[4] = x10 * x6 - x12 * x4 + kGravity * c8 * s7;
      ds[5] = x11 * x4 - x10 * x5 + kGravity * c8 * c7 - kGravity - u[0] / 1.4;
      ds[6] = x10 + s7 * t8 * x11 + c7 * t8 * x12;
      ds[7] = c7 * x11 - s7 * x12;
      ds[8] = (s7 / c8) * x11 + (c7 / c8) * x12;
      ds[9] = -0.9259 * x11 * x12 + 18.5185 * u[1];
      ds[10] = 0.9259 * x10 * x12 + 18.5185 * u[2];
      ds[11] = 0.0;
      break;
    }
    case SystemKind::Laubloomis:
      ds << 1.4 * s[2] - 0.9 * s[0], 2.5 * s[4] - 1.5 * s[1], 0.6 * s[6] - 0.8 * s[2] * s[1],
          2.0 - 1.3 * s[3] * s[2], 0.7 * s[0] - 1.0 * s[3] * s[4], 0.3 * s[0] - 3.1 * s[5],
          1.8 * s[5] - 1.5 * s[6] * s[1];
      break;
    case SystemKind::Linear2D:
      ds = model.linear_a * s;
      break;
  }
  return ds;
}

}  // namespace cpreach
