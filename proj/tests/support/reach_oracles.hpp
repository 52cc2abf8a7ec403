#pragma once

// Independent membership and image oracles for star-set reachability tests.

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/geometry/interval_box.hpp"
#include "cpreach/reach/flowpipe.hpp"
#include "cpreach/surrogate/mlp.hpp"

namespace cpreach::testing {

inline constexpr double kMembershipTol = 1e-7;

/// Random ReLU net with standard-normal weights scaled by 1/sqrt(fan_in).
inline MLP random_net(const std::vector<Eigen::Index>& sizes, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MLP net = MLP::zeros(sizes);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    net.weights()[l] = Eigen::MatrixXd::NullaryExpr(sizes[l + 1], sizes[l], [&] { return scale * g(rng); });
    net.biases()[l] = Eigen::VectorXd::NullaryExpr(sizes[l + 1], [&] { return 0.5 * g(rng); });
  }
  return net;
}

inline IntervalBox random_box(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> w(0.05, 1.5);
  Eigen::VectorXd lo(dim), hi(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    lo[i] = g(rng);
    hi[i] = lo[i] + w(rng);
  }
  return {lo, hi};
}

inline Eigen::VectorXd uniform_in(const IntervalBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd x(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) x[i] = box.lower(i) + u(rng) * (box.upper(i) - box.lower(i));
  return x;
}

/// Input alpha for a point of a box_to_star star (unit basis over free dims).
inline Eigen::VectorXd box_alpha(const IntervalBox& box, const Eigen::VectorXd& x) {
  std::vector<double> a;
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    if (!box.is_degenerate(i)) a.push_back(x[i]);
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

/// Exact-star pieces keep the input parameterisation, so y = net(x) lies in
/// the union iff some piece admits the input alpha and maps it to y.
inline bool in_exact_union(const std::vector<StarSet>& stars, const Eigen::VectorXd& alpha, const Eigen::VectorXd& y) {
  return std::any_of(stars.begin(), stars.end(), [&](const StarSet& s) {
    return s.admits(alpha, kMembershipTol) && (s.map(alpha) - y).cwiseAbs().maxCoeff() <= kMembershipTol;
  });
}

/// Approx-star propagation with a witness: the relaxed variables are set to
/// the true ReLU values of their neurons, which the relaxation must admit.
struct ApproxWitness {
  StarSet star;
  std::vector<Eigen::VectorXd> alphas;  // one per tracked input point
};

inline ApproxWitness approx_with_witness(const MLP& net, const StarSet& input, std::vector<Eigen::VectorXd> alphas) {
  StarSet s = input;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    s = affine_map(s, net.weights()[l], net.biases()[l]);
    if (!net.is_hidden(l)) break;
    const auto traced = relu_layer_approx_traced(s);
    for (Eigen::VectorXd& a : alphas) {
      const Eigen::VectorXd pre = s.map(a);
      Eigen::VectorXd grown(a.size() + static_cast<Eigen::Index>(traced.relaxed.size()));
      grown.head(a.size()) = a;
      for (std::size_t k = 0; k < traced.relaxed.size(); ++k) {
        grown[a.size() + static_cast<Eigen::Index>(k)] = std::max(0.0, pre[traced.relaxed[k]]);
      }
      a = std::move(grown);
    }
    s = traced.star;
  }
  return {s, std::move(alphas)};
}

/// Hull of net over a uniform grid of a box with a 1-D free input.
inline IntervalBox grid_image_hull(const MLP& net, double lo, double hi, long points) {
  Eigen::MatrixXd x(1, points);
  for (long i = 0; i < points; ++i) {
    x(0, i) = i + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  const Eigen::MatrixXd y = net.evaluate_batch(x);
  return {y.rowwise().minCoeff(), y.rowwise().maxCoeff()};
}

inline bool box_contains(const IntervalBox& outer, const IntervalBox& inner, double tol) {
  for (Eigen::Index i = 0; i < outer.dim(); ++i) {
    if (inner.lower(i) < outer.lower(i) - tol || inner.upper(i) > outer.upper(i) + tol) return false;
  }
  return true;
}

}  // namespace cpreach::testing
