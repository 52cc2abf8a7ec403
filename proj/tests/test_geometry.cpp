#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cpreach/geometry/interval_box.hpp"
#include "cpreach/geometry/star_set.hpp"
#include "cpreach/geometry/zonotope.hpp"

using namespace cpreach;

namespace {

IntervalBox box(std::initializer_list<std::pair<double, double>> sides) {
  Eigen::VectorXd lo(static_cast<Eigen::Index>(sides.size()));
  Eigen::VectorXd hi(static_cast<Eigen::Index>(sides.size()));
  Eigen::Index i = 0;
  for (const auto& [a, b] : sides) {
    lo[i] = a;
    hi[i] = b;
    ++i;
  }
  return IntervalBox(lo, hi);
}

// Rejection-sample alpha from the star's parameter box until C alpha <= d.
std::vector<Eigen::VectorXd> sample_alpha(const StarSet& s, int count, std::mt19937_64& rng) {
  std::vector<Eigen::VectorXd> out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long attempts = 0;
  while (static_cast<int>(out.size()) < count && attempts < 50L * count) {
    ++attempts;
    Eigen::VectorXd a(s.num_alpha());
    for (Eigen::Index k = 0; k < s.num_alpha(); ++k) {
      a[k] = s.alpha_lower()[k] + u(rng) * (s.alpha_upper()[k] - s.alpha_lower()[k]);
    }
    if (s.admits(a, 0.0)) out.push_back(a);
  }
  return out;
}

}  // namespace

TEST(IntervalBox, RejectsInvertedBounds) {
  Eigen::VectorXd lo(1), hi(1);
  lo << 1.0;
  hi << 0.0;
  EXPECT_THROW(IntervalBox(lo, hi), Error);
}

TEST(AffineMap, IdentityKeepsRepresentation) {
  const StarSet s = box_to_star(box({{0, 2}, {-1, 1}}));
  const StarSet t = affine_map(s, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  EXPECT_EQ(t.center(), s.center());
  EXPECT_EQ(t.basis(), s.basis());
}

TEST(AffineMap, ScalesAndShiftsAnInterval) {
  const StarSet s = box_to_star(box({{-1, 1}}));
  Eigen::MatrixXd w(1, 1);
  w << 2;
  Eigen::VectorXd b(1);
  b << 1;
  const Interval r = star_coordinate_bounds(affine_map(s, w, b), 0);
  EXPECT_DOUBLE_EQ(r.lower, -1.0);
  EXPECT_DOUBLE_EQ(r.upper, 3.0);
}

TEST(AffineMap, SumOfUnitBoxCoordinates) {
  // Vertex oracle: x1 + x2 over [-1,1]^2 ranges over {-2, 0, 0, 2}.
  const StarSet s = box_to_star(box({{-1, 1}, {-1, 1}}));
  Eigen::MatrixXd w(1, 2);
  w << 1, 1;
  const Interval r = star_coordinate_bounds(affine_map(s, w, Eigen::VectorXd::Zero(1)), 0);
  EXPECT_DOUBLE_EQ(r.lower, -2.0);
  EXPECT_DOUBLE_EQ(r.upper, 2.0);
}

TEST(AffineMap, RejectsDimensionMismatch) {
  const StarSet s = box_to_star(box({{-1, 1}}));
  EXPECT_THROW(affine_map(s, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)), Error);
}

TEST(AffineMap, CommutesWithSampling) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const StarSet s = box_to_star(box({{-1, 2}, {0, 1}, {-0.5, 0.5}}));
  Eigen::MatrixXd w(2, 3);
  Eigen::VectorXd b(2);
  for (int i = 0; i < 2; ++i) {
    b[i] = g(rng);
    for (int j = 0; j < 3; ++j) w(i, j) = g(rng);
  }
  const StarSet t = affine_map(s, w, b);
  for (const Eigen::VectorXd& a : sample_alpha(s, 200, rng)) {
    EXPECT_LE((t.map(a) - (w * s.map(a) + b)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Zonotope, ZeroElementOfMinkowskiSum) {
  const Zonotope a(box({{-1, 1}, {2, 5}}));
  const Zonotope zero(Eigen::VectorXd::Zero(2), Eigen::MatrixXd(2, 0));
  const Zonotope s = minkowski_sum(a, zero);
  EXPECT_EQ(s.center(), a.center());
  EXPECT_EQ(s.generators(), a.generators());
}

TEST(Zonotope, IntervalSumMatchesSignEnumeration) {
  const Zonotope a(box({{-1, 1}}));
  const Zonotope b(box({{-2, 2}}));
  const Zonotope s = minkowski_sum(a, b);
  // Brute force over generator sign patterns.
  double lo = INFINITY, hi = -INFINITY;
  for (int mask = 0; mask < (1 << s.num_generators()); ++mask) {
    double v = s.center()[0];
    for (Eigen::Index k = 0; k < s.num_generators(); ++k) v += ((mask >> k) & 1 ? 1.0 : -1.0) * s.generators()(0, k);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_DOUBLE_EQ(lo, -3.0);
  EXPECT_DOUBLE_EQ(hi, 3.0);
  EXPECT_EQ(s.interval_hull(), box({{-3, 3}}));
}

TEST(Zonotope, DiagonalInflationLeavesPrefixWidths) {
  const Zonotope xbar(box({{0, 1}, {2, 3}, {4, 6}}));
  Eigen::VectorXd r(3);
  r << 0.0, 0.5, 0.25;
  const Zonotope inflated = minkowski_sum(xbar, Zonotope(Eigen::VectorXd::Zero(3), r.asDiagonal().toDenseMatrix()));
  const IntervalBox h = inflated.interval_hull();
  EXPECT_DOUBLE_EQ(h.lower(0), 0.0);
  EXPECT_DOUBLE_EQ(h.upper(0), 1.0);
  EXPECT_DOUBLE_EQ(h.lower(1), 1.5);
  EXPECT_DOUBLE_EQ(h.upper(2), 6.25);
}

TEST(Zonotope, MinkowskiHullIsSumOfHulls) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 4;
    Eigen::MatrixXd ga(m, 1 + trial % 3), gb(m, 2);
    Eigen::VectorXd ca(m), cb(m);
    for (int i = 0; i < m; ++i) {
      ca[i] = g(rng);
      cb[i] = g(rng);
      for (Eigen::Index k = 0; k < ga.cols(); ++k) ga(i, k) = g(rng);
      for (Eigen::Index k = 0; k < gb.cols(); ++k) gb(i, k) = g(rng);
    }
    const Zonotope a(ca, ga), b(cb, gb);
    const IntervalBox ha = a.interval_hull(), hb = b.interval_hull();
    const IntervalBox hs = minkowski_sum(a, b).interval_hull();
    EXPECT_LE((hs.lower() - (ha.lower() + hb.lower())).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((hs.upper() - (ha.upper() + hb.upper())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Zonotope, RejectsDimensionMismatch) {
  EXPECT_THROW(minkowski_sum(Zonotope(box({{0, 1}})), Zonotope(box({{0, 1}, {0, 1}}))), Error);
}

TEST(StarBounds, PointStar) {
  Eigen::VectorXd c(3);
  c << 1, 2, 3;
  const StarSet s = StarSet::from_box_parameters(c, Eigen::MatrixXd::Zero(3, 2), -Eigen::VectorXd::Ones(2),
                                                 Eigen::VectorXd::Ones(2));
  for (int i = 0; i < 3; ++i) {
    const Interval r = star_coordinate_bounds(s, i);
    EXPECT_EQ(r.lower, c[i]);
    EXPECT_EQ(r.upper, c[i]);
  }
}

TEST(StarBounds, UnitBoxAroundCenterMatchesVertices) {
  Eigen::VectorXd c(2);
  c << 0.3, -4.0;
  const StarSet s = StarSet::from_box_parameters(c, Eigen::MatrixXd::Identity(2, 2), -Eigen::VectorXd::Ones(2),
                                                 Eigen::VectorXd::Ones(2));
  for (int i = 0; i < 2; ++i) {
    // Vertex enumeration over the four corners.
    double lo = INFINITY, hi = -INFINITY;
    for (int mask = 0; mask < 4; ++mask) {
      Eigen::Vector2d a((mask & 1) ? 1.0 : -1.0, (mask & 2) ? 1.0 : -1.0);
      lo = std::min(lo, s.map(a)[i]);
      hi = std::max(hi, s.map(a)[i]);
    }
    const Interval r = star_coordinate_bounds(s, i);
    EXPECT_DOUBLE_EQ(r.lower, lo);
    EXPECT_DOUBLE_EQ(r.upper, hi);
  }
}

TEST(StarBounds, EmptyStarRaises) {
  StarSet s = box_to_star(box({{-1, 1}}));
  Eigen::RowVectorXd row(1);
  row << 1;
  s = s.with_constraint(row, -2.0);
  EXPECT_THROW(star_coordinate_bounds(s, 0), Error);
  try {
    star_coordinate_bounds(s, 0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptySet);
  }
}

TEST(StarBounds, UnboundedStarRaises) {
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lo(1), hi(1);
  lo << 0.0;
  hi << inf;
  const StarSet s = StarSet::from_box_parameters(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1), lo, hi);
  try {
    star_coordinate_bounds(s, 0);
    FAIL() << "expected Unbounded";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unbounded);
  }
}

TEST(StarBounds, ContainRejectionSamplesOfRandomStars) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    // Random 3-D star with 6 constraints; the origin is kept feasible.
    Eigen::VectorXd c(3);
    Eigen::MatrixXd v(3, 3), C(6, 3);
    Eigen::VectorXd d(6);
    for (int i = 0; i < 3; ++i) {
      c[i] = g(rng);
      for (int k = 0; k < 3; ++k) v(i, k) = g(rng);
    }
    for (int r = 0; r < 6; ++r) {
      for (int k = 0; k < 3; ++k) C(r, k) = g(rng);
      d[r] = 0.2 + std::abs(u(rng));
    }
    const StarSet s(c, v, C, d, -Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3));
    const auto samples = sample_alpha(s, 10000, rng);
    ASSERT_EQ(samples.size(), 10000u);
    for (int i = 0; i < 3; ++i) {
      const Interval r = star_coordinate_bounds(s, i);
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& a : samples) {
        const double x = s.map(a)[i];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        ++checked;
      }
      EXPECT_GE(lo, r.lower - 1e-9);
      EXPECT_LE(hi, r.upper + 1e-9);
      // The LP bound is attained: samples approach it.
      EXPECT_LT(lo - r.lower, 0.5 * (r.upper - r.lower));
    }
  }
  EXPECT_EQ(checked, 300000);
}

TEST(BoxToStar, DegenerateBoxIsPoint) {
  const StarSet s = box_to_star(box({{2, 2}, {-1, -1}}));
  EXPECT_EQ(s.num_alpha(), 0);
  EXPECT_DOUBLE_EQ(star_coordinate_bounds(s, 0).lower, 2.0);
  EXPECT_DOUBLE_EQ(star_coordinate_bounds(s, 1).upper, -1.0);
}

TEST(BoxToStar, UnitBasisOverTheBoxIntervals) {
  const StarSet s = box_to_star(box({{0, 2}, {-1, 1}}));
  EXPECT_EQ(s.center(), Eigen::Vector2d::Zero());
  EXPECT_EQ(s.basis(), Eigen::Matrix2d::Identity());
  EXPECT_EQ(s.alpha_lower(), Eigen::Vector2d(0, -1));
  EXPECT_EQ(s.alpha_upper(), Eigen::Vector2d(2, 1));
}

TEST(BoxToStar, RoundTripsThroughCoordinateBounds) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + trial % 5;
    Eigen::VectorXd lo(m), hi(m);
    for (int i = 0; i < m; ++i) {
      lo[i] = g(rng);
      hi[i] = (trial + i) % 3 == 0 ? lo[i] : lo[i] + std::abs(g(rng));
    }
    const IntervalBox b(lo, hi);
    const StarSet s = box_to_star(b);
    for (int i = 0; i < m; ++i) {
      const Interval r = star_coordinate_bounds(s, i);
      EXPECT_EQ(r.lower, b.lower(i));
      EXPECT_EQ(r.upper, b.upper(i));
    }
  }
}

TEST(IntervalHull, SingleStar) {
  const IntervalBox b = box({{0, 2}, {-1, 3}});
  const std::vector<StarSet> stars{box_to_star(b)};
  EXPECT_EQ(interval_hull(stars), b);
}

TEST(IntervalHull, TwoPoints) {
  const std::vector<StarSet> stars{box_to_star(IntervalBox::point(Eigen::Vector2d(0, 0))),
                                   box_to_star(IntervalBox::point(Eigen::Vector2d(1, 2)))};
  EXPECT_EQ(interval_hull(stars), box({{0, 1}, {0, 2}}));
}

TEST(IntervalHull, SkipsEmptyStarsAndFailsWhenAllEmpty) {
  Eigen::RowVectorXd row(1);
  row << 1;
  const StarSet empty = box_to_star(box({{-1, 1}})).with_constraint(row, -5.0);
  const StarSet full = box_to_star(box({{-1, 1}}));
  EXPECT_EQ(interval_hull(std::vector<StarSet>{empty, full}), box({{-1, 1}}));
  try {
    interval_hull(std::vector<StarSet>{empty, empty});
    FAIL() << "expected AllEmpty";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AllEmpty);
  }
}

TEST(IntervalHull, IsMonotoneUnderInsertion) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<StarSet> stars;
  std::optional<IntervalBox> previous;
  for (int k = 0; k < 8; ++k) {
    Eigen::VectorXd lo(2), hi(2);
    for (int i = 0; i < 2; ++i) {
      lo[i] = g(rng);
      hi[i] = lo[i] + std::abs(g(rng));
    }
    stars.push_back(box_to_star(IntervalBox(lo, hi)));
    const IntervalBox h = interval_hull(stars);
    if (previous) EXPECT_TRUE(h.contains(*previous));
    previous = h;
  }
}
