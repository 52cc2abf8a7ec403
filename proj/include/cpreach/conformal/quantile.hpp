#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "cpreach/error.hpp"

namespace cpreach {

/// ceil(x), except that x within slack of an integer counts as that integer.
/// slack should cover the rounding already present in x, so that a value
/// meant to be integral is not pushed to the next one.
inline double ceil_within(double x, double slack) {
  const double r = std::nearbyint(x);
  return std::abs(x - r) <= slack ? r : std::ceil(x);
}

inline void check_probability(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream msg;
    msg << name << " must lie in (0, 1), got " << p;
    fail(ErrorKind::DomainError, msg.str());
  }
}

/// Per-component confidence delta = 1 - epsilon / (n K) that makes the union
/// over the n K inflated components fail with probability at most epsilon.
inline double delta_from_epsilon(double epsilon, std::int64_t n, std::int64_t K) {
  check_probability(epsilon, "epsilon");
  require(n >= 1 && K >= 1, ErrorKind::DomainError, "n and K must be positive");
  const double delta = 1.0 - epsilon / static_cast<double>(n * K);
  check_probability(delta, "delta");
  return delta;
}

/// Joint confidence 1 - n K (1 - delta) of the union-bound inflation.
inline double joint_confidence(double delta, std::int64_t n, std::int64_t K) {
  return 1.0 - static_cast<double>(n * K) * (1.0 - delta);
}

/// ell = ceil((L + 1) delta), 1-indexed rank of the conformal quantile. The
/// slack absorbs the representation error of delta (half an ulp, scaled by
/// L + 1) plus the rounding of the product.
inline std::int64_t quantile_index(std::int64_t L, double delta) {
  require(L >= 1, ErrorKind::DomainError, "calibration size must be positive");
  check_probability(delta, "delta");
  const double scale = static_cast<double>(L + 1);
  const double x = scale * delta;
  const double eps = std::numeric_limits<double>::epsilon();
  const double slack = scale * eps * 0.5 + std::abs(x) * eps;
  return static_cast<std::int64_t>(ceil_within(x, slack));
}

inline bool calibration_feasible(std::int64_t L, double delta) { return quantile_index(L, delta) <= L; }

struct CalibrationSize {
  std::int64_t exact_min = 0;    // smallest L with ceil((L+1) delta) <= L
  std::int64_t paper_bound = 0;  // ceil((1 + delta) / (1 - delta)), sufficient but not necessary
};

/// Both calibration-size bounds. exact_min solves (L + 1) delta <= L, i.e.
/// L >= delta / (1 - delta), then is confirmed against quantile_index.
inline CalibrationSize min_calibration_size(double delta) {
  check_probability(delta, "delta");
  const double eps = std::numeric_limits<double>::epsilon();
  const double gap = 1.0 - delta;  // exact for delta >= 0.5
  // Relative uncertainty of gap from the half-ulp representation error of delta.
  const double rel = 0.5 * eps / gap + 4.0 * eps;

  const double ratio = delta / gap;
  auto L = std::max<std::int64_t>(1, static_cast<std::int64_t>(ceil_within(ratio, ratio * rel)));
  while (L > 1 && calibration_feasible(L - 1, delta)) --L;
  while (!calibration_feasible(L, delta)) ++L;

  const double paper = (1.0 + delta) / gap;
  CalibrationSize out;
  out.exact_min = L;
  out.paper_bound = static_cast<std::int64_t>(ceil_within(paper, paper * rel));
  return out;
}

struct QuantileResult {
  double value = 0.0;
  std::int64_t ell = 0;
};

/// quantile_index, rejecting calibration sets too small for delta.
inline std::int64_t feasible_quantile_index(std::int64_t L, double delta) {
  const std::int64_t ell = quantile_index(L, delta);
  if (ell > L) {
    const CalibrationSize need = min_calibration_size(delta);
    std::ostringstream msg;
    msg << "ceil((L+1)*delta) = " << ell << " exceeds L = " << L << " for delta = " << delta
        << "; need L >= " << need.exact_min << " (conservative bound " << need.paper_bound << ")";
    fail(ErrorKind::InsufficientCalibration, msg.str());
  }
  return ell;
}

/// ell-th smallest residual with ell = ceil((L + 1) delta). Throws
/// InsufficientCalibration instead of falling back to the maximum.
inline QuantileResult conformal_quantile(std::vector<double> column, double delta) {
  require(!column.empty(), ErrorKind::InsufficientCalibration, "residual column is empty");
  const std::int64_t ell = feasible_quantile_index(static_cast<std::int64_t>(column.size()), delta);
  const auto rank = column.begin() + (ell - 1);
  std::nth_element(column.begin(), rank, column.end());
  return {*rank, ell};
}

}  // namespace cpreach
