#pragma once

// Dense bounded-variable primal simplex for the small LPs that arise when
// bounding star sets:
//
//     minimize / maximize   w . alpha
//     subject to            C alpha <= d,   lo <= alpha <= hi
//
// Variable bounds are handled implicitly (nonbasic variables sit at either
// bound) so the box constraints of a star never enter the tableau as rows.
// Phase 1 runs once per constraint system; every later objective reuses the
// last feasible basis, which makes repeated bound queries on the same star
// cheap.
//
// The tableau is never refactorised, so long warm-started runs accumulate
// rounding. Each result therefore also carries a certified bound computed on
// the original data from the Lagrangian dual: for any y >= 0,
//     min w.alpha >= -y.d + sum_k min_{lo_k <= a <= hi_k} (w + C^T y)_k a,
// with y read off the slack reduced costs. A large primal/dual gap triggers
// one rebuild from scratch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/error.hpp"

namespace cpreach {

inline constexpr double kLpTolerance = 1e-9;

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Optimal;
  double value = 0.0;     // objective at point
  double bound = 0.0;     // certified: <= true minimum, or >= true maximum
  Eigen::VectorXd point;  // optimal alpha (empty unless Optimal)
};

class BoundedSimplex {
 public:
  BoundedSimplex(const Eigen::MatrixXd& constraints, const Eigen::VectorXd& bounds,
                 const Eigen::VectorXd& lower, const Eigen::VectorXd& upper)
      : num_alpha_(lower.size()), C_(constraints), d_(bounds), lo_(lower), hi_(upper) {
    require(constraints.rows() == bounds.size(), ErrorKind::DimensionMismatch,
            "constraint matrix rows must match bound vector length");
    require(constraints.cols() == num_alpha_ || constraints.rows() == 0, ErrorKind::DimensionMismatch,
            "constraint matrix columns must match variable count");
    require(upper.size() == num_alpha_, ErrorKind::DimensionMismatch, "variable bound lengths differ");
    build(constraints, bounds, lower, upper);
  }

  bool feasible() {
    ensure_phase1();
    return feasible_;
  }

  LpResult minimize(const Eigen::VectorXd& objective) { return solve(objective, 1.0); }

  LpResult maximize(const Eigen::VectorXd& objective) { return solve(objective, -1.0); }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kPivotTol = 1e-11;
  static constexpr double kGapTolerance = 1e-8;

  // How one original variable alpha_k maps onto internal columns.
  struct VariableMap {
    double offset = 0.0;
    int plus = -1;   // alpha += z[plus]
    int minus = -1;  // alpha -= z[minus]
  };

  void build(const Eigen::MatrixXd& C, const Eigen::VectorXd& d, const Eigen::VectorXd& lo,
             const Eigen::VectorXd& hi) {
    const Eigen::Index q = C.rows();
    std::vector<double> widths;
    maps_.resize(static_cast<std::size_t>(num_alpha_));
    for (Eigen::Index k = 0; k < num_alpha_; ++k) {
      const double l = lo[k];
      const double h = hi[k];
      require(!std::isnan(l) && !std::isnan(h), ErrorKind::Numerical, "NaN variable bound");
      if (l > h) {
        trivially_infeasible_ = true;
      }
      VariableMap& m = maps_[static_cast<std::size_t>(k)];
      if (std::isfinite(l)) {
        m.offset = l;
        m.plus = static_cast<int>(widths.size());
        widths.push_back(h - l);
      } else if (std::isfinite(h)) {
        m.offset = h;
        m.minus = static_cast<int>(widths.size());
        widths.push_back(kInf);
      } else {
        m.plus = static_cast<int>(widths.size());
        widths.push_back(kInf);
        m.minus = static_cast<int>(widths.size());
        widths.push_back(kInf);
      }
    }
    num_struct_ = static_cast<int>(widths.size());

    rows_ = static_cast<int>(q);
    // Columns: structural, one slack per row, one artificial per row that
    // starts infeasible.
    Eigen::VectorXd rhs(q);
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(q, num_struct_);
    for (Eigen::Index r = 0; r < q; ++r) {
      double b = d[r];
      for (Eigen::Index k = 0; k < num_alpha_; ++k) {
        const double a = C(r, k);
        if (a == 0.0) continue;
        const VariableMap& m = maps_[static_cast<std::size_t>(k)];
        b -= a * m.offset;
        if (m.plus >= 0) coef(r, m.plus) += a;
        if (m.minus >= 0) coef(r, m.minus) -= a;
      }
      rhs[r] = b;
    }
    std::vector<int> needs_artificial;
    for (int r = 0; r < rows_; ++r) {
      if (rhs[r] < 0.0) needs_artificial.push_back(r);
    }
    first_artificial_ = num_struct_ + rows_;
    cols_ = first_artificial_ + static_cast<int>(needs_artificial.size());

    tableau_ = Eigen::MatrixXd::Zero(rows_, cols_);
    upper_.assign(static_cast<std::size_t>(cols_), kInf);
    for (int j = 0; j < num_struct_; ++j) upper_[static_cast<std::size_t>(j)] = widths[static_cast<std::size_t>(j)];
    at_upper_.assign(static_cast<std::size_t>(cols_), false);
    basis_.assign(static_cast<std::size_t>(rows_), -1);
    row_of_.assign(static_cast<std::size_t>(cols_), -1);
    values_ = Eigen::VectorXd::Zero(rows_);

    int next_art = first_artificial_;
    for (int r = 0; r < rows_; ++r) {
      const bool flip = rhs[r] < 0.0;
      const double sign = flip ? -1.0 : 1.0;
      tableau_.row(r).head(num_struct_) = sign * coef.row(r);
      tableau_(r, num_struct_ + r) = sign;
      int basic = num_struct_ + r;
      if (flip) {
        basic = next_art++;
        tableau_(r, basic) = 1.0;
      }
      basis_[static_cast<std::size_t>(r)] = basic;
      row_of_[static_cast<std::size_t>(basic)] = r;
      values_[r] = sign * rhs[r];
    }
    rhs_scale_ = 1.0;
    for (int r = 0; r < rows_; ++r) rhs_scale_ = std::max(rhs_scale_, std::abs(rhs[r]));
  }

  void ensure_phase1() {
    if (phase1_done_) return;
    phase1_done_ = true;
    if (trivially_infeasible_) {
      feasible_ = false;
      return;
    }
    if (first_artificial_ == cols_) {
      feasible_ = true;
      return;
    }
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols_);
    for (int j = first_artificial_; j < cols_; ++j) cost[j] = 1.0;
    const LpStatus status = run(cost);
    double infeasibility = 0.0;
    for (int r = 0; r < rows_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] >= first_artificial_) infeasibility += std::max(0.0, values_[r]);
    }
    feasible_ = status == LpStatus::Optimal && infeasibility <= kLpTolerance * rhs_scale_;
    // Artificials are pinned at zero from here on; basic ones stay degenerate.
    for (int j = first_artificial_; j < cols_; ++j) {
      upper_[static_cast<std::size_t>(j)] = 0.0;
      at_upper_[static_cast<std::size_t>(j)] = false;
    }
    for (int r = 0; r < rows_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] >= first_artificial_) values_[r] = 0.0;
    }
  }

  LpResult solve(const Eigen::VectorXd& objective, double sense) {
    require(objective.size() == num_alpha_, ErrorKind::DimensionMismatch, "objective length mismatch");
    LpResult result = solve_once(objective, sense);
    if (result.status == LpStatus::Optimal && std::abs(result.value - result.bound) > kGapTolerance * (1.0 + std::abs(result.value))) {
      build(C_, d_, lo_, hi_);
      phase1_done_ = false;
      LpResult fresh = solve_once(objective, sense);
      if (fresh.status == LpStatus::Optimal) {
        // Keep the tighter certificate.
        fresh.bound = sense > 0 ? std::max(fresh.bound, result.bound) : std::min(fresh.bound, result.bound);
        result = std::move(fresh);
      }
    }
    return result;
  }

  LpResult solve_once(const Eigen::VectorXd& objective, double sense) {
    ensure_phase1();
    LpResult result;
    if (!feasible_) {
      result.status = LpStatus::Infeasible;
      return result;
    }
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols_);
    double constant = 0.0;
    for (Eigen::Index k = 0; k < num_alpha_; ++k) {
      const double w = sense * objective[k];
      const VariableMap& m = maps_[static_cast<std::size_t>(k)];
      constant += w * m.offset;
      if (m.plus >= 0) cost[m.plus] += w;
      if (m.minus >= 0) cost[m.minus] -= w;
    }
    const LpStatus status = run(cost);
    if (status == LpStatus::Unbounded) {
      result.status = LpStatus::Unbounded;
      return result;
    }
    result.point = current_alpha();
    result.value = objective.dot(result.point);
    result.bound = sense * certified_minimum(sense * objective);
    if (!std::isfinite(result.bound)) result.bound = result.value;
    return result;
  }

  /// Lower bound on min w.alpha from the current dual estimate, never worse
  /// than the box-only bound (y = 0).
  double certified_minimum(const Eigen::VectorXd& w) const {
    Eigen::VectorXd y(rows_);
    for (int r = 0; r < rows_; ++r) y[r] = std::max(0.0, reduced_[num_struct_ + r]);
    const Eigen::VectorXd g = w + C_.transpose() * y;
    return std::max(box_minimum(g) - y.dot(d_), box_minimum(w));
  }

  double box_minimum(const Eigen::VectorXd& g) const {
    double total = 0.0;
    for (Eigen::Index k = 0; k < num_alpha_; ++k) {
      if (g[k] == 0.0) continue;
      const double v = g[k] > 0.0 ? g[k] * lo_[k] : g[k] * hi_[k];
      if (std::isnan(v)) return -kInf;
      total += v;
    }
    return total;
  }

  double column_value(int j) const {
    const int r = row_of_[static_cast<std::size_t>(j)];
    if (r >= 0) return values_[r];
    return at_upper_[static_cast<std::size_t>(j)] ? upper_[static_cast<std::size_t>(j)] : 0.0;
  }

  Eigen::VectorXd current_alpha() const {
    Eigen::VectorXd alpha(num_alpha_);
    for (Eigen::Index k = 0; k < num_alpha_; ++k) {
      const VariableMap& m = maps_[static_cast<std::size_t>(k)];
      double v = m.offset;
      if (m.plus >= 0) v += column_value(m.plus);
      if (m.minus >= 0) v -= column_value(m.minus);
      alpha[k] = v;
    }
    return alpha;
  }

  // Primal simplex from the current (feasible) basis.
  LpStatus run(const Eigen::VectorXd& cost) {
    Eigen::VectorXd cb(rows_);
    for (int r = 0; r < rows_; ++r) cb[r] = cost[basis_[static_cast<std::size_t>(r)]];
    Eigen::VectorXd reduced = cost;
    reduced.noalias() -= tableau_.transpose() * cb;
    for (int r = 0; r < rows_; ++r) reduced[basis_[static_cast<std::size_t>(r)]] = 0.0;

    const long max_iter = 100L * (rows_ + cols_) + 1000;
    int degenerate_run = 0;
    for (long iter = 0; iter < max_iter; ++iter) {
      const bool bland = degenerate_run > 50;
      int enter = -1;
      double best = 0.0;
      for (int j = 0; j < cols_; ++j) {
        if (row_of_[static_cast<std::size_t>(j)] >= 0) continue;
        if (upper_[static_cast<std::size_t>(j)] == 0.0) continue;
        const double dj = reduced[j];
        const bool up = at_upper_[static_cast<std::size_t>(j)];
        const double gain = up ? dj : -dj;
        if (gain > kLpTolerance) {
          if (bland) {
            enter = j;
            break;
          }
          if (gain > best) {
            best = gain;
            enter = j;
          }
        }
      }
      if (enter < 0) {
        reduced_ = reduced;
        return LpStatus::Optimal;
      }

      const double dir = at_upper_[static_cast<std::size_t>(enter)] ? -1.0 : 1.0;
      double step = upper_[static_cast<std::size_t>(enter)];
      int leave_row = -1;
      bool leave_to_upper = false;
      for (int r = 0; r < rows_; ++r) {
        const double a = tableau_(r, enter) * dir;
        if (std::abs(a) <= kPivotTol) continue;
        const int b = basis_[static_cast<std::size_t>(r)];
        double limit;
        bool to_upper;
        if (a > 0.0) {
          limit = std::max(0.0, values_[r]) / a;
          to_upper = false;
        } else {
          const double ub = upper_[static_cast<std::size_t>(b)];
          if (!std::isfinite(ub)) continue;
          limit = std::max(0.0, ub - values_[r]) / (-a);
          to_upper = true;
        }
        if (limit < step || (limit == step && leave_row >= 0 &&
                             b < basis_[static_cast<std::size_t>(leave_row)])) {
          step = limit;
          leave_row = r;
          leave_to_upper = to_upper;
        }
      }
      if (!std::isfinite(step)) return LpStatus::Unbounded;
      degenerate_run = step <= kLpTolerance ? degenerate_run + 1 : 0;

      const double delta = dir * step;
      for (int r = 0; r < rows_; ++r) values_[r] -= delta * tableau_(r, enter);

      if (leave_row < 0) {
        // Entering variable reached its opposite bound first.
        at_upper_[static_cast<std::size_t>(enter)] = !at_upper_[static_cast<std::size_t>(enter)];
        continue;
      }

      const int leave = basis_[static_cast<std::size_t>(leave_row)];
      const double enter_value =
          (at_upper_[static_cast<std::size_t>(enter)] ? upper_[static_cast<std::size_t>(enter)] : 0.0) + delta;
      row_of_[static_cast<std::size_t>(leave)] = -1;
      at_upper_[static_cast<std::size_t>(leave)] = leave_to_upper;
      at_upper_[static_cast<std::size_t>(enter)] = false;
      basis_[static_cast<std::size_t>(leave_row)] = enter;
      row_of_[static_cast<std::size_t>(enter)] = leave_row;
      values_[leave_row] = enter_value;

      pivot(leave_row, enter, reduced);
    }
    fail(ErrorKind::Numerical, "simplex iteration limit reached");
  }

  void pivot(int row, int col, Eigen::VectorXd& reduced) {
    const double p = tableau_(row, col);
    tableau_.row(row) /= p;
    tableau_(row, col) = 1.0;
    const Eigen::RowVectorXd pivot_row = tableau_.row(row);
    for (int r = 0; r < rows_; ++r) {
      if (r == row) continue;
      const double f = tableau_(r, col);
      if (f == 0.0) continue;
      tableau_.row(r).noalias() -= f * pivot_row;
      tableau_(r, col) = 0.0;
    }
    const double f = reduced[col];
    if (f != 0.0) {
      reduced.noalias() -= f * pivot_row.transpose();
      reduced[col] = 0.0;
    }
  }

  Eigen::Index num_alpha_;
  Eigen::MatrixXd C_;
  Eigen::VectorXd d_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  Eigen::VectorXd reduced_;
  std::vector<VariableMap> maps_;
  int num_struct_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  int first_artificial_ = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tableau_;
  std::vector<double> upper_;
  std::vector<bool> at_upper_;
  std::vector<int> basis_;
  std::vector<int> row_of_;
  Eigen::VectorXd values_;
  double rhs_scale_ = 1.0;
  bool trivially_infeasible_ = false;
  bool phase1_done_ = false;
  bool feasible_ = false;
};

}  // namespace cpreach
