#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/error.hpp"
#include "cpreach/geometry/star_set.hpp"

namespace cpreach {

inline constexpr std::size_t kDefaultMaxBranches = 100000;

/// Remembers exact coordinate ranges by their affine form: center entry plus
/// the nonzero basis coefficients, keyed by persistent variable ids so that
/// dropping or appending variables does not alias keys. Valid while the
/// alpha-polytope's projection onto existing variables never shrinks, which
/// holds for the approx-star relaxation: new triangle variables are always
/// satisfiable.
class BoundCache {
 public:
  /// Persistent id of each current alpha column; without a binding, column
  /// indices serve as ids.
  void bind_columns(std::vector<std::uint64_t> ids) { ids_ = std::move(ids); }

  std::optional<Interval> find(const StarSet& s, Eigen::Index i) const {
    const auto it = map_.find(key(s, i));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void store(const StarSet& s, Eigen::Index i, Interval r) { map_.emplace(key(s, i), r); }

  std::size_t size() const { return map_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<double>& k) const {
      std::size_t h = k.size();
      for (double v : k) h ^= std::hash<double>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      return h;
    }
  };

  std::vector<double> key(const StarSet& s, Eigen::Index i) const {
    const bool bound = static_cast<Eigen::Index>(ids_.size()) == s.num_alpha();
    std::vector<double> k{s.center()[i] + 0.0};  // + 0.0 folds -0 into +0
    for (Eigen::Index j = 0; j < s.num_alpha(); ++j) {
      const double v = s.basis()(i, j);
      if (v == 0.0) continue;
      k.push_back(static_cast<double>(bound ? ids_[static_cast<std::size_t>(j)] : static_cast<std::uint64_t>(j)));
      k.push_back(v);
    }
    return k;
  }

  std::vector<std::uint64_t> ids_;
  std::unordered_map<std::vector<double>, Interval, KeyHash> map_;
};

namespace detail {

enum class Phase { Inactive, Active, Mixed };

inline Phase classify(const Interval& r) {
  if (r.upper <= 0.0) return Phase::Inactive;
  if (r.lower >= 0.0) return Phase::Active;
  return Phase::Mixed;
}

/// Star together with a lazily built LP over its constraints. Affine images
/// keep the constraints, so they can share the LP.
struct Branch {
  StarSet star;
  std::shared_ptr<StarBounds> lp;

  StarBounds& bounds() {
    if (!lp) lp = std::make_shared<StarBounds>(star);
    return *lp;
  }
};

inline bool rows_negated(const StarSet& s, Eigen::Index i, Eigen::Index j) {
  return s.center()[i] == -s.center()[j] && s.basis().row(i) == -s.basis().row(j);
}

inline void branch_budget_exceeded(std::size_t max_branches) {
  fail(ErrorKind::BranchBudgetExceeded, "exact-star reachability exceeded " + std::to_string(max_branches) +
                                            " stars; use approx mode or partition the initial set");
}

/// Splits one pre-activation star on every neuron in ascending order and
/// appends the nonempty pieces of ReLU(star) to out.
inline void relu_exact_branch(Branch input, std::vector<Branch>& out, std::size_t max_branches) {
  struct Pending {
    Branch branch;
    Eigen::Index next;
  };
  std::vector<Pending> stack{{std::move(input), 0}};
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    bool empty = false;
    for (Eigen::Index i = p.next; i < p.branch.star.dim() && !empty; ++i) {
      StarSet& s = p.branch.star;
      Interval r = s.box_bounds(i);
      if (classify(r) == Phase::Mixed) {
        if (p.branch.bounds().empty()) {
          empty = true;
          break;
        }
        r = p.branch.bounds().coordinate(s, i);
      }
      switch (classify(r)) {
        case Phase::Active:
          break;
        case Phase::Inactive:
          s = s.with_zeroed_coordinate(i);
          break;
        case Phase::Mixed: {
          const Eigen::RowVectorXd row = s.basis().row(i);
          const double c = s.center()[i];
          // x_i <= 0 half, with x_i then mapped to 0; resumes at i + 1.
          Branch negative{s.with_constraint(row, -c).with_zeroed_coordinate(i), nullptr};
          stack.push_back({std::move(negative), i + 1});
          // Continue with the x_i >= 0 half in place.
          s = s.with_constraint(-row, c);
          p.branch.lp.reset();
          if (out.size() + stack.size() + 1 > max_branches) branch_budget_exceeded(max_branches);
          break;
        }
      }
    }
    if (empty) continue;
    out.push_back(std::move(p.branch));
  }
}

struct ApproxReluResult {
  StarSet star;
  /// relaxed[k] is the neuron whose ReLU value is the k-th appended variable.
  std::vector<Eigen::Index> relaxed;
  /// Column of the first appended variable; its two triangle rows start at
  /// first_row and follow in the same order.
  Eigen::Index first_column = 0;
  Eigen::Index first_row = 0;
};

inline ApproxReluResult relu_approx(const StarSet& s, BoundCache* cache) {
  const Eigen::Index dim = s.dim();
  const Eigen::Index p = s.num_alpha();
  std::unique_ptr<StarBounds> lp;
  std::vector<Interval> range(static_cast<std::size_t>(dim));
  std::vector<Phase> phase(static_cast<std::size_t>(dim));
  // partner[i] = j < i when x_i == -x_j exactly.
  std::vector<Eigen::Index> partner(static_cast<std::size_t>(dim), -1);

  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    Interval r = s.box_bounds(i);
    if (classify(r) == Phase::Mixed) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (phase[static_cast<std::size_t>(j)] == Phase::Mixed && partner[static_cast<std::size_t>(j)] < 0 &&
            rows_negated(s, i, j)) {
          partner[ui] = j;
          break;
        }
      }
      if (partner[ui] >= 0) {
        const Interval& q = range[static_cast<std::size_t>(partner[ui])];
        r = {-q.upper, -q.lower};
      } else if (auto hit = cache ? cache->find(s, i) : std::nullopt) {
        r = *hit;
      } else {
        if (!lp) lp = std::make_unique<StarBounds>(s);
        r = lp->coordinate(s, i);
        if (cache) cache->store(s, i, r);
      }
    }
    range[ui] = r;
    phase[ui] = classify(r);
    if (phase[ui] != Phase::Mixed) partner[ui] = -1;
  }

  std::vector<Eigen::Index> relaxed;
  std::vector<Eigen::Index> column(static_cast<std::size_t>(dim), -1);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (phase[ui] == Phase::Mixed && partner[ui] < 0) {
      column[ui] = p + static_cast<Eigen::Index>(relaxed.size());
      relaxed.push_back(i);
    }
  }
  const Eigen::Index q = static_cast<Eigen::Index>(relaxed.size());
  const Eigen::Index m = s.num_constraints();

  Eigen::VectorXd c = s.center();
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(dim, p + q);
  V.leftCols(p) = s.basis();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m + 2 * q, p + q);
  Eigen::VectorXd d(m + 2 * q);
  C.topLeftCorner(m, p) = s.constraints();
  d.head(m) = s.bounds();
  Eigen::VectorXd lo(p + q), hi(p + q);
  lo.head(p) = s.alpha_lower();
  hi.head(p) = s.alpha_upper();

  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (phase[ui] == Phase::Active) continue;
    if (phase[ui] == Phase::Inactive) {
      c[i] = 0.0;
      V.row(i).setZero();
      continue;
    }
    if (partner[ui] >= 0) {
      // relu(x_i) = relu(-x_i) + x_i, with relu(-x_i) = relu(x_j) already a variable.
      V(i, column[static_cast<std::size_t>(partner[ui])]) += 1.0;
      continue;
    }
    const Eigen::Index k = column[ui];
    const Eigen::Index row = m + 2 * (k - p);
    const double l = range[ui].lower;
    const double u = range[ui].upper;
    const double slope = u / (u - l);
    // x_i - y <= 0
    C.block(row, 0, 1, p) = s.basis().row(i);
    C(row, k) = -1.0;
    d[row] = -s.center()[i];
    // y - slope (x_i - l) <= 0
    C.block(row + 1, 0, 1, p) = -slope * s.basis().row(i);
    C(row + 1, k) = 1.0;
    d[row + 1] = slope * (s.center()[i] - l);
    lo[k] = 0.0;
    hi[k] = u;
    c[i] = 0.0;
    V.row(i).setZero();
    V(i, k) = 1.0;
  }
  return {StarSet(std::move(c), std::move(V), std::move(C), std::move(d), std::move(lo), std::move(hi)),
          std::move(relaxed), p, m};
}

}  // namespace detail

/// Exact ReLU image of a union of stars, as a union of stars.
inline std::vector<StarSet> relu_layer_exact(const std::vector<StarSet>& stars,
                                             std::size_t max_branches = kDefaultMaxBranches) {
  std::vector<detail::Branch> out;
  for (const StarSet& s : stars) detail::relu_exact_branch({s, nullptr}, out, max_branches);
  std::vector<StarSet> result;
  result.reserve(out.size());
  for (auto& b : out) result.push_back(std::move(b.star));
  return result;
}

/// Triangle-relaxed ReLU image of one star: a single enclosing star.
inline StarSet relu_layer_approx(const StarSet& star, BoundCache* cache = nullptr) {
  return detail::relu_approx(star, cache).star;
}

/// As relu_layer_approx, also reporting which neuron each new variable relaxes.
/// Setting the new variables to relu of those neurons gives a witness for any
/// input point.
inline detail::ApproxReluResult relu_layer_approx_traced(const StarSet& star, BoundCache* cache = nullptr) {
  return detail::relu_approx(star, cache);
}

}  // namespace cpreach
