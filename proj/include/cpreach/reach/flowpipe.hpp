#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpreach/error.hpp"
#include "cpreach/geometry/interval_box.hpp"
#include "cpreach/geometry/star_set.hpp"
#include "cpreach/parallel.hpp"
#include "cpreach/reach/relu.hpp"
#include "cpreach/surrogate/mlp.hpp"

namespace cpreach {

enum class ReachMode { ExactStar, ApproxStar };

inline std::string to_string(ReachMode m) { return m == ReachMode::ExactStar ? "exact" : "approx"; }

inline ReachMode reach_mode_from_string(const std::string& s) {
  if (s == "exact" || s == "exact-star") return ReachMode::ExactStar;
  if (s == "approx" || s == "approx-star") return ReachMode::ApproxStar;
  fail(ErrorKind::Config, "unknown reach mode '" + s + "' (expected exact or approx)");
}

inline constexpr std::size_t kDefaultMaxPartitions = 4096;

struct ReachConfig {
  ReachMode mode = ReachMode::ApproxStar;
  std::vector<Eigen::Index> partitions_per_dim;  // empty means one partition per dimension
  std::size_t max_branches = kDefaultMaxBranches;
  std::size_t max_partitions = kDefaultMaxPartitions;
};

struct SurrogateFlowpipe {
  IntervalBox bounds;
  ReachMode mode = ReachMode::ApproxStar;
  std::size_t partitions = 0;
  std::size_t stars = 0;  // output stars summed over partitions

  Eigen::Index step_count(Eigen::Index n) const { return bounds.dim() / n; }
};

namespace detail {

/// A relaxation variable and the first of its two triangle rows.
struct Relaxation {
  Eigen::Index column;
  Eigen::Index row;
};

/// Projects out relaxation variables that no longer influence any coordinate
/// and appear in no constraint but their own triangle rows. Those rows admit
/// a value for every point of the remaining polytope, so dropping the
/// variable and both rows leaves the set unchanged. Newest variables are
/// examined first so that chains of dead relaxations go in one pass.
inline StarSet prune_relaxations(const StarSet& s, std::vector<Relaxation>& live, std::vector<std::uint64_t>& ids) {
  std::vector<bool> drop_col(static_cast<std::size_t>(s.num_alpha()), false);
  std::vector<bool> drop_row(static_cast<std::size_t>(s.num_constraints()), false);
  std::vector<bool> keep(live.size(), true);
  for (std::size_t n = live.size(); n-- > 0;) {
    const Relaxation& r = live[n];
    if (!s.basis().col(r.column).isZero(0.0)) continue;
    bool private_rows = true;
    for (Eigen::Index i = 0; i < s.num_constraints() && private_rows; ++i) {
      if (i == r.row || i == r.row + 1 || drop_row[static_cast<std::size_t>(i)]) continue;
      private_rows = s.constraints()(i, r.column) == 0.0;
    }
    if (!private_rows) continue;
    keep[n] = false;
    drop_col[static_cast<std::size_t>(r.column)] = true;
    drop_row[static_cast<std::size_t>(r.row)] = drop_row[static_cast<std::size_t>(r.row + 1)] = true;
  }
  std::vector<Relaxation> kept;
  for (std::size_t n = 0; n < live.size(); ++n) {
    if (keep[n]) kept.push_back(live[n]);
  }
  if (kept.size() == live.size()) return s;

  std::vector<Eigen::Index> col_map(drop_col.size(), -1), row_map(drop_row.size(), -1);
  std::vector<Eigen::Index> cols, rows;
  for (std::size_t j = 0; j < drop_col.size(); ++j) {
    if (!drop_col[j]) {
      col_map[j] = static_cast<Eigen::Index>(cols.size());
      cols.push_back(static_cast<Eigen::Index>(j));
    }
  }
  for (std::size_t i = 0; i < drop_row.size(); ++i) {
    if (!drop_row[i]) {
      row_map[i] = static_cast<Eigen::Index>(rows.size());
      rows.push_back(static_cast<Eigen::Index>(i));
    }
  }
  for (Relaxation& r : kept) {
    r.column = col_map[static_cast<std::size_t>(r.column)];
    r.row = row_map[static_cast<std::size_t>(r.row)];
  }
  live = std::move(kept);
  std::vector<std::uint64_t> kept_ids;
  for (Eigen::Index j : cols) kept_ids.push_back(ids[static_cast<std::size_t>(j)]);
  ids = std::move(kept_ids);
  const Eigen::VectorXd lo = s.alpha_lower()(cols);
  const Eigen::VectorXd hi = s.alpha_upper()(cols);
  return StarSet(s.center(), s.basis()(Eigen::all, cols), s.constraints()(rows, cols), s.bounds()(rows), lo, hi);
}

inline StarSet approx_reach(const MLP& net, const StarSet& input, BoundCache& cache) {
  StarSet s = input;
  std::vector<Relaxation> live;
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(input.num_alpha()));
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  std::uint64_t next_id = ids.size();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    s = prune_relaxations(affine_map(s, net.weights()[l], net.biases()[l]), live, ids);
    cache.bind_columns(ids);
    if (!net.is_hidden(l)) break;
    ApproxReluResult r = relu_layer_approx_traced(s, &cache);
    for (std::size_t k = 0; k < r.relaxed.size(); ++k) {
      const auto offset = static_cast<Eigen::Index>(k);
      live.push_back({r.first_column + offset, r.first_row + 2 * offset});
      ids.push_back(next_id++);
    }
    s = std::move(r.star);
  }
  return s;
}

}  // namespace detail

/// Image of the input star through the network: a union of stars in exact
/// mode, a single enclosing star in approx mode.
inline std::vector<StarSet> network_reach(const MLP& net, const StarSet& input, const ReachConfig& cfg) {
  require(input.dim() == net.input_dim(), ErrorKind::DimensionMismatch,
          "network_reach: input set dimension must equal network input size");
  if (cfg.mode == ReachMode::ApproxStar) {
    BoundCache cache;
    return {detail::approx_reach(net, input, cache)};
  }
  std::vector<detail::Branch> branches{{input, nullptr}};
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (auto& b : branches) b.star = affine_map(b.star, net.weights()[l], net.biases()[l]);
    if (!net.is_hidden(l)) break;
    std::vector<detail::Branch> next;
    for (auto& b : branches) detail::relu_exact_branch(std::move(b), next, cfg.max_branches);
    branches = std::move(next);
  }
  std::vector<StarSet> out;
  out.reserve(branches.size());
  for (auto& b : branches) out.push_back(std::move(b.star));
  return out;
}

/// Axis-aligned grid of prod(parts) boxes tiling the box. Neighbouring cells
/// share endpoints bit-exactly.
inline std::vector<IntervalBox> partition_initial(const IntervalBox& box, const std::vector<Eigen::Index>& parts,
                                                  std::size_t max_partitions = kDefaultMaxPartitions) {
  const Eigen::Index n = box.dim();
  std::vector<Eigen::Index> counts = parts.empty() ? std::vector<Eigen::Index>(static_cast<std::size_t>(n), 1) : parts;
  require(static_cast<Eigen::Index>(counts.size()) == n, ErrorKind::DimensionMismatch,
          "partitionsPerDim must have one entry per state dimension");
  std::size_t total = 1;
  for (Eigen::Index c : counts) {
    require(c >= 1, ErrorKind::Config, "partitionsPerDim entries must be at least 1");
    if (total > max_partitions / static_cast<std::size_t>(c)) {
      fail(ErrorKind::PartitionOverflow, "partition grid exceeds the cap of " + std::to_string(max_partitions));
    }
    total *= static_cast<std::size_t>(c);
  }
  auto cut = [&](Eigen::Index dim, Eigen::Index k) {
    if (k == 0) return box.lower(dim);
    if (k == counts[static_cast<std::size_t>(dim)]) return box.upper(dim);
    const double t = static_cast<double>(k) / static_cast<double>(counts[static_cast<std::size_t>(dim)]);
    return std::min(box.upper(dim), box.lower(dim) + (box.upper(dim) - box.lower(dim)) * t);
  };
  std::vector<IntervalBox> cells;
  cells.reserve(total);
  std::vector<Eigen::Index> index(static_cast<std::size_t>(n), 0);
  for (std::size_t cell = 0; cell < total; ++cell) {
    Eigen::VectorXd lo(n), hi(n);
    for (Eigen::Index d = 0; d < n; ++d) {
      lo[d] = cut(d, index[static_cast<std::size_t>(d)]);
      hi[d] = cut(d, index[static_cast<std::size_t>(d)] + 1);
    }
    cells.emplace_back(std::move(lo), std::move(hi));
    // Odometer increment, last dimension fastest.
    for (Eigen::Index d = n - 1; d >= 0; --d) {
      auto& i = index[static_cast<std::size_t>(d)];
      if (++i < counts[static_cast<std::size_t>(d)]) break;
      i = 0;
    }
  }
  return cells;
}

/// Interval hull of a star union, reusing cached ranges where possible.
inline std::optional<IntervalBox> hull_of(const std::vector<StarSet>& stars, BoundCache* cache) {
  std::optional<IntervalBox> hull;
  for (const StarSet& s : stars) {
    StarBounds lp(s);
    if (lp.empty()) continue;
    Eigen::VectorXd lo(s.dim()), hi(s.dim());
    for (Eigen::Index i = 0; i < s.dim(); ++i) {
      std::optional<Interval> r = cache ? cache->find(s, i) : std::nullopt;
      if (!r) r = lp.coordinate(s, i);
      lo[i] = r->lower;
      hi[i] = std::max(r->lower, r->upper);
    }
    IntervalBox b(std::move(lo), std::move(hi));
    hull = hull ? hull->hull(b) : b;
  }
  return hull;
}

/// Reach image of one initial box, as an interval hull.
inline IntervalBox reach_box(const MLP& net, const IntervalBox& box, const ReachConfig& cfg, std::size_t* stars = nullptr) {
  const StarSet input = box_to_star(box);
  std::optional<IntervalBox> hull;
  if (cfg.mode == ReachMode::ApproxStar) {
    BoundCache cache;
    hull = hull_of({detail::approx_reach(net, input, cache)}, &cache);
    if (stars) *stars = 1;
  } else {
    const std::vector<StarSet> out = network_reach(net, input, cfg);
    hull = hull_of(out, nullptr);
    if (stars) *stars = out.size();
  }
  if (!hull) fail(ErrorKind::AllEmpty, "reach produced no nonempty star");
  return *hull;
}

/// Interval enclosure of net(box): per-partition reach, merged by hull in
/// partition order.
inline SurrogateFlowpipe surrogate_flowpipe(const MLP& net, const IntervalBox& box, const ReachConfig& cfg) {
  require(box.dim() == net.input_dim(), ErrorKind::DimensionMismatch,
          "surrogate_flowpipe: initial box dimension must equal network input size");
  const std::vector<IntervalBox> cells = partition_initial(box, cfg.partitions_per_dim, cfg.max_partitions);
  std::vector<std::optional<IntervalBox>> hulls(cells.size());
  std::vector<std::size_t> stars(cells.size(), 0);
  parallel_for(cells.size(), [&](std::size_t i) {
    try {
      hulls[i] = reach_box(net, cells[i], cfg, &stars[i]);
    } catch (const Error& e) {
      fail(e.kind(), "partition " + std::to_string(i) + ": " + e.message());
    }
  });
  SurrogateFlowpipe fp{*hulls.front(), cfg.mode, cells.size(), 0};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    fp.bounds = fp.bounds.hull(*hulls[i]);
    fp.stars += stars[i];
  }
  return fp;
}

}  // namespace cpreach
