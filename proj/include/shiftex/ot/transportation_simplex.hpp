#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "shiftex/dataset.hpp"

namespace shiftex::ot {

namespace detail {

struct BasicCell {
  std::size_t src;
  std::size_t tgt;
  std::int64_t flow;
};

// Spanning-tree basis of the bipartite transportation graph. Node ids:
// sources 0..n-1, targets n..n+m-1. Potentials satisfy u_i + v_j = c_ij
// on every basic cell, with u_0 = 0.
class SpanningTreeBasis {
 public:
  SpanningTreeBasis(std::size_t n, std::size_t m)
      : n_(n), adj_(n + m), parent_(n + m), parent_cell_(n + m), depth_(n + m), pot_(n + m) {}

  std::vector<BasicCell> cells;

  void link(std::size_t id) {
    adj_[cells[id].src].push_back(id);
    adj_[n_ + cells[id].tgt].push_back(id);
  }
  void unlink(std::size_t id) {
    std::erase(adj_[cells[id].src], id);
    std::erase(adj_[n_ + cells[id].tgt], id);
  }

  void rebuild(const Matrix& cost) {
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::fill(parent_.begin(), parent_.end(), none);
    stack_.clear();
    stack_.push_back(0);
    parent_[0] = 0;
    depth_[0] = 0;
    pot_[0] = 0.0;
    while (!stack_.empty()) {
      const std::size_t u = stack_.back();
      stack_.pop_back();
      for (std::size_t id : adj_[u]) {
        const auto& c = cells[id];
        const std::size_t other = (u < n_) ? n_ + c.tgt : c.src;
        if (parent_[other] != none) continue;
        parent_[other] = u;
        parent_cell_[other] = id;
        depth_[other] = depth_[u] + 1;
        pot_[other] = cost(static_cast<Eigen::Index>(c.src), static_cast<Eigen::Index>(c.tgt)) - pot_[u];
        stack_.push_back(other);
      }
    }
  }

  double u(std::size_t i) const { return pot_[i]; }
  double v(std::size_t j) const { return pot_[n_ + j]; }
  std::size_t parent(std::size_t node) const { return parent_[node]; }
  std::size_t parent_cell(std::size_t node) const { return parent_cell_[node]; }
  std::size_t depth(std::size_t node) const { return depth_[node]; }

 private:
  std::size_t n_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::size_t> parent_, parent_cell_, depth_;
  std::vector<double> pot_;
  std::vector<std::size_t> stack_;
};

}  // namespace detail

/// Balanced transportation problem with integer supplies and demands.
///
/// Primal network simplex on the bipartite graph: northwest-corner start,
/// block-search pricing, leaving cell chosen as the last blocking cell
/// met when walking the cycle from its apex in the entering direction.
/// Flows stay integral, so the optimum is an exact vertex. Result is
/// row-major n x m.
inline std::vector<std::int64_t> solve_transportation(const Matrix& cost, std::span<const std::int64_t> supply,
                                                      std::span<const std::int64_t> demand) {
  const auto n = static_cast<std::size_t>(cost.rows());
  const auto m = static_cast<std::size_t>(cost.cols());
  if (supply.size() != n || demand.size() != m) throw InvalidArgument("transportation: size mismatch");
  if (n == 0 || m == 0) throw InvalidArgument("transportation: empty problem");
  for (auto s : supply)
    if (s < 0) throw InvalidArgument("transportation: negative supply");
  for (auto t : demand)
    if (t < 0) throw InvalidArgument("transportation: negative demand");
  if (std::accumulate(supply.begin(), supply.end(), std::int64_t{0}) !=
      std::accumulate(demand.begin(), demand.end(), std::int64_t{0})) {
    throw InvalidArgument("transportation: unbalanced supplies and demands");
  }

  detail::SpanningTreeBasis basis(n, m);
  {
    std::vector<std::int64_t> s(supply.begin(), supply.end());
    std::vector<std::int64_t> d(demand.begin(), demand.end());
    std::size_t i = 0, j = 0;
    for (;;) {
      const std::int64_t amount = std::min(s[i], d[j]);
      basis.cells.push_back({i, j, amount});
      s[i] -= amount;
      d[j] -= amount;
      if (i == n - 1 && j == m - 1) break;
      if ((s[i] == 0 && i < n - 1) || j == m - 1) {
        ++i;
      } else {
        ++j;
      }
    }
    for (std::size_t id = 0; id < basis.cells.size(); ++id) basis.link(id);
  }
  basis.rebuild(cost);

  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  const std::size_t cells_total = n * m;
  const std::size_t block = std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(cells_total))));
  const std::size_t max_pivots = 64 * cells_total + 10000;

  std::size_t cursor = 0;
  std::vector<std::size_t> up_src, up_tgt;
  for (std::size_t pivot = 0;; ++pivot) {
    if (pivot > max_pivots) throw NumericalError("transportation: pivot limit exceeded");

    // Block pricing: scan cyclically, take the most negative reduced cost of the first block that has one.
    double best = -tol;
    std::size_t enter = cells_total;
    std::size_t scanned = 0;
    while (scanned < cells_total) {
      const std::size_t stop = std::min(cells_total, scanned + block);
      for (; scanned < stop; ++scanned) {
        const std::size_t c = cursor;
        cursor = (cursor + 1 == cells_total) ? 0 : cursor + 1;
        const std::size_t i = c / m, j = c % m;
        const double rc = cost.data()[c] - basis.u(i) - basis.v(j);
        if (rc < best) {
          best = rc;
          enter = c;
        }
      }
      if (enter != cells_total) break;
    }
    if (enter == cells_total) break;

    const std::size_t ei = enter / m, ej = enter % m;
    // Tree paths from both endpoints up to the apex.
    up_src.clear();
    up_tgt.clear();
    std::size_t a = ei, b = n + ej;
    while (a != b) {
      if (basis.depth(a) >= basis.depth(b)) {
        up_src.push_back(basis.parent_cell(a));
        a = basis.parent(a);
      } else {
        up_tgt.push_back(basis.parent_cell(b));
        b = basis.parent(b);
      }
    }
    // Cycle order: entering, up_tgt[0..], reverse(up_src). Odd positions lose flow.
    const std::size_t k_tgt = up_tgt.size();
    const std::size_t len = 1 + k_tgt + up_src.size();
    auto position_of_src = [&](std::size_t t) { return len - 1 - t; };

    // Forward order is reverse(up_src), entering, up_tgt. Scanning it backwards
    // (up_tgt from the apex end, then up_src from the entering end) and keeping
    // the first strict minimum selects the last blocking cell in forward order.
    std::int64_t theta = std::numeric_limits<std::int64_t>::max();
    std::size_t leave = static_cast<std::size_t>(-1);
    for (std::size_t k = k_tgt; k-- > 0;) {
      if ((1 + k) % 2 == 1) {
        const auto f = basis.cells[up_tgt[k]].flow;
        if (f < theta) {
          theta = f;
          leave = up_tgt[k];
        }
      }
    }
    for (std::size_t t = 0; t < up_src.size(); ++t) {
      if (position_of_src(t) % 2 == 1) {
        const auto f = basis.cells[up_src[t]].flow;
        if (f < theta) {
          theta = f;
          leave = up_src[t];
        }
      }
    }
    for (std::size_t k = 0; k < k_tgt; ++k) basis.cells[up_tgt[k]].flow += ((1 + k) % 2 == 1) ? -theta : theta;
    for (std::size_t t = 0; t < up_src.size(); ++t)
      basis.cells[up_src[t]].flow += (position_of_src(t) % 2 == 1) ? -theta : theta;

    basis.unlink(leave);
    basis.cells[leave] = {ei, ej, theta};
    basis.link(leave);
    basis.rebuild(cost);
  }

  std::vector<std::int64_t> flow(cells_total, 0);
  for (const auto& c : basis.cells) flow[c.src * m + c.tgt] += c.flow;
  return flow;
}

}  // namespace shiftex::ot
