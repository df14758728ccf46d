#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "shiftex/dataset.hpp"

namespace shiftex::ot {

/// Balanced transportation problem with integer supplies/demands by
/// successive shortest paths: dense Dijkstra over the residual bipartite
/// graph with node potentials. Flows stay integral. Result is row-major
/// n x m. Much slower than solve_transportation (network simplex); kept as
/// an independent route for cross-checking.
inline std::vector<std::int64_t> solve_transportation_ssp(const Matrix& cost, std::span<const std::int64_t> supply,
                                                      std::span<const std::int64_t> demand) {
  const auto n = static_cast<std::size_t>(cost.rows());
  const auto m = static_cast<std::size_t>(cost.cols());
  if (supply.size() != n || demand.size() != m) throw InvalidArgument("transportation: size mismatch");
  for (auto s : supply)
    if (s < 0) throw InvalidArgument("transportation: negative supply");
  for (auto t : demand)
    if (t < 0) throw InvalidArgument("transportation: negative demand");
  if (std::accumulate(supply.begin(), supply.end(), std::int64_t{0}) !=
      std::accumulate(demand.begin(), demand.end(), std::int64_t{0})) {
    throw InvalidArgument("transportation: unbalanced supplies and demands");
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  const std::size_t nodes = n + m;

  std::vector<std::int64_t> flow(n * m, 0);
  std::vector<std::int64_t> rem_supply(supply.begin(), supply.end());
  std::vector<std::int64_t> rem_demand(demand.begin(), demand.end());
  // Sources currently sending flow into each target; backward residual arcs.
  std::vector<std::vector<std::size_t>> senders(m);

  // Reduced cost c_ij + pot[i] - pot[n+j] must stay >= 0.
  std::vector<double> pot(nodes, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double lo = inf;
    for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    pot[n + j] = n > 0 ? lo : 0.0;
  }

  std::vector<double> dist(nodes);
  std::vector<std::size_t> prev(nodes);
  std::vector<char> done(nodes);

  std::int64_t outstanding = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  while (outstanding > 0) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(prev.begin(), prev.end(), none);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (rem_supply[i] > 0) dist[i] = 0.0;

    std::size_t sink = none;
    for (;;) {
      std::size_t u = none;
      double best = inf;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      }
      if (u == none) throw NumericalError("transportation: residual graph disconnected");
      if (u >= n && rem_demand[u - n] > 0) {
        sink = u;
        break;
      }
      done[u] = 1;
      if (u < n) {
        const double* row = cost.data() + u * m;
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (done[v]) continue;
          const double rc = std::max(0.0, row[j] + pot[u] - pot[v]);
          const double cand = dist[u] + rc;
          if (cand < dist[v]) {
            dist[v] = cand;
            prev[v] = u;
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i : senders[j]) {
          if (done[i]) continue;
          const double rc = std::max(0.0, -cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) + pot[u] - pot[i]);
          const double cand = dist[u] + rc;
          if (cand < dist[i]) {
            dist[i] = cand;
            prev[i] = u;
          }
        }
      }
    }

    const double dsink = dist[sink];
    for (std::size_t v = 0; v < nodes; ++v) pot[v] += std::min(dist[v], dsink);

    // Bottleneck along the path sink <- ... <- source.
    std::int64_t amount = rem_demand[sink - n];
    std::size_t v = sink;
    while (prev[v] != none) {
      const std::size_t p = prev[v];
      if (p >= n) amount = std::min(amount, flow[v * m + (p - n)]);  // backward arc target p -> source v
      v = p;
    }
    amount = std::min(amount, rem_supply[v]);

    rem_supply[v] -= amount;
    rem_demand[sink - n] -= amount;
    outstanding -= amount;
    v = sink;
    while (prev[v] != none) {
      const std::size_t p = prev[v];
      if (p < n) {
        const std::size_t j = v - n;
        if (flow[p * m + j] == 0) senders[j].push_back(p);
        flow[p * m + j] += amount;
      } else {
        const std::size_t j = p - n;
        flow[v * m + j] -= amount;
        if (flow[v * m + j] == 0) std::erase(senders[j], v);
      }
      v = p;
    }
  }
  return flow;
}

}  // namespace shiftex::ot
