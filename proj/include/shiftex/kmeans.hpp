#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "shiftex/dataset.hpp"
#include "shiftex/random.hpp"

namespace shiftex {

struct KMeansConfig {
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iters = 300;
};

struct KMeansResult {
  Matrix centroids;                 // k x D
  std::vector<std::size_t> labels;  // one per input row
  double inertia = 0.0;             // within-cluster sum of squares
  std::size_t restart = 0;          // which restart won
};

namespace detail {

// One Lloyd run on weighted distinct points. nullopt when a cluster empties.
inline std::optional<KMeansResult> lloyd(const Atoms& atoms, const Vector& weight, std::size_t first,
                                         std::size_t k, std::size_t max_iters) {
  const Eigen::Index n = atoms.points.rows();
  const Eigen::Index dim = atoms.points.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Greedy farthest-point seeding from the given first point.
  Matrix centers(static_cast<Eigen::Index>(k), dim);
  centers.row(0) = atoms.points.row(static_cast<Eigen::Index>(first));
  Vector nearest = Vector::Constant(n, inf);
  for (std::size_t c = 1; c < k; ++c) {
    Eigen::Index pick = -1;
    double far = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (atoms.points.row(i) - centers.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
      if (nearest[i] > far) {
        far = nearest[i];
        pick = i;
      }
    }
    if (!(far > 0.0)) return std::nullopt;  // fewer distinct points than clusters
    centers.row(static_cast<Eigen::Index>(c)) = atoms.points.row(pick);
  }

  std::vector<std::size_t> label(static_cast<std::size_t>(n), k);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(1, max_iters); ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = inf;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = (atoms.points.row(i) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (label[static_cast<std::size_t>(i)] != best) {
        label[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), dim);
    Vector mass = Vector::Zero(static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(label[static_cast<std::size_t>(i)]);
      sums.row(c) += weight[i] * atoms.points.row(i);
      mass[c] += weight[i];
    }
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k); ++c) {
      if (!(mass[c] > 0.0)) return std::nullopt;
      centers.row(c) = sums.row(c) / mass[c];
    }
    if (!changed && iter > 0) break;
  }

  KMeansResult out;
  out.centroids = std::move(centers);
  out.labels.resize(atoms.atom_of_row.size());
  for (std::size_t r = 0; r < atoms.atom_of_row.size(); ++r) out.labels[r] = label[atoms.atom_of_row[r]];
  for (Eigen::Index i = 0; i < n; ++i)
    out.inertia += weight[i] * (atoms.points.row(i) - out.centroids.row(static_cast<Eigen::Index>(label[static_cast<std::size_t>(i)]))).squaredNorm();
  return out;
}

}  // namespace detail

/// Seeded k-means with farthest-point initialization and restarts.
///
/// Each restart draws its first center uniformly over rows, then seeds
/// greedily by farthest point; the run with the lowest inertia wins (earlier
/// restart on ties). Duplicate rows are merged into weighted points first,
/// which leaves the result unchanged. Throws NumericalError when every
/// restart ends with an empty cluster.
inline KMeansResult kmeans(const Matrix& points, std::size_t k, const KMeansConfig& config) {
  if (k == 0) throw InvalidArgument("k-means: k must be at least 1");
  if (k > static_cast<std::size_t>(points.rows())) {
    throw InvalidArgument("k-means: k = " + std::to_string(k) + " exceeds the number of rows " +
                          std::to_string(points.rows()));
  }
  const Atoms atoms = collapse_duplicates(points);
  const Vector weight = atoms.masses * static_cast<double>(points.rows());
  const std::size_t restarts = std::max<std::size_t>(1, config.restarts);

  std::optional<KMeansResult> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(config.seed, r));
    std::uniform_int_distribution<std::size_t> pick_row(0, static_cast<std::size_t>(points.rows()) - 1);
    const std::size_t first = atoms.atom_of_row[pick_row(rng)];
    auto run = detail::lloyd(atoms, weight, first, k, config.max_iters);
    if (!run) continue;
    run->restart = r;
    if (!best || run->inertia < best->inertia) best = std::move(run);
  }
  if (!best) {
    throw NumericalError("k-means: every one of " + std::to_string(restarts) + " restarts produced an empty cluster for k = " +
                         std::to_string(k));
  }
  return std::move(*best);
}

}  // namespace shiftex
