#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shiftex/dataset.hpp"
#include "shiftex/kmeans.hpp"
#include "shiftex/ot_core.hpp"
#include "shiftex/random.hpp"

namespace shiftex {

enum class Family { vector, k_sparse_mean, k_sparse_ot, k_cluster };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::vector: return "vector";
    case Family::k_sparse_mean: return "k_sparse_mean";
    case Family::k_sparse_ot: return "k_sparse_ot";
    case Family::k_cluster: return "k_cluster";
  }
  return "?";
}

/// Accepts the canonical names plus dashed CLI spellings and "mean-shift".
inline Family parse_family(std::string_view s) {
  std::string t(s);
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "vector" || t == "mean_shift") return Family::vector;
  if (t == "k_sparse_mean") return Family::k_sparse_mean;
  if (t == "k_sparse_ot") return Family::k_sparse_ot;
  if (t == "k_cluster") return Family::k_cluster;
  throw InvalidArgument("unknown map family '" + std::string(s) +
                        "' (expected mean-shift, k-sparse-mean, k-sparse-ot or k-cluster)");
}

enum class Strategy { mean_gap, ot_displacement };

inline std::string_view to_string(Strategy s) {
  return s == Strategy::mean_gap ? "mean_gap" : "ot_displacement";
}

inline Strategy parse_strategy(std::string_view s) {
  std::string t(s);
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "mean_gap") return Strategy::mean_gap;
  if (t == "ot_displacement") return Strategy::ot_displacement;
  throw InvalidArgument("unknown active-set strategy '" + std::string(s) + "' (expected mean-gap or ot-displacement)");
}

/// Family default: mean gap for sparse mean shift, OT displacement for sparse OT.
inline Strategy default_strategy(Family f) {
  return f == Family::k_sparse_ot ? Strategy::ot_displacement : Strategy::mean_gap;
}

/// Columns a sparse map may move, ordered by descending selection score.
class ActiveSet {
 public:
  ActiveSet() = default;
  ActiveSet(std::vector<std::size_t> indices, std::size_t d) : indices_(std::move(indices)) {
    if (indices_.empty() || indices_.size() > d) throw InvalidArgument("active set size must be in [1, d]");
    std::vector<std::size_t> sorted = indices_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidArgument("active set indices must be unique");
    if (sorted.back() >= d) throw InvalidArgument("active set index out of range");
  }

  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool contains(std::size_t j) const { return std::find(indices_.begin(), indices_.end(), j) != indices_.end(); }

 private:
  std::vector<std::size_t> indices_;
};

/// T(x) = x + delta.
struct VectorShiftMap {
  Vector delta;
};

/// T(x) = x + delta with delta zero off the active set.
struct KSparseMeanShiftMap {
  ActiveSet active;
  Vector delta;
};

/// Copies OT image coordinates on the active set, keeps x elsewhere.
/// Defined only on the training source rows it was fitted on.
struct KSparseOTMap {
  ActiveSet active;
  PointMap ot_images;
  std::uint64_t training_fingerprint = 0;
};

struct Standardizer {
  Vector mu;
  Vector sigma;
  std::vector<std::size_t> constant_columns;  // sigma forced to 1

  Vector apply(const Eigen::Ref<const Vector>& x) const { return (x - mu).cwiseQuotient(sigma); }
};

/// Per-cluster translation; rows of the matrices are clusters, in original units.
struct KClusterMap {
  Matrix source_centroids;
  Matrix target_centroids;
  Matrix deltas;
  Standardizer standardizer;
  std::vector<std::size_t> member_counts;

  std::size_t k() const noexcept { return static_cast<std::size_t>(deltas.rows()); }
};

struct ShiftMap {
  std::vector<std::string> columns;
  std::variant<VectorShiftMap, KSparseMeanShiftMap, KSparseOTMap, KClusterMap> payload;

  Family family() const noexcept { return static_cast<Family>(payload.index()); }
  std::size_t d() const noexcept { return columns.size(); }
};

// ---------------------------------------------------------------------------

inline Standardizer fit_standardizer(const Dataset& data) {
  Standardizer s;
  s.mu = data.column_means();
  s.sigma = ((data.rows().rowwise() - s.mu.transpose()).array().square().colwise().mean().sqrt()).transpose();
  for (Eigen::Index j = 0; j < s.sigma.size(); ++j) {
    if (!(s.sigma[j] > 0.0)) {
      s.sigma[j] = 1.0;
      s.constant_columns.push_back(static_cast<std::size_t>(j));
    }
  }
  return s;
}

/// Picks k columns by the chosen score; ties go to the lower column index.
inline ActiveSet select_active_set(const Dataset& source, const Dataset& target, const PointMap* ot_images,
                                   std::size_t k, Strategy strategy) {
  require_same_dim(source, target);
  const std::size_t d = source.d();
  if (k < 1 || k > d) throw InvalidArgument("k = " + std::to_string(k) + " is out of range [1, " + std::to_string(d) + "]");

  Vector score(static_cast<Eigen::Index>(d));
  if (strategy == Strategy::mean_gap) {
    score = (target.column_means() - source.column_means()).cwiseAbs();
  } else {
    if (ot_images == nullptr) throw InvalidArgument("ot_displacement strategy requires OT images");
    require_same_shape(source.rows(), ot_images->images, "select_active_set");
    score = (source.rows() - ot_images->images).array().square().colwise().sum().transpose();
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score[static_cast<Eigen::Index>(a)] > score[static_cast<Eigen::Index>(b)];
  });
  order.resize(k);
  return ActiveSet(std::move(order), d);
}

inline ShiftMap fit_vector_shift(const Dataset& source, const Dataset& target) {
  require_same_dim(source, target);
  return ShiftMap{source.columns(), VectorShiftMap{target.column_means() - source.column_means()}};
}

inline ShiftMap fit_k_sparse_mean(const Dataset& source, const Dataset& target, std::size_t k,
                                  Strategy strategy = Strategy::mean_gap, const OtReference* reference = nullptr) {
  ActiveSet active = select_active_set(source, target, reference ? &reference->images : nullptr, k, strategy);
  const Vector gap = target.column_means() - source.column_means();
  Vector delta = Vector::Zero(gap.size());
  for (std::size_t j : active.indices()) delta[static_cast<Eigen::Index>(j)] = gap[static_cast<Eigen::Index>(j)];
  return ShiftMap{source.columns(), KSparseMeanShiftMap{std::move(active), std::move(delta)}};
}

inline ShiftMap fit_k_sparse_ot(const Dataset& source, const Dataset& target, const OtReference& reference,
                                std::size_t k, Strategy strategy = Strategy::ot_displacement) {
  ActiveSet active = select_active_set(source, target, &reference.images, k, strategy);
  return ShiftMap{source.columns(), KSparseOTMap{std::move(active), reference.images, fingerprint(source.rows())}};
}

inline ShiftMap fit_k_sparse_ot(const Dataset& source, const Dataset& target, std::size_t k,
                                const OtConfig& ot_config = {}, Strategy strategy = Strategy::ot_displacement) {
  require_same_dim(source, target);
  return fit_k_sparse_ot(source, target, compute_ot_reference(source, target, ot_config), k, strategy);
}

struct ClusterConfig {
  std::uint64_t seed = 0;  // base seed; the k-means seed is derived from (seed, k)
  std::size_t restarts = 10;
  std::size_t max_iters = 300;
};

/// Paired clustering: k-means on [x, T_OT(x)] standardized with source
/// statistics, then per-cluster member means in original units.
inline ShiftMap fit_k_cluster(const Dataset& source, const Dataset& target, const OtReference& reference,
                              std::size_t k, const ClusterConfig& config = {}) {
  require_same_dim(source, target);
  require_same_shape(source.rows(), reference.images.images, "fit_k_cluster");
  const std::size_t n = source.n(), d = source.d();
  if (k < 1 || k > n) throw InvalidArgument("k = " + std::to_string(k) + " is out of range [1, " + std::to_string(n) + "]");

  Standardizer standardizer = fit_standardizer(source);
  const auto dd = static_cast<Eigen::Index>(d);
  Matrix joint(static_cast<Eigen::Index>(n), 2 * dd);
  const Eigen::RowVectorXd mu = standardizer.mu.transpose();
  const Eigen::RowVectorXd inv_sigma = standardizer.sigma.cwiseInverse().transpose();
  joint.leftCols(dd) = ((source.rows().rowwise() - mu).array().rowwise() * inv_sigma.array()).matrix();
  joint.rightCols(dd) = ((reference.images.images.rowwise() - mu).array().rowwise() * inv_sigma.array()).matrix();

  const KMeansResult clusters = kmeans(joint, k, KMeansConfig{derive_seed(config.seed, k), config.restarts, config.max_iters});

  Matrix src_sum = Matrix::Zero(static_cast<Eigen::Index>(k), dd);
  Matrix img_sum = Matrix::Zero(static_cast<Eigen::Index>(k), dd);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(clusters.labels[i]);
    src_sum.row(c) += source.rows().row(static_cast<Eigen::Index>(i));
    img_sum.row(c) += reference.images.images.row(static_cast<Eigen::Index>(i));
    ++count[clusters.labels[i]];
  }

  // Largest clusters first; ties keep k-means order.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return count[a] > count[b]; });

  KClusterMap map;
  map.source_centroids.resize(static_cast<Eigen::Index>(k), dd);
  map.target_centroids.resize(static_cast<Eigen::Index>(k), dd);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t c = order[r];
    if (count[c] == 0) throw NumericalError("k-cluster: empty cluster after assignment");
    map.source_centroids.row(static_cast<Eigen::Index>(r)) = src_sum.row(static_cast<Eigen::Index>(c)) / static_cast<double>(count[c]);
    map.target_centroids.row(static_cast<Eigen::Index>(r)) = img_sum.row(static_cast<Eigen::Index>(c)) / static_cast<double>(count[c]);
    map.member_counts.push_back(count[c]);
  }
  map.deltas = map.target_centroids - map.source_centroids;
  map.standardizer = std::move(standardizer);
  return ShiftMap{source.columns(), std::move(map)};
}

inline ShiftMap fit_k_cluster(const Dataset& source, const Dataset& target, std::size_t k,
                              const OtConfig& ot_config = {}, const ClusterConfig& config = {}) {
  require_same_dim(source, target);
  if (k < 1 || k > source.n()) throw InvalidArgument("k = " + std::to_string(k) + " is out of range [1, " + std::to_string(source.n()) + "]");
  return fit_k_cluster(source, target, compute_ot_reference(source, target, ot_config), k, config);
}

/// Nearest source centroid in standardized coordinates; ties to the lower index.
inline std::size_t assign_cluster(const Eigen::Ref<const Vector>& x, const KClusterMap& map) {
  if (map.k() == 0) throw InvalidArgument("assign_cluster: map has no clusters");
  if (x.size() != map.source_centroids.cols()) throw InvalidArgument("assign_cluster: dimension mismatch");
  const Vector z = map.standardizer.apply(x);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < map.k(); ++c) {
    const Vector m = map.standardizer.apply(map.source_centroids.row(static_cast<Eigen::Index>(c)).transpose());
    const double dist = (z - m).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return best;
}

/// Applies the map to every row of data.
inline PointMap push_forward(const ShiftMap& map, const Dataset& data) {
  if (data.d() != map.d()) {
    throw InvalidArgument("push_forward: map has " + std::to_string(map.d()) + " columns, data has " + std::to_string(data.d()));
  }
  Matrix out = data.rows();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, VectorShiftMap>) {
          out.rowwise() += m.delta.transpose();
        } else if constexpr (std::is_same_v<T, KSparseMeanShiftMap>) {
          for (std::size_t j : m.active.indices()) out.col(static_cast<Eigen::Index>(j)).array() += m.delta[static_cast<Eigen::Index>(j)];
        } else if constexpr (std::is_same_v<T, KSparseOTMap>) {
          if (data.n() != m.ot_images.n() || fingerprint(data.rows()) != m.training_fingerprint) {
            throw InvalidArgument("k-sparse OT map is defined only on the source rows it was fitted on");
          }
          for (std::size_t j : m.active.indices()) {
            const auto c = static_cast<Eigen::Index>(j);
            out.col(c) = m.ot_images.images.col(c);
          }
        } else {
          for (Eigen::Index i = 0; i < out.rows(); ++i) {
            const std::size_t c = assign_cluster(data.rows().row(i).transpose(), m);
            out.row(i) += m.deltas.row(static_cast<Eigen::Index>(c));
          }
        }
      },
      map.payload);
  return PointMap(std::move(out));
}

}  // namespace shiftex
