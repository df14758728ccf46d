#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "shiftex/maps.hpp"
#include "shiftex/metrics.hpp"

using namespace shiftex;

namespace {

OtConfig exact() {
  OtConfig c;
  c.solver = Solver::exact;
  return c;
}

Dataset from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return Dataset::unnamed(m);
}

Dataset shifted(const Dataset& d, const Vector& delta) {
  Matrix m = d.rows();
  m.rowwise() += delta.transpose();
  return Dataset(d.columns(), m);
}

// Squared OT displacement summed over inactive coordinates only.
double inactive_residual(const Dataset& source, const Matrix& ot_images, const ActiveSet& active) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < source.rows().rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < source.rows().cols(); ++j) {
      if (active.contains(static_cast<std::size_t>(j))) {
        row += 0.0;
        continue;
      }
      const double diff = source.rows()(i, j) - ot_images(i, j);
      row += diff * diff;
    }
    total += row;
  }
  return total / static_cast<double>(source.n());
}

}  // namespace

TEST(SelectActiveSet, OnlyShiftedColumnIsChosenByEitherStrategy) {
  std::mt19937_64 rng(3);
  const Dataset src = oracle::random_dataset(rng, 12, 2);
  Vector delta(2);
  delta << 5.0, 0.0;
  const Dataset tgt = shifted(src, delta);
  const OtReference ref = compute_ot_reference(src, tgt, exact());
  EXPECT_EQ(select_active_set(src, tgt, nullptr, 1, Strategy::mean_gap).indices(), std::vector<std::size_t>{0});
  EXPECT_EQ(select_active_set(src, tgt, &ref.images, 1, Strategy::ot_displacement).indices(), std::vector<std::size_t>{0});
}

TEST(SelectActiveSet, TiesGoToLowerIndexAndOrderIsByScore) {
  const Dataset src = from_rows({{0, 0, 0, 0}, {1, 1, 1, 1}});
  const Dataset tgt = from_rows({{2, 1, 2, 5}, {3, 2, 3, 6}});  // gaps 2, 1, 2, 5
  EXPECT_EQ(select_active_set(src, tgt, nullptr, 3, Strategy::mean_gap).indices(), (std::vector<std::size_t>{3, 0, 2}));
  EXPECT_EQ(select_active_set(src, tgt, nullptr, 2, Strategy::mean_gap).indices(), (std::vector<std::size_t>{3, 0}));
}

TEST(SelectActiveSet, Errors) {
  const Dataset src = from_rows({{0, 0}, {1, 1}});
  EXPECT_THROW(select_active_set(src, src, nullptr, 0, Strategy::mean_gap), InvalidArgument);
  EXPECT_THROW(select_active_set(src, src, nullptr, 3, Strategy::mean_gap), InvalidArgument);
  EXPECT_THROW(select_active_set(src, src, nullptr, 1, Strategy::ot_displacement), InvalidArgument);
  EXPECT_THROW(ActiveSet({0, 0}, 2), InvalidArgument);
  EXPECT_THROW(ActiveSet({2}, 2), InvalidArgument);
}

TEST(VectorShift, MeanArithmetic) {
  const ShiftMap m = fit_vector_shift(from_rows({{0}, {2}}), from_rows({{5}, {7}}));
  EXPECT_EQ(std::get<VectorShiftMap>(m.payload).delta(0), 5.0);
  const Dataset same = from_rows({{1, 2}, {3, 4}});
  EXPECT_TRUE(std::get<VectorShiftMap>(fit_vector_shift(same, same).payload).delta.isZero(0.0));
}

TEST(VectorShift, ZeroDeltaIsIdentity) {
  const Dataset d = from_rows({{1.5, -2}, {3, 4}});
  const ShiftMap m{d.columns(), VectorShiftMap{Vector::Zero(2)}};
  EXPECT_EQ(push_forward(m, d).images, d.rows());
}

TEST(KSparseMean, KEqualsDMatchesVectorShift) {
  std::mt19937_64 rng(5);
  const Dataset src = oracle::random_dataset(rng, 20, 4);
  const Dataset tgt = oracle::random_dataset(rng, 15, 4, 2.0);
  const auto v = std::get<VectorShiftMap>(fit_vector_shift(src, tgt).payload);
  const auto s = std::get<KSparseMeanShiftMap>(fit_k_sparse_mean(src, tgt, 4).payload);
  EXPECT_EQ(s.delta, v.delta);
}

TEST(KSparseMean, DeltaIsZeroOffActiveSet) {
  std::mt19937_64 rng(6);
  const Dataset src = oracle::random_dataset(rng, 20, 5);
  const Dataset tgt = oracle::random_dataset(rng, 20, 5, 3.0);
  const auto s = std::get<KSparseMeanShiftMap>(fit_k_sparse_mean(src, tgt, 2).payload);
  const Vector gap = tgt.column_means() - src.column_means();
  for (std::size_t j = 0; j < 5; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    EXPECT_EQ(s.delta(jj), s.active.contains(j) ? gap(jj) : 0.0);
  }
}

TEST(KSparseMean, TwoOfFiveShiftedGaussiansAreFullyExplained) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  Matrix a(500, 5), b(500, 5);
  for (Eigen::Index i = 0; i < 500; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) {
      a(i, j) = z(rng);
      b(i, j) = z(rng) + (j == 1 ? 10.0 : j == 3 ? -8.0 : 0.0);
    }
  const Dataset src = Dataset::unnamed(a), tgt = Dataset::unnamed(b);
  ExplainConfig cfg;
  cfg.family = Family::k_sparse_mean;
  cfg.k = 2;
  const ExplanationReport r = explain(src, tgt, cfg);
  EXPECT_EQ(std::get<KSparseMeanShiftMap>(r.map.payload).active.indices(), (std::vector<std::size_t>{1, 3}));
  EXPECT_GE(r.percent_explained, 99.0);
  cfg.family = Family::vector;
  EXPECT_NEAR(explain(src, tgt, cfg).percent_explained, r.percent_explained, 0.5);
}

// Mean-shift closed form: on its active set the fitted delta minimises the
// distance-to-OT term; no random perturbation does better.
TEST(KSparseMean, BeatsRandomPerturbationsOnItsActiveSet) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(2, 16), dim(1, 4);
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  for (int inst = 0; inst < 50; ++inst) {
    const int n = size(rng), d = dim(rng);
    const Dataset src = oracle::random_dataset(rng, n, d);
    const Dataset tgt = oracle::random_dataset(rng, n, d, 2.0);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, static_cast<std::size_t>(d))(rng);
    const OtReference ref = compute_ot_reference(src, tgt, exact());
    const ShiftMap fitted = fit_k_sparse_mean(src, tgt, k, Strategy::mean_gap, &ref);
    const auto& sparse = std::get<KSparseMeanShiftMap>(fitted.payload);
    const double best = distance_to_ot(push_forward(fitted, src), ref.images);
    for (int p = 0; p < 1000; ++p) {
      KSparseMeanShiftMap other = sparse;
      for (std::size_t j : other.active.indices()) other.delta(static_cast<Eigen::Index>(j)) += noise(rng);
      const double worse = distance_to_ot(push_forward(ShiftMap{src.columns(), other}, src), ref.images);
      ASSERT_LE(best, worse) << "instance " << inst << ", perturbation " << p;
    }
  }
}

TEST(KSparseOt, InactiveCoordinatesAreBitIdentical) {
  std::mt19937_64 rng(13);
  const Dataset src = oracle::random_dataset(rng, 30, 5);
  const Dataset tgt = oracle::random_dataset(rng, 25, 5, 2.0);
  for (std::size_t k = 1; k <= 5; ++k) {
    for (const ShiftMap& m : {fit_k_sparse_ot(src, tgt, k, exact()), fit_k_sparse_mean(src, tgt, k)}) {
      const PointMap out = push_forward(m, src);
      const ActiveSet& active = m.family() == Family::k_sparse_ot ? std::get<KSparseOTMap>(m.payload).active
                                                                  : std::get<KSparseMeanShiftMap>(m.payload).active;
      for (Eigen::Index i = 0; i < out.images.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.images.cols(); ++j) {
          if (!active.contains(static_cast<std::size_t>(j))) {
            ASSERT_EQ(out.images(i, j), src.rows()(i, j));
          }
        }
      }
    }
  }
}

// OT closed form: distance to OT equals the inactive-column residual exactly.
TEST(KSparseOt, DistanceToOtEqualsInactiveResidual) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(2, 16), dim(1, 4);
  for (int inst = 0; inst < 100; ++inst) {
    const int n = size(rng), m = size(rng), d = dim(rng);
    const Dataset src = oracle::random_dataset(rng, n, d);
    const Dataset tgt = oracle::random_dataset(rng, m, d, 1.5);
    const OtReference ref = compute_ot_reference(src, tgt, exact());
    for (std::size_t k = 1; k <= static_cast<std::size_t>(d); ++k) {
      for (Strategy s : {Strategy::ot_displacement, Strategy::mean_gap}) {
        const ShiftMap map = fit_k_sparse_ot(src, tgt, ref, k, s);
        const double dist = distance_to_ot(push_forward(map, src), ref.images);
        ASSERT_EQ(dist, inactive_residual(src, ref.images.images, std::get<KSparseOTMap>(map.payload).active));
      }
    }
  }
}

TEST(KSparseOt, DistanceToOtIsNonIncreasingInK) {
  std::mt19937_64 rng(19);
  for (int inst = 0; inst < 30; ++inst) {
    const Dataset src = oracle::random_dataset(rng, 12, 4);
    const Dataset tgt = oracle::random_dataset(rng, 12, 4, 2.0);
    const OtReference ref = compute_ot_reference(src, tgt, exact());
    for (Strategy s : {Strategy::ot_displacement, Strategy::mean_gap}) {
      double prev = std::numeric_limits<double>::infinity();
      std::vector<std::size_t> prev_set;
      for (std::size_t k = 1; k <= 4; ++k) {
        const ShiftMap map = fit_k_sparse_ot(src, tgt, ref, k, s);
        const auto& idx = std::get<KSparseOTMap>(map.payload).active.indices();
        ASSERT_TRUE(std::equal(prev_set.begin(), prev_set.end(), idx.begin()));
        prev_set = idx;
        const double dist = distance_to_ot(push_forward(map, src), ref.images);
        ASSERT_LE(dist, prev);
        prev = dist;
      }
      EXPECT_EQ(prev, 0.0);
    }
  }
}

TEST(KSparseOt, IdenticalSamplesGiveIdentityMap) {
  std::mt19937_64 rng(23);
  const Dataset d = oracle::random_dataset(rng, 10, 3);
  const ShiftMap m = fit_k_sparse_ot(d, d, 2, exact());
  const PointMap out = push_forward(m, d);
  EXPECT_EQ(out.images, d.rows());
  EXPECT_EQ(transport_cost(d, out), 0.0);
}

TEST(KSparseOt, RejectsRowsOtherThanTraining) {
  std::mt19937_64 rng(29);
  const Dataset src = oracle::random_dataset(rng, 10, 2);
  const Dataset tgt = oracle::random_dataset(rng, 10, 2);
  const ShiftMap m = fit_k_sparse_ot(src, tgt, 1, exact());
  EXPECT_THROW(push_forward(m, tgt), InvalidArgument);
  EXPECT_THROW(push_forward(m, oracle::random_dataset(rng, 4, 2)), InvalidArgument);
}

TEST(KCluster, DeltaIdentityHoldsExactly) {
  std::mt19937_64 rng(31);
  for (int inst = 0; inst < 10; ++inst) {
    const Dataset src = oracle::random_dataset(rng, 40, 3);
    const Dataset tgt = oracle::random_dataset(rng, 35, 3, 2.0);
    for (std::size_t k : {1, 2, 5}) {
      const auto m = std::get<KClusterMap>(fit_k_cluster(src, tgt, k, exact()).payload);
      ASSERT_EQ(m.k(), k);
      for (Eigen::Index c = 0; c < m.deltas.rows(); ++c) {
        for (Eigen::Index j = 0; j < m.deltas.cols(); ++j) {
          ASSERT_EQ(m.deltas(c, j), m.target_centroids(c, j) - m.source_centroids(c, j));
        }
      }
      ASSERT_TRUE((m.standardizer.sigma.array() > 0.0).all());
      std::size_t total = 0;
      for (std::size_t c = 0; c < k; ++c) {
        total += m.member_counts[c];
        if (c) {
          ASSERT_GE(m.member_counts[c - 1], m.member_counts[c]);
        }
      }
      ASSERT_EQ(total, 40u);
    }
  }
}

TEST(KCluster, SingleClusterWithPermutationPlanIsTheMeanGap) {
  std::mt19937_64 rng(37);
  const Dataset src = oracle::random_dataset(rng, 25, 3);
  const Dataset tgt = oracle::random_dataset(rng, 25, 3, 3.0);
  const auto m = std::get<KClusterMap>(fit_k_cluster(src, tgt, 1, exact()).payload);
  const Vector gap = tgt.column_means() - src.column_means();
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(m.deltas(0, j), gap(j), 1e-12);
}

TEST(KCluster, SingleClusterPushForwardIsAVectorShift) {
  std::mt19937_64 rng(41);
  const Dataset src = oracle::random_dataset(rng, 20, 2);
  const Dataset tgt = oracle::random_dataset(rng, 20, 2, 2.0);
  const ShiftMap cm = fit_k_cluster(src, tgt, 1, exact());
  const Vector delta = std::get<KClusterMap>(cm.payload).deltas.row(0).transpose();
  EXPECT_EQ(push_forward(cm, src).images, push_forward(ShiftMap{src.columns(), VectorShiftMap{delta}}, src).images);
}

TEST(KCluster, DeterministicForSameSeed) {
  std::mt19937_64 rng(43);
  const Dataset src = oracle::random_dataset(rng, 60, 3);
  const Dataset tgt = oracle::random_dataset(rng, 50, 3, 2.0);
  const auto a = std::get<KClusterMap>(fit_k_cluster(src, tgt, 4, exact(), ClusterConfig{9}).payload);
  const auto b = std::get<KClusterMap>(fit_k_cluster(src, tgt, 4, exact(), ClusterConfig{9}).payload);
  EXPECT_EQ(a.deltas, b.deltas);
  EXPECT_EQ(a.source_centroids, b.source_centroids);
  EXPECT_EQ(a.member_counts, b.member_counts);
}

TEST(KCluster, ConstantColumnGetsUnitScale) {
  const Dataset src = from_rows({{1, 0}, {1, 1}, {1, 2}, {1, 3}});
  const Dataset tgt = from_rows({{2, 0}, {2, 1}, {2, 2}, {2, 3}});
  const auto m = std::get<KClusterMap>(fit_k_cluster(src, tgt, 2, exact()).payload);
  EXPECT_EQ(m.standardizer.sigma(0), 1.0);
  EXPECT_EQ(m.standardizer.constant_columns, std::vector<std::size_t>{0});
}

TEST(KCluster, KOutOfRange) {
  const Dataset src = from_rows({{0}, {1}});
  EXPECT_THROW(fit_k_cluster(src, src, 0, exact()), InvalidArgument);
  EXPECT_THROW(fit_k_cluster(src, src, 3, exact()), InvalidArgument);
}

TEST(AssignCluster, Examples) {
  KClusterMap m;
  m.source_centroids = Matrix(4, 1);
  m.source_centroids << 0.0, 2.0, 10.0, 4.0;
  m.target_centroids = m.source_centroids;
  m.deltas = Matrix::Zero(4, 1);
  m.standardizer.mu = Vector::Zero(1);
  m.standardizer.sigma = Vector::Ones(1);
  m.member_counts = {1, 1, 1, 1};
  for (Eigen::Index c = 0; c < 4; ++c) EXPECT_EQ(assign_cluster(m.source_centroids.row(c).transpose(), m), static_cast<std::size_t>(c));
  // Equidistant between centroid 1 (at 2) and centroid 3 (at 4).
  EXPECT_EQ(assign_cluster(Vector::Constant(1, 3.0), m), 1u);

  KClusterMap one = m;
  one.source_centroids = Matrix::Constant(1, 1, 5.0);
  one.target_centroids = one.source_centroids;
  one.deltas = Matrix::Zero(1, 1);
  one.member_counts = {4};
  for (double x : {-100.0, 0.0, 5.0, 1e9}) EXPECT_EQ(assign_cluster(Vector::Constant(1, x), one), 0u);
}

TEST(AssignCluster, UsesStandardizedDistance) {
  KClusterMap m;
  m.source_centroids = Matrix(2, 2);
  m.source_centroids << 0.0, 0.0, 3.0, 100.0;
  m.target_centroids = m.source_centroids;
  m.deltas = Matrix::Zero(2, 2);
  m.standardizer.mu = Vector::Zero(2);
  m.standardizer.sigma = Vector(2);
  m.standardizer.sigma << 1.0, 100.0;
  m.member_counts = {1, 1};
  Vector x(2);
  x << 2.0, 40.0;  // raw distance favours 0, standardized favours 1
  EXPECT_EQ(assign_cluster(x, m), 1u);
}

TEST(PushForward, ColumnMismatch) {
  const Dataset d = from_rows({{1, 2}});
  const ShiftMap m{{"a"}, VectorShiftMap{Vector::Zero(1)}};
  EXPECT_THROW(push_forward(m, d), InvalidArgument);
}
