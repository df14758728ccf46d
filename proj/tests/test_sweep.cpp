#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "shiftex/sweep.hpp"

using namespace shiftex;

namespace {

OtConfig exact() {
  OtConfig c;
  c.solver = Solver::exact;
  return c;
}

struct Pair {
  Dataset source;
  Dataset target;
};

Pair sample(std::uint64_t seed, int n = 40, int m = 30, int d = 4) {
  std::mt19937_64 rng(seed);
  Dataset a = oracle::random_dataset(rng, n, d);
  Matrix b = oracle::random_matrix(rng, m, d, 1.5);
  for (Eigen::Index j = 0; j < b.cols(); ++j) b.col(j).array() += static_cast<double>(j);
  return {a, Dataset(a.columns(), b)};
}

SweepConfig config_for(Family f) {
  SweepConfig c;
  c.base.family = f;
  c.base.ot = exact();
  c.base.seed = 5;
  return c;
}

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v;
  for (std::size_t k = lo; k <= hi; ++k) v.push_back(k);
  return v;
}

}  // namespace

TEST(Sweep, RowsMatchDirectFitsFieldForField) {
  const Pair p = sample(1);
  for (Family f : {Family::k_sparse_mean, Family::k_sparse_ot, Family::k_cluster, Family::vector}) {
    const SweepConfig cfg = config_for(f);
    const SweepResult r = run_sweep(p.source, p.target, range(1, 4), cfg);
    ASSERT_EQ(r.rows.size(), 4u);
    for (const SweepRow& row : r.rows) {
      ASSERT_TRUE(row.report) << row.error;
      ExplainConfig direct = cfg.base;
      direct.k = row.k;
      EXPECT_EQ(to_json(*row.report).dump(), to_json(explain(p.source, p.target, direct)).dump());
    }
  }
}

TEST(Sweep, SingleKEqualsDirectFit) {
  const Pair p = sample(2);
  const SweepConfig cfg = config_for(Family::k_cluster);
  const SweepResult r = run_sweep(p.source, p.target, {3}, cfg);
  ASSERT_EQ(r.rows.size(), 1u);
  ExplainConfig direct = cfg.base;
  direct.k = 3;
  EXPECT_EQ(to_json(*r.rows[0].report).dump(), to_json(explain(p.source, p.target, direct)).dump());
}

TEST(Sweep, SparseMeanAtFullDimensionEqualsVectorShift) {
  const Pair p = sample(3);
  const SweepResult r = run_sweep(p.source, p.target, {4}, config_for(Family::k_sparse_mean));
  ExplainConfig vec = config_for(Family::vector).base;
  EXPECT_EQ(r.rows[0].report->percent_explained, explain(p.source, p.target, vec).percent_explained);
}

TEST(Sweep, KValuesAreSortedAndDeduplicated) {
  const Pair p = sample(4);
  const SweepResult r = run_sweep(p.source, p.target, {3, 1, 3, 2}, config_for(Family::k_sparse_ot));
  ASSERT_EQ(r.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.rows[i].k, i + 1);
}

TEST(Sweep, SparseOtDistanceIsNonIncreasing) {
  const Pair p = sample(5);
  const SweepResult r = run_sweep(p.source, p.target, range(1, 4), config_for(Family::k_sparse_ot));
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    EXPECT_LE(r.rows[i].report->distance_to_ot, r.rows[i - 1].report->distance_to_ot);
  EXPECT_EQ(r.rows.back().report->distance_to_ot, 0.0);
}

TEST(Sweep, ThreadsDoNotChangeResults) {
  const Pair p = sample(6, 60, 50, 3);
  SweepConfig one = config_for(Family::k_cluster);
  SweepConfig many = one;
  many.threads = 4;
  const SweepResult a = run_sweep(p.source, p.target, range(1, 8), one);
  const SweepResult b = run_sweep(p.source, p.target, range(1, 8), many);
  EXPECT_EQ(render_sweep(a, OutputFormat::json), render_sweep(b, OutputFormat::json));
}

TEST(Sweep, OutOfRangeKNamesTheLimit) {
  const Pair p = sample(7);
  try {
    run_sweep(p.source, p.target, range(1, 5), config_for(Family::k_sparse_mean));
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("d = 4"), std::string::npos) << e.what();
  }
  try {
    run_sweep(p.source, p.target, {41}, config_for(Family::k_cluster));
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("N = 40"), std::string::npos) << e.what();
  }
  EXPECT_THROW(run_sweep(p.source, p.target, {0}, config_for(Family::k_sparse_mean)), InvalidArgument);
  EXPECT_THROW(run_sweep(p.source, p.target, {}, config_for(Family::k_sparse_mean)), InvalidArgument);
}

TEST(Sweep, FitFailuresAreRecordedPerRow) {
  // Two distinct rows cannot fill three clusters.
  Matrix a(4, 1), b(4, 1);
  a << 0, 0, 0, 1;
  b << 5, 5, 5, 6;
  SweepConfig cfg = config_for(Family::k_cluster);
  const SweepResult r = run_sweep(Dataset::unnamed(a), Dataset::unnamed(b), {1, 2, 3}, cfg);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.rows[0].report);
  EXPECT_TRUE(r.rows[1].report);
  EXPECT_FALSE(r.rows[2].report);
  EXPECT_FALSE(r.rows[2].error.empty());
  const std::string table = render_sweep(r, OutputFormat::table);
  EXPECT_NE(table.find("k = 3 failed: "), std::string::npos);
  const std::string csv = render_sweep(r, OutputFormat::csv);
  EXPECT_NE(csv.find("\n3,k_cluster,,,,\n"), std::string::npos) << csv;
  EXPECT_EQ(to_json(sweep_from_json(json::parse(render_sweep(r, OutputFormat::json)))).dump(), to_json(r).dump());
}

TEST(Render, SingleRowCsvIsHeaderPlusOneLine) {
  const Pair p = sample(8);
  const SweepResult r = run_sweep(p.source, p.target, {2}, config_for(Family::k_sparse_mean));
  const std::string csv = render_sweep(r, OutputFormat::csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), sweep_csv_header);
  const auto& rep = *r.rows[0].report;
  EXPECT_EQ(csv.substr(csv.find('\n') + 1), "2,k_sparse_mean," + format_double(rep.transport_cost) + "," +
                                                 format_double(rep.distance_to_ot) + "," +
                                                 format_double(rep.percent_explained) + ",\n");
  const std::string table = render_sweep(r, OutputFormat::table);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
}

TEST(Render, TableColumnsAreAligned) {
  const Pair p = sample(9);
  const SweepResult r = run_sweep(p.source, p.target, range(1, 4), config_for(Family::k_sparse_mean));
  std::istringstream in(render_sweep(r, OutputFormat::table));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  for (const auto& l : lines) EXPECT_EQ(l.size(), lines[0].size()) << l;
  EXPECT_EQ(lines[0].rfind("percent_explained"), lines[0].size() - std::string("percent_explained").size());
  EXPECT_EQ(lines[1].substr(lines[1].size() - format_6g(r.rows[0].report->percent_explained).size()),
            format_6g(r.rows[0].report->percent_explained));
}

TEST(Render, TimingsOnlyWhenRequested) {
  const Pair p = sample(10);
  SweepConfig cfg = config_for(Family::k_sparse_mean);
  const SweepResult plain = run_sweep(p.source, p.target, {1, 2}, cfg);
  EXPECT_FALSE(plain.rows[0].wall_time_ms);
  EXPECT_EQ(render_sweep(plain, OutputFormat::table).find("wall_time_ms"), std::string::npos);
  cfg.timings = true;
  const SweepResult timed = run_sweep(p.source, p.target, {1, 2}, cfg);
  ASSERT_TRUE(timed.rows[0].wall_time_ms);
  EXPECT_GE(*timed.rows[0].wall_time_ms, 0.0);
  EXPECT_NE(render_sweep(timed, OutputFormat::table).find("wall_time_ms"), std::string::npos);
}

TEST(Render, JsonRoundTrips) {
  const Pair p = sample(11);
  for (Family f : {Family::k_sparse_mean, Family::k_sparse_ot, Family::k_cluster}) {
    const SweepResult r = run_sweep(p.source, p.target, range(1, 3), config_for(f));
    const std::string text = render_sweep(r, OutputFormat::json);
    const SweepResult back = sweep_from_json(json::parse(text));
    EXPECT_EQ(render_sweep(back, OutputFormat::json), text);
    EXPECT_EQ(render_sweep(back, OutputFormat::csv), render_sweep(r, OutputFormat::csv));
  }
}

TEST(Render, EmptyResultIsRejected) {
  SweepResult r;
  EXPECT_THROW(render_sweep(r, OutputFormat::table), InvalidArgument);
  EXPECT_THROW(parse_output_format("xml"), InvalidArgument);
}
