#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "shiftex/json_io.hpp"

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

Pair sample(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset a = oracle::random_dataset(rng, 24, 3);
  Dataset b = oracle::random_dataset(rng, 20, 3, 2.0);
  return {Dataset({"alpha", "beta", "gamma"}, a.rows()), Dataset({"alpha", "beta", "gamma"}, b.rows())};
}

std::vector<ShiftMap> all_maps(const Pair& p) {
  return {fit_vector_shift(p.source, p.target), fit_k_sparse_mean(p.source, p.target, 2),
          fit_k_sparse_ot(p.source, p.target, 2, exact()), fit_k_cluster(p.source, p.target, 3, exact())};
}

json reparse(const json& j) { return json::parse(j.dump()); }

}  // namespace

TEST(ShiftMapJson, RoundTripIsLossless) {
  const Pair p = sample(1);
  for (const ShiftMap& m : all_maps(p)) {
    const json j = to_json(m);
    const ShiftMap back = shift_map_from_json(reparse(j));
    EXPECT_EQ(back.family(), m.family());
    EXPECT_EQ(back.columns, m.columns);
    EXPECT_EQ(to_json(back).dump(), j.dump());
    EXPECT_EQ(push_forward(back, p.source).images, push_forward(m, p.source).images);
  }
}

TEST(ShiftMapJson, ActiveSetIsNamed) {
  const Pair p = sample(2);
  const json j = to_json(fit_k_sparse_mean(p.source, p.target, 2));
  ASSERT_EQ(j["active"].size(), 2u);
  for (std::size_t r = 0; r < 2; ++r)
    EXPECT_EQ(j["active"][r].get<std::string>(), p.source.columns()[j["active_indices"][r].get<std::size_t>()]);
}

TEST(ShiftMapJson, RejectsBrokenInvariants) {
  const Pair p = sample(3);
  const auto maps = all_maps(p);

  json sparse = to_json(maps[1]);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& idx = sparse["active_indices"];
    if (std::find(idx.begin(), idx.end(), c) == idx.end()) sparse["delta"][c] = 1.0;
  }
  EXPECT_THROW(shift_map_from_json(sparse), InvalidArgument);

  json cluster = to_json(maps[3]);
  cluster["deltas"][0][0] = cluster["deltas"][0][0].get<double>() + 1.0;
  EXPECT_THROW(shift_map_from_json(cluster), InvalidArgument);

  cluster = to_json(maps[3]);
  cluster["standardizer"]["sigma"][1] = 0.0;
  EXPECT_THROW(shift_map_from_json(cluster), InvalidArgument);

  json vec = to_json(maps[0]);
  vec["delta"].push_back(1.0);
  EXPECT_THROW(shift_map_from_json(vec), InvalidArgument);

  vec = to_json(maps[0]);
  vec["schema"] = "something/1";
  EXPECT_THROW(shift_map_from_json(vec), InvalidArgument);

  json ot = to_json(maps[2]);
  ot["training_rows"] = 3;
  EXPECT_THROW(shift_map_from_json(ot), InvalidArgument);

  ot = to_json(maps[2]);
  ot["active"][0] = "gamma_typo";
  EXPECT_THROW(shift_map_from_json(ot), InvalidArgument);
}

TEST(ReportJson, RoundTripIsLossless) {
  const Pair p = sample(4);
  for (Family f : {Family::vector, Family::k_sparse_mean, Family::k_sparse_ot, Family::k_cluster}) {
    ExplainConfig cfg;
    cfg.family = f;
    cfg.k = 2;
    cfg.lambda = 0.3;
    cfg.seed = 99;
    cfg.ot = exact();
    const ExplanationReport r = explain(p.source, p.target, cfg);
    const json j = to_json(r);
    const ExplanationReport back = report_from_json(reparse(j));
    EXPECT_EQ(to_json(back).dump(), j.dump());
    EXPECT_EQ(back.percent_explained, r.percent_explained);
    EXPECT_EQ(back.objective, r.objective);
    EXPECT_EQ(j["strategy"].is_null(), !uses_strategy(f));
  }
}

TEST(ReportJson, RejectsInconsistentNumbers) {
  const Pair p = sample(5);
  ExplainConfig cfg;
  cfg.ot = exact();
  const json good = to_json(explain(p.source, p.target, cfg));

  json bad = good;
  bad["percent_explained"] = 100.5;
  EXPECT_THROW(report_from_json(bad), InvalidArgument);
  bad = good;
  bad["objective"] = good["objective"].get<double>() + 1e-6;
  EXPECT_THROW(report_from_json(bad), InvalidArgument);
  bad = good;
  bad["transport_cost"] = -1.0;
  EXPECT_THROW(report_from_json(bad), InvalidArgument);
  bad = good;
  bad["family"] = "vector";
  EXPECT_THROW(report_from_json(bad), InvalidArgument);
  bad = good;
  bad.erase("map");
  EXPECT_THROW(report_from_json(bad), InvalidArgument);
}

TEST(OtConfigJson, RoundTrip) {
  OtConfig c;
  c.solver = Solver::sinkhorn;
  c.epsilon = 0.0025;
  c.max_iters = 123;
  c.convergence_tol = 1e-7;
  c.exact_size_limit = 99;
  const OtConfig back = ot_config_from_json(reparse(to_json(c)));
  EXPECT_EQ(back.solver, c.solver);
  EXPECT_EQ(back.epsilon, c.epsilon);
  EXPECT_EQ(back.max_iters, c.max_iters);
  EXPECT_EQ(back.convergence_tol, c.convergence_tol);
  EXPECT_EQ(back.exact_size_limit, c.exact_size_limit);
  json bad = to_json(c);
  bad["epsilon"] = -1.0;
  EXPECT_THROW(ot_config_from_json(bad), InvalidArgument);
}

TEST(GeneratorSpecJson, PartialSpecsFallBackToDefaults) {
  const GeneratorSpec s = generator_spec_from_json(json::parse(R"({"kind": "gaussian", "delta": [1, 2, 3]})"));
  EXPECT_EQ(s.kind, GeneratorKind::gaussian_mean_shift);
  EXPECT_EQ(s.d, 3u);
  EXPECT_EQ(s.n, 500u);
  const GeneratorSpec moons = generator_spec_from_json(json::parse(R"({"kind": "half-moons", "seed": 4})"));
  EXPECT_EQ(moons.seed, 4u);
  EXPECT_EQ(moons.shift, (std::vector<double>{0.5, 0.5}));
}

TEST(GeneratorSpecJson, RoundTripAndRejection) {
  for (GeneratorKind kind : {GeneratorKind::gaussian_mean_shift, GeneratorKind::gmm_component_shift, GeneratorKind::half_moons}) {
    GeneratorSpec s;
    s.kind = kind;
    s.seed = 12;
    s.n = 33;
    const json j = to_json(s);
    EXPECT_EQ(to_json(generator_spec_from_json(reparse(j))).dump(), j.dump());
  }
  EXPECT_THROW(generator_spec_from_json(json::parse(R"({"kind": "gmm", "colour": 1})")), InvalidArgument);
  EXPECT_THROW(generator_spec_from_json(json::parse(R"({"n": 5})")), InvalidArgument);
  EXPECT_THROW(generator_spec_from_json(json::parse(R"({"kind": "gaussian", "seed": -1})")), InvalidArgument);
  EXPECT_THROW(generator_spec_from_json(json::parse(R"({"kind": "gmm", "deltas": [[1, 1]]})")), InvalidArgument);
}
