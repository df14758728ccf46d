#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shiftex/maps.hpp"
#include "shiftex/ot_core.hpp"

namespace shiftex {

namespace detail {

/// (1/N) sum_i sum_j (a_ij - b_ij)^2, summed row by row in column order.
inline double mean_row_sq_distance(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double diff = a(i, j) - b(i, j);
      row += diff * diff;
    }
    total += row;
  }
  return total / static_cast<double>(a.rows());
}

}  // namespace detail

/// (1/N) sum_i ||x_i - T(x_i)||^2.
inline double transport_cost(const Dataset& source, const PointMap& images) {
  require_same_shape(source.rows(), images.images, "transport_cost");
  return detail::mean_row_sq_distance(source.rows(), images.images);
}

/// (1/N) sum_i ||T(x_i) - T_OT(x_i)||^2.
inline double distance_to_ot(const PointMap& images, const PointMap& ot_images) {
  require_same_shape(images.images, ot_images.images, "distance_to_ot");
  return detail::mean_row_sq_distance(images.images, ot_images.images);
}

inline double empirical_objective(const Dataset& source, const PointMap& images, const PointMap& ot_images,
                                  double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be a finite number >= 0");
  return transport_cost(source, images) + lambda * distance_to_ot(images, ot_images);
}

/// W2^2(source, target) for use as the denominator of percent_explained.
/// Throws NothingToExplain when the two samples coincide or the distance is 0.
inline double explainable_baseline(const Dataset& source, const Dataset& target, const OtConfig& config = {},
                                   const OtReference* reference = nullptr) {
  require_same_dim(source, target);
  if (equal_as_multisets(source.rows(), target.rows()))
    throw NothingToExplain("nothing to explain: source and target contain the same rows");
  const double w = reference ? reference->cost : w2_squared(source, target, config);
  if (!(w > 0.0)) throw NothingToExplain("nothing to explain: W2^2(source, target) is zero");
  return w;
}

/// 100 * (baseline - W2^2(T#source, target)) / baseline, given a precomputed baseline.
inline double percent_explained(double baseline, const PointMap& images, const Dataset& target,
                                const OtConfig& config = {}, double* pushed_w2 = nullptr) {
  if (!(baseline > 0.0)) throw NothingToExplain("nothing to explain: baseline distance is zero");
  const Dataset pushed(target.columns(), images.images);
  const double w = w2_squared(pushed, target, config);
  if (pushed_w2) *pushed_w2 = w;
  return 100.0 * (baseline - w) / baseline;
}

inline double percent_explained(const Dataset& source, const Dataset& target, const PointMap& images,
                                const OtConfig& config = {}) {
  require_same_shape(source.rows(), images.images, "percent_explained");
  return percent_explained(explainable_baseline(source, target, config), images, target, config);
}

// ---------------------------------------------------------------------------

struct ExplainConfig {
  Family family = Family::k_sparse_mean;
  std::size_t k = 1;                     // ignored for the vector family
  std::optional<Strategy> strategy;      // family default when unset
  double lambda = 1.0;
  OtConfig ot;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;

  Strategy resolved_strategy() const { return strategy.value_or(default_strategy(family)); }
};

struct ExplanationReport {
  ShiftMap map;
  ExplainConfig config;
  Solver solver_used = Solver::exact;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  double baseline_w2 = 0.0;
  double pushed_w2 = 0.0;
  double transport_cost = 0.0;
  double distance_to_ot = 0.0;
  double objective = 0.0;
  double percent_explained = 0.0;
  std::vector<std::string> notes;
};

/// Everything about a (source, target) pair that does not depend on the map.
struct ExplainContext {
  OtReference reference;
  double baseline = 0.0;
};

inline ExplainContext prepare_explain(const Dataset& source, const Dataset& target, const OtConfig& ot) {
  require_same_dim(source, target);
  ot.validate();
  ExplainContext ctx;
  if (equal_as_multisets(source.rows(), target.rows()))
    throw NothingToExplain("nothing to explain: source and target contain the same rows");
  ctx.reference = compute_ot_reference(source, target, ot);
  ctx.baseline = explainable_baseline(source, target, ot, &ctx.reference);
  return ctx;
}

inline ShiftMap fit_map(const Dataset& source, const Dataset& target, const ExplainContext& ctx,
                        const ExplainConfig& config) {
  switch (config.family) {
    case Family::vector:
      return fit_vector_shift(source, target);
    case Family::k_sparse_mean:
      return fit_k_sparse_mean(source, target, config.k, config.resolved_strategy(), &ctx.reference);
    case Family::k_sparse_ot:
      return fit_k_sparse_ot(source, target, ctx.reference, config.k, config.resolved_strategy());
    case Family::k_cluster:
      return fit_k_cluster(source, target, ctx.reference, config.k,
                           ClusterConfig{config.seed, config.restarts, 300});
  }
  throw InvalidArgument("unknown family");
}

inline ExplanationReport explain(const Dataset& source, const Dataset& target, const ExplainContext& ctx,
                                 const ExplainConfig& config) {
  ExplanationReport r;
  r.map = fit_map(source, target, ctx, config);
  r.config = config;
  r.solver_used = ctx.reference.plan.solver;
  r.n_source = source.n();
  r.n_target = target.n();
  r.baseline_w2 = ctx.baseline;

  const PointMap images = push_forward(r.map, source);
  r.transport_cost = transport_cost(source, images);
  r.distance_to_ot = distance_to_ot(images, ctx.reference.images);
  r.objective = r.transport_cost + config.lambda * r.distance_to_ot;
  r.percent_explained = percent_explained(ctx.baseline, images, target, config.ot, &r.pushed_w2);

  if (const auto* cm = std::get_if<KClusterMap>(&r.map.payload)) {
    for (std::size_t j : cm->standardizer.constant_columns)
      r.notes.push_back("column '" + source.columns()[j] + "' is constant in the source; its scale was set to 1");
  }
  if (r.percent_explained < 0.0)
    r.notes.push_back("negative percent_explained: the map moves the source further from the target");
  return r;
}

inline ExplanationReport explain(const Dataset& source, const Dataset& target, const ExplainConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) throw InvalidArgument("lambda must be a finite number >= 0");
  return explain(source, target, prepare_explain(source, target, config.ot), config);
}

}  // namespace shiftex
