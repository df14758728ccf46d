#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "shiftex/dataset.hpp"
#include "shiftex/ot/assignment.hpp"
#include "shiftex/ot/sinkhorn.hpp"
#include "shiftex/ot/transportation_simplex.hpp"

namespace shiftex {

// Squared Euclidean cost throughout.

enum class Solver { exact, sinkhorn, automatic };

inline std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::exact: return "exact";
    case Solver::sinkhorn: return "sinkhorn";
    case Solver::automatic: return "auto";
  }
  return "?";
}

inline Solver parse_solver(std::string_view s) {
  if (s == "exact") return Solver::exact;
  if (s == "sinkhorn") return Solver::sinkhorn;
  if (s == "auto") return Solver::automatic;
  throw InvalidArgument("unknown OT solver '" + std::string(s) + "' (expected exact, sinkhorn or auto)");
}

struct OtConfig {
  Solver solver = Solver::automatic;
  /// Entropic strength as a fraction of the mean pairwise squared distance
  /// between source and target rows; the absolute value is derived per problem.
  double epsilon = 0.01;
  std::size_t max_iters = 10000;
  /// Max relative marginal violation accepted from Sinkhorn.
  double convergence_tol = 1e-9;
  /// Largest N*M (row counts) the exact solver accepts; also the auto switch point.
  std::size_t exact_size_limit = 250000;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be a positive finite number");
    if (max_iters == 0) throw InvalidArgument("max_iters must be positive");
    if (!(convergence_tol > 0.0)) throw InvalidArgument("convergence_tol must be positive");
    if (exact_size_limit == 0) throw InvalidArgument("exact_size_limit must be positive");
  }

  Solver resolve(std::size_t n, std::size_t m) const {
    if (solver != Solver::automatic) return solver;
    return n * m <= exact_size_limit ? Solver::exact : Solver::sinkhorn;
  }
};

/// Coupling between the atoms of two empirical measures.
///
/// The exact solver works on individual rows (one atom per row). Sinkhorn
/// merges duplicate rows into weighted atoms first; the entropic optimum
/// gives identical rows to identical points, so the merge is lossless.
/// source_atom / target_atom map every data row to its atom.
struct TransportPlan {
  Matrix weights;
  Vector source_masses;
  Vector target_masses;
  std::vector<std::size_t> source_atom;
  std::vector<std::size_t> target_atom;
  Solver solver = Solver::exact;
  double epsilon = 0.0;  // absolute entropic strength, 0 for exact
  std::size_t iterations = 0;
  double residual = 0.0;

  std::size_t source_rows() const noexcept { return source_atom.size(); }
  std::size_t target_rows() const noexcept { return target_atom.size(); }

  /// Largest relative deviation of plan marginals from the prescribed masses.
  double marginal_violation() const {
    double worst = 0.0;
    const Vector rows = weights.rowwise().sum();
    const Vector cols = weights.colwise().sum().transpose();
    for (Eigen::Index i = 0; i < rows.size(); ++i)
      worst = std::max(worst, std::abs(rows[i] - source_masses[i]) / source_masses[i]);
    for (Eigen::Index j = 0; j < cols.size(); ++j)
      worst = std::max(worst, std::abs(cols[j] - target_masses[j]) / target_masses[j]);
    return worst;
  }
};

/// Pairwise squared Euclidean distances, a.rows() x b.rows().
inline Matrix squared_distances(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) c(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return c;
}

/// E||x - y||^2 over independent uniform draws of a source and a target row.
inline double mean_pairwise_squared_distance(const Dataset& source, const Dataset& target) {
  require_same_dim(source, target);
  const Vector ms = source.column_means();
  const Vector mt = target.column_means();
  const double ss = source.rows().rowwise().squaredNorm().mean();
  const double st = target.rows().rowwise().squaredNorm().mean();
  return std::max(0.0, ss + st - 2.0 * ms.dot(mt));
}

/// Exact minimum-cost coupling with uniform row masses.
inline TransportPlan exact_ot_plan(const Dataset& source, const Dataset& target, const OtConfig& config = {}) {
  require_same_dim(source, target);
  config.validate();
  const std::size_t n = source.n(), m = target.n();
  if (n * m > config.exact_size_limit) {
    throw SizeLimitExceeded("exact OT on " + std::to_string(n) + "x" + std::to_string(m) +
                            " rows exceeds exact_size_limit " + std::to_string(config.exact_size_limit) +
                            "; use the sinkhorn solver");
  }
  const Matrix cost = squared_distances(source.rows(), target.rows());

  TransportPlan plan;
  plan.solver = Solver::exact;
  const Atoms src = identity_atoms(source.rows());
  const Atoms tgt = identity_atoms(target.rows());
  plan.source_masses = src.masses;
  plan.target_masses = tgt.masses;
  plan.source_atom = src.atom_of_row;
  plan.target_atom = tgt.atom_of_row;
  plan.weights = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));

  if (n == m) {
    const auto match = ot::solve_assignment(cost);
    for (std::size_t i = 0; i < n; ++i)
      plan.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(match[i])) = 1.0 / static_cast<double>(n);
  } else {
    // Masses 1/n and 1/m scaled by n*m become the integers m and n.
    const std::vector<std::int64_t> supply(n, static_cast<std::int64_t>(m));
    const std::vector<std::int64_t> demand(m, static_cast<std::int64_t>(n));
    const auto flow = ot::solve_transportation(cost, supply, demand);
    const double total = static_cast<double>(n) * static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (flow[i * m + j] != 0)
          plan.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              static_cast<double>(flow[i * m + j]) / total;
  }
  return plan;
}

/// Entropic coupling (log-domain, annealed). Deterministic.
inline TransportPlan sinkhorn_plan(const Dataset& source, const Dataset& target, const OtConfig& config = {}) {
  require_same_dim(source, target);
  config.validate();
  const Atoms src = collapse_duplicates(source.rows());
  const Atoms tgt = collapse_duplicates(target.rows());

  TransportPlan plan;
  plan.solver = Solver::sinkhorn;
  plan.source_masses = src.masses;
  plan.target_masses = tgt.masses;
  plan.source_atom = src.atom_of_row;
  plan.target_atom = tgt.atom_of_row;

  const double scale = mean_pairwise_squared_distance(source, target);
  if (scale == 0.0) {
    // Both sides are one and the same point; every coupling is optimal.
    plan.weights = src.masses * tgt.masses.transpose();
    return plan;
  }
  ot::SinkhornOptions opt;
  opt.epsilon = config.epsilon * scale;
  opt.start_epsilon = scale;
  opt.tolerance = config.convergence_tol;
  opt.max_iterations = config.max_iters;
  auto res = ot::sinkhorn(squared_distances(src.points, tgt.points), src.masses, tgt.masses, opt);
  plan.weights = std::move(res.plan);
  plan.epsilon = opt.epsilon;
  plan.iterations = res.iterations;
  plan.residual = res.residual;
  return plan;
}

/// Dispatches on config.solver (auto: exact when N*M <= exact_size_limit).
inline TransportPlan ot_plan(const Dataset& source, const Dataset& target, const OtConfig& config = {}) {
  switch (config.resolve(source.n(), target.n())) {
    case Solver::exact: return exact_ot_plan(source, target, config);
    default: return sinkhorn_plan(source, target, config);
  }
}

namespace detail {

inline Matrix atom_points(const Matrix& rows, const std::vector<std::size_t>& atom_of_row, Eigen::Index atoms) {
  Matrix pts(atoms, rows.cols());
  std::vector<char> seen(static_cast<std::size_t>(atoms), 0);
  for (std::size_t r = 0; r < atom_of_row.size(); ++r) {
    if (!seen[atom_of_row[r]]) {
      seen[atom_of_row[r]] = 1;
      pts.row(static_cast<Eigen::Index>(atom_of_row[r])) = rows.row(static_cast<Eigen::Index>(r));
    }
  }
  return pts;
}

}  // namespace detail

/// Sum_ij pi_ij ||x_i - y_j||^2 for a plan built from these datasets.
inline double plan_cost(const TransportPlan& plan, const Dataset& source, const Dataset& target) {
  if (plan.source_rows() != source.n() || plan.target_rows() != target.n())
    throw InvalidArgument("plan_cost: plan does not match datasets");
  const Matrix xs = detail::atom_points(source.rows(), plan.source_atom, plan.weights.rows());
  const Matrix ys = detail::atom_points(target.rows(), plan.target_atom, plan.weights.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < plan.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.weights.cols(); ++j) {
      const double w = plan.weights(i, j);
      if (w != 0.0) total += w * (xs.row(i) - ys.row(j)).squaredNorm();
    }
  return total;
}

/// T_OT(x_i) = sum_j pi_ij y_j / sum_j pi_ij, per source row.
inline PointMap barycentric_map(const TransportPlan& plan, const Dataset& target) {
  if (plan.target_rows() != target.n()) {
    throw InvalidArgument("barycentric_map: plan has " + std::to_string(plan.target_rows()) +
                          " target rows, dataset has " + std::to_string(target.n()));
  }
  const Matrix ys = detail::atom_points(target.rows(), plan.target_atom, plan.weights.cols());
  const Vector mass = plan.weights.rowwise().sum();
  Matrix atom_images(plan.weights.rows(), target.rows().cols());
  for (Eigen::Index i = 0; i < plan.weights.rows(); ++i) {
    if (!(mass[i] > 0.0)) throw NumericalError("barycentric_map: source atom " + std::to_string(i) + " has zero mass");
    // Single-target rows copy the point exactly; avoids rounding on permutation plans.
    Eigen::Index only = -1;
    int nonzero = 0;
    for (Eigen::Index j = 0; j < plan.weights.cols(); ++j)
      if (plan.weights(i, j) != 0.0) {
        only = j;
        ++nonzero;
      }
    if (nonzero == 1) {
      atom_images.row(i) = ys.row(only);
    } else {
      atom_images.row(i) = (plan.weights.row(i) * ys) / mass[i];
    }
  }
  Matrix images(static_cast<Eigen::Index>(plan.source_rows()), target.rows().cols());
  for (std::size_t r = 0; r < plan.source_rows(); ++r)
    images.row(static_cast<Eigen::Index>(r)) = atom_images.row(static_cast<Eigen::Index>(plan.source_atom[r]));
  return PointMap(std::move(images));
}

/// Squared Wasserstein-2 distance between the empirical measures of a and b.
/// Equal multisets give exactly 0 with either solver.
inline double w2_squared(const Dataset& a, const Dataset& b, const OtConfig& config = {}) {
  require_same_dim(a, b);
  if (equal_as_multisets(a.rows(), b.rows())) return 0.0;
  return plan_cost(ot_plan(a, b, config), a, b);
}

/// A plan together with its barycentric images; computed once per problem.
struct OtReference {
  TransportPlan plan;
  PointMap images;
  double cost = 0.0;
};

inline OtReference compute_ot_reference(const Dataset& source, const Dataset& target, const OtConfig& config = {}) {
  OtReference ref;
  ref.plan = ot_plan(source, target, config);
  ref.images = barycentric_map(ref.plan, target);
  ref.cost = plan_cost(ref.plan, source, target);
  return ref;
}

}  // namespace shiftex
