#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shiftex/dataset.hpp"

namespace shiftex::ot {

struct SinkhornResult {
  Matrix plan;
  std::size_t iterations = 0;  // scaling iterations plus Newton steps
  double residual = 0.0;       // max relative marginal violation of the returned plan
};

struct SinkhornOptions {
  double epsilon = 1.0;  // absolute regularization strength
  double tolerance = 1e-9;
  std::size_t max_iterations = 10000;
  /// First annealing level; no annealing when <= epsilon.
  double start_epsilon = 0.0;
};

namespace detail {

// Potentials f, g live in the log domain; the working kernel is
// K_ij = exp((f_i + g_j - C_ij) / eps) and the scalings u, v multiply it.
// When u or v drift far from 1 they are folded back into f, g.
class StabilizedSinkhorn {
 public:
  StabilizedSinkhorn(const Matrix& cost, const Vector& a, const Vector& b)
      : cost_(cost), a_(a), b_(b), f_(Vector::Zero(a.size())), g_(Vector::Zero(b.size())) {}

  // Exact log-domain half steps; guarantee each row/column of K has a unit-scale entry.
  void log_update(double eps) {
    const Eigen::Index n = cost_.rows(), m = cost_.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j) mx = std::max(mx, g_[j] - cost_(i, j));
      double s = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) s += std::exp((g_[j] - cost_(i, j) - mx) / eps);
      f_[i] = eps * std::log(a_[i]) - mx - eps * std::log(s);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) mx = std::max(mx, f_[i] - cost_(i, j));
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += std::exp((f_[i] - cost_(i, j) - mx) / eps);
      g_[j] = eps * std::log(b_[j]) - mx - eps * std::log(s);
    }
  }

  void rebuild_kernel(double eps) {
    kernel_ = kernel_at(f_, g_, eps);
    u_ = Vector::Ones(cost_.rows());
    v_ = Vector::Ones(cost_.cols());
  }

  void absorb(double eps) {
    f_ += eps * u_.array().log().matrix();
    g_ += eps * v_.array().log().matrix();
  }

  // Scaling iterations at fixed eps until the row residual drops below
  // stop_at or the budget runs out. Leaves u, v folded into f, g.
  double scale(double eps, double stop_at, std::size_t budget, std::size_t& used) {
    log_update(eps);
    rebuild_kernel(eps);
    constexpr double absorb_threshold = 1e30;
    double residual = std::numeric_limits<double>::infinity();
    while (used < budget) {
      ++used;
      Vector kv = kernel_ * v_;
      Vector u_new = a_.cwiseQuotient(kv);
      if (!u_new.allFinite()) {
        absorb(eps);
        log_update(eps);
        rebuild_kernel(eps);
        continue;
      }
      // Row marginal of diag(u) K diag(v) relative to a_i is u_i / u_new_i.
      residual = ((u_.array() / u_new.array()) - 1.0).abs().maxCoeff();
      u_ = std::move(u_new);
      Vector v_new = b_.cwiseQuotient(kernel_.transpose() * u_);
      if (!v_new.allFinite()) {
        absorb(eps);
        log_update(eps);
        rebuild_kernel(eps);
        continue;
      }
      v_ = std::move(v_new);
      if (residual <= stop_at) break;
      if (u_.maxCoeff() > absorb_threshold || v_.maxCoeff() > absorb_threshold ||
          u_.minCoeff() < 1.0 / absorb_threshold || v_.minCoeff() < 1.0 / absorb_threshold) {
        absorb(eps);
        rebuild_kernel(eps);
      }
    }
    absorb(eps);
    rebuild_kernel(eps);
    return residual;
  }

  // One damped Newton step on the dual in (f, g). Small Hessian systems are
  // factored densely, larger ones go to Jacobi-preconditioned conjugate
  // gradients. Returns false when no step length reduces the marginal residual.
  bool newton_step(double eps) {
    const Eigen::Index n = cost_.rows(), m = cost_.cols();
    const Vector rows = kernel_.rowwise().sum();
    const Vector cols = kernel_.colwise().sum().transpose();
    const double current = residual_of(rows, cols);

    Vector rhs(n + m), diag(n + m);
    rhs << (a_ - rows), (b_ - cols);
    rhs *= eps;
    diag << rows, cols;
    if (!(diag.array() > 0.0).all()) return false;
    // (f + c, g - c) leaves the plan unchanged; pinning the last g removes that null direction.
    const Eigen::Index pin = n + m - 1;
    Vector x = Vector::Zero(n + m);
    if (n + m <= dense_newton_limit) {
      Matrix h = Matrix::Zero(pin, pin);
      h.topLeftCorner(n, n).diagonal() = rows;
      h.topRightCorner(n, m - 1) = kernel_.leftCols(m - 1);
      h.bottomLeftCorner(m - 1, n) = kernel_.leftCols(m - 1).transpose();
      h.bottomRightCorner(m - 1, m - 1).diagonal() = cols.head(m - 1);
      x.head(pin) = h.ldlt().solve(rhs.head(pin));
      if (!x.allFinite()) return false;
    } else {
      rhs(pin) = 0.0;
      diag(pin) = 1.0;
      auto apply = [&](const Vector& v) {
        Vector y(n + m);
        y.head(n) = rows.cwiseProduct(v.head(n)) + kernel_ * v.tail(m);
        y.tail(m) = kernel_.transpose() * v.head(n) + cols.cwiseProduct(v.tail(m));
        y(pin) = 0.0;
        return y;
      };
      // Conditioning degrades as eps shrinks; keep the best iterate seen.
      Vector r = rhs, z = r.cwiseQuotient(diag), d = z, best = x;
      double rz = r.dot(z), best_norm = r.norm();
      const double stop = 1e-8 * rhs.norm();
      for (std::size_t k = 0; k < cg_cap && best_norm > stop; ++k) {
        const Vector ad = apply(d);
        const double curvature = d.dot(ad);
        if (!(curvature > 0.0)) break;
        const double alpha = rz / curvature;
        x += alpha * d;
        r -= alpha * ad;
        if (r.norm() < best_norm) {
          best_norm = r.norm();
          best = x;
        }
        z = r.cwiseQuotient(diag);
        const double rz_next = r.dot(z);
        d = z + (rz_next / rz) * d;
        rz = rz_next;
      }
      x = std::move(best);
    }

    double step = 1.0;
    for (int tries = 0; tries < 30; ++tries, step *= 0.5) {
      const Vector f = f_ + step * x.head(n);
      const Vector g = g_ + step * x.tail(m);
      Matrix k = kernel_at(f, g, eps);
      if (!k.allFinite()) continue;
      if (residual_of(k.rowwise().sum(), k.colwise().sum().transpose()) < current) {
        f_ = f;
        g_ = g;
        kernel_ = std::move(k);
        return true;
      }
    }
    return false;
  }

  double residual() const { return residual_of(kernel_.rowwise().sum(), kernel_.colwise().sum().transpose()); }

  // Valid after scale() or newton_step(), when u and v are folded in.
  const Matrix& plan() const { return kernel_; }

 private:
  static constexpr Eigen::Index dense_newton_limit = 1200;
  static constexpr std::size_t cg_cap = 500;

  Matrix kernel_at(const Vector& f, const Vector& g, double eps) const {
    Matrix k(cost_.rows(), cost_.cols());
    for (Eigen::Index i = 0; i < cost_.rows(); ++i)
      for (Eigen::Index j = 0; j < cost_.cols(); ++j) k(i, j) = std::exp((f[i] + g[j] - cost_(i, j)) / eps);
    return k;
  }

  double residual_of(const Vector& rows, const Vector& cols) const {
    return std::max((rows.array() / a_.array() - 1.0).abs().maxCoeff(),
                    (cols.array() / b_.array() - 1.0).abs().maxCoeff());
  }

  const Matrix& cost_;
  const Vector& a_;
  const Vector& b_;
  Vector f_, g_, u_, v_;
  Matrix kernel_;
};

}  // namespace detail

/// Entropic OT between weighted atoms.
///
/// Anneals epsilon geometrically (factor 4) from start_epsilon down to
/// epsilon with warm-started potentials; intermediate levels stop at a
/// coarse residual. At the final level, scaling iterations bring the residual
/// under 1e-3 and Newton steps on the dual finish the solve. Scaling resumes
/// if a Newton step makes no progress or three in a row fail to halve the
/// residual. Every scaling iteration and Newton step
/// counts against max_iterations.
inline SinkhornResult sinkhorn(const Matrix& cost, const Vector& a, const Vector& b, const SinkhornOptions& opt) {
  if (cost.rows() != a.size() || cost.cols() != b.size()) throw InvalidArgument("sinkhorn: size mismatch");
  if (!(opt.epsilon > 0.0) || !std::isfinite(opt.epsilon)) throw InvalidArgument("sinkhorn: epsilon must be > 0");
  if (!(opt.tolerance > 0.0)) throw InvalidArgument("sinkhorn: tolerance must be > 0");
  if (opt.max_iterations == 0) throw InvalidArgument("sinkhorn: max_iterations must be > 0");
  if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any()) throw InvalidArgument("sinkhorn: masses must be > 0");

  detail::StabilizedSinkhorn solver(cost, a, b);
  std::size_t used = 0;
  constexpr double anneal = 0.25;
  constexpr double coarse = 1e-3;
  for (double eps = std::max(opt.start_epsilon, opt.epsilon); eps > opt.epsilon;
       eps = std::max(opt.epsilon, eps * anneal)) {
    solver.scale(eps, std::max(coarse, opt.tolerance), opt.max_iterations, used);
  }

  const double eps = opt.epsilon;
  double residual = std::numeric_limits<double>::infinity();
  double stop_scaling = std::max(coarse, opt.tolerance);
  while (used < opt.max_iterations) {
    solver.scale(eps, stop_scaling, opt.max_iterations, used);
    residual = solver.residual();
    int slow = 0;
    while (residual > opt.tolerance && used < opt.max_iterations) {
      ++used;
      const double before = residual;
      if (!solver.newton_step(eps)) break;
      residual = solver.residual();
      slow = residual > 0.5 * before ? slow + 1 : 0;
      if (slow == 3) break;
    }
    if (residual <= opt.tolerance) break;
    stop_scaling = std::max(opt.tolerance, stop_scaling * 0.01);
  }

  SinkhornResult out;
  out.plan = solver.plan();
  out.iterations = used;
  out.residual = residual;
  if (!out.plan.allFinite() || out.plan.sum() == 0.0) {
    throw NumericalError("sinkhorn: kernel underflow (epsilon too small for this cost scale)");
  }
  if (!(residual <= opt.tolerance)) {
    throw ConvergenceError("sinkhorn did not converge in " + std::to_string(used) +
                               " iterations (residual " + std::to_string(residual) + ")",
                           residual, used);
  }
  return out;
}

}  // namespace shiftex::ot
