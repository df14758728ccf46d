#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "shiftex/error.hpp"

namespace shiftex {

/// Samples are rows, features are columns.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

namespace detail {

inline void require_finite(const Matrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw InvalidArgument(std::string(what) + ": non-finite entry at row " + std::to_string(i) +
                              ", column " + std::to_string(j));
      }
    }
  }
}

}  // namespace detail

/// A named N x d table of finite reals. Immutable after construction.
class Dataset {
 public:
  Dataset(std::vector<std::string> columns, Matrix rows)
      : columns_(std::move(columns)), rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1) {
      throw InvalidArgument("dataset must have at least one row and one column");
    }
    if (static_cast<Eigen::Index>(columns_.size()) != rows_.cols()) {
      throw InvalidArgument("dataset has " + std::to_string(columns_.size()) + " column names but " +
                            std::to_string(rows_.cols()) + " columns");
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
      if (!seen.insert(c).second) throw InvalidArgument("duplicate column name '" + c + "'");
    }
    detail::require_finite(rows_, "dataset");
  }

  /// Columns named x0, x1, ...
  static Dataset unnamed(Matrix rows) {
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) names.push_back("x" + std::to_string(j));
    return Dataset(std::move(names), std::move(rows));
  }

  std::size_t n() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(rows_.cols()); }
  const Matrix& rows() const noexcept { return rows_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }

  std::size_t column_index(const std::string& name) const {
    auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw InvalidArgument("no column named '" + name + "'");
    return static_cast<std::size_t>(it - columns_.begin());
  }

  Vector column_means() const { return rows_.colwise().mean().transpose(); }

 private:
  std::vector<std::string> columns_;
  Matrix rows_;
};

/// Per-source-row images of a transport map; row i is T(x_i).
struct PointMap {
  Matrix images;

  PointMap() = default;
  explicit PointMap(Matrix m) : images(std::move(m)) { detail::require_finite(images, "point map"); }

  std::size_t n() const noexcept { return static_cast<std::size_t>(images.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(images.cols()); }
};

inline void require_same_dim(const Dataset& a, const Dataset& b) {
  if (a.d() != b.d()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(a.d()) + " vs " +
                          std::to_string(b.d()) + " columns");
  }
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

/// Row indices ordered lexicographically by row content (ties by index).
inline std::vector<std::size_t> lexicographic_order(const Matrix& m) {
  std::vector<std::size_t> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double x = m(static_cast<Eigen::Index>(a), j);
      const double y = m(static_cast<Eigen::Index>(b), j);
      if (x < y) return true;
      if (y < x) return false;
    }
    return false;
  });
  return order;
}

/// True when a and b hold the same rows up to reordering.
inline bool equal_as_multisets(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const auto oa = lexicographic_order(a);
  const auto ob = lexicographic_order(b);
  for (std::size_t i = 0; i < oa.size(); ++i) {
    if (a.row(static_cast<Eigen::Index>(oa[i])) != b.row(static_cast<Eigen::Index>(ob[i]))) return false;
  }
  return true;
}

/// Rows grouped into distinct points with empirical masses.
struct Atoms {
  Matrix points;
  Vector masses;
  std::vector<std::size_t> atom_of_row;
};

/// One atom per row.
inline Atoms identity_atoms(const Matrix& rows) {
  Atoms out;
  out.points = rows;
  const auto n = static_cast<std::size_t>(rows.rows());
  out.masses = Vector::Constant(rows.rows(), 1.0 / static_cast<double>(n));
  out.atom_of_row.resize(n);
  std::iota(out.atom_of_row.begin(), out.atom_of_row.end(), std::size_t{0});
  return out;
}

/// Identical rows merged; atoms in lexicographic order.
inline Atoms collapse_duplicates(const Matrix& rows) {
  const auto order = lexicographic_order(rows);
  const auto n = order.size();
  Atoms out;
  out.atom_of_row.assign(n, 0);
  std::vector<Eigen::Index> representative;
  std::vector<std::size_t> counts;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = static_cast<Eigen::Index>(order[r]);
    if (representative.empty() || rows.row(representative.back()) != rows.row(row)) {
      representative.push_back(row);
      counts.push_back(0);
    }
    out.atom_of_row[order[r]] = representative.size() - 1;
    ++counts.back();
  }
  out.points.resize(static_cast<Eigen::Index>(representative.size()), rows.cols());
  out.masses.resize(static_cast<Eigen::Index>(representative.size()));
  for (std::size_t k = 0; k < representative.size(); ++k) {
    out.points.row(static_cast<Eigen::Index>(k)) = rows.row(representative[k]);
    out.masses[static_cast<Eigen::Index>(k)] = static_cast<double>(counts[k]) / static_cast<double>(n);
  }
  return out;
}

/// FNV-1a over the raw bytes of the matrix (shape included).
inline std::uint64_t fingerprint(const Matrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t shape[2] = {static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols())};
  mix(shape, sizeof(shape));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      if (v == 0.0) v = 0.0;  // fold -0.0
      mix(&v, sizeof(v));
    }
  }
  return h;
}

}  // namespace shiftex
