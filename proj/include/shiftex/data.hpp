#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shiftex/dataset.hpp"
#include "shiftex/random.hpp"

namespace shiftex {

// ---------------------------------------------------------------------------
// CSV text

/// Header plus raw cells. Every record has exactly header.size() cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> records;
};

namespace detail {

// RFC 4180 records: quoted fields may hold commas, doubled quotes and line
// breaks; CRLF and LF both end a record; a leading UTF-8 BOM is skipped.
inline std::vector<std::vector<std::string>> split_csv_records(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) out.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw ParseError("stray quote inside unquoted field on line " + std::to_string(line), line, "");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line, "");
  if (field_started || !record.empty()) end_record();
  return out;
}

}  // namespace detail

inline CsvTable parse_csv(std::string_view text) {
  auto records = detail::split_csv_records(text);
  if (records.empty()) throw ParseError("CSV input is empty (no header row)", 0, "");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw ParseError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) + " fields, header has " +
                           std::to_string(t.header.size()),
                       r, "");
    }
    t.records.push_back(std::move(records[r]));
  }
  return t;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return buf.str();
}

inline CsvTable read_csv_table(const std::string& path) { return parse_csv(read_text_file(path)); }

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double x) {
  if (x == 0.0) return "0";  // also folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Header row then one line per row; numbers in shortest round-trip form.
inline void write_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.d(); ++j) out << (j ? "," : "") << csv_quote(data.columns()[j]);
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows().rows(); ++i) {
    for (Eigen::Index j = 0; j < data.rows().cols(); ++j) out << (j ? "," : "") << format_double(data.rows()(i, j));
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, data);
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Loading

/// Categorical encoding for one column.
struct ValueCodes {
  std::map<std::string, double> codes;
  std::optional<double> fallback;  // code for any other non-missing value
};

struct LoadOptions {
  /// Columns to keep, in this order; empty keeps every column.
  std::vector<std::string> columns;
  std::map<std::string, ValueCodes> value_map;
  std::set<std::string> missing_tokens{"?", "", "NA"};
  /// Drop a row when any of its cells (selected or not) is a missing token.
  bool drop_missing = true;
};

struct LoadStats {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

/// Turns a parsed table into a Dataset. Rows holding a missing token are
/// dropped (or rejected when drop_missing is off); any other cell that is
/// neither encoded by value_map nor a finite number is a ParseError.
inline Dataset table_to_dataset(const CsvTable& table, const LoadOptions& options = {}, LoadStats* stats = nullptr) {
  std::vector<std::string> names = options.columns.empty() ? table.header : options.columns;
  std::vector<std::size_t> index;
  for (const auto& name : names) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw InvalidArgument("CSV has no column named '" + name + "'");
    index.push_back(static_cast<std::size_t>(it - table.header.begin()));
  }
  for (const auto& [name, _] : options.value_map) {
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw InvalidArgument("value map refers to column '" + name + "' which is not loaded");
  }

  std::vector<double> values;
  std::size_t kept = 0, dropped = 0;
  for (std::size_t r = 0; r < table.records.size(); ++r) {
    const auto& rec = table.records[r];
    const bool missing = options.drop_missing
                             ? std::any_of(rec.begin(), rec.end(), [&](const std::string& c) { return options.missing_tokens.count(c) > 0; })
                             : false;
    if (missing) {
      ++dropped;
      continue;
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
      const std::string& cell = rec[index[k]];
      const auto vm = options.value_map.find(names[k]);
      std::optional<double> v;
      if (vm != options.value_map.end()) {
        const auto code = vm->second.codes.find(cell);
        if (code != vm->second.codes.end()) {
          v = code->second;
        } else if (vm->second.fallback) {
          v = vm->second.fallback;
        }
      }
      if (!v) v = parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        // Data rows are numbered from 1; the header is row 0.
        throw ParseError("row " + std::to_string(r + 1) + ", column '" + names[k] + "': cannot parse '" + cell +
                             "' as a finite number",
                         r + 1, names[k]);
      }
      values.push_back(*v);
    }
    ++kept;
  }
  if (stats) *stats = {table.records.size(), dropped};
  if (kept == 0) throw InvalidArgument("CSV has no usable data rows");
  Matrix m(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(names.size()));
  std::copy(values.begin(), values.end(), m.data());
  return Dataset(std::move(names), std::move(m));
}

inline Dataset load_csv(const std::string& path, const LoadOptions& options = {}, LoadStats* stats = nullptr) {
  return table_to_dataset(read_csv_table(path), options, stats);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  std::string column;
  std::set<double> source_values;
  std::set<double> target_values;
  bool drop_split_column = true;
};

struct SplitResult {
  Dataset source;
  Dataset target;
  std::size_t dropped = 0;  // rows matching neither side
};

inline SplitResult split(const Dataset& data, const SplitSpec& spec) {
  const std::size_t col = data.column_index(spec.column);
  for (double v : spec.source_values)
    if (spec.target_values.count(v)) throw InvalidArgument("split value " + format_double(v) + " is on both sides");
  if (spec.drop_split_column && data.d() == 1) throw InvalidArgument("cannot drop the only column of the dataset");

  std::vector<std::string> names;
  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < data.d(); ++j) {
    if (spec.drop_split_column && j == col) continue;
    names.push_back(data.columns()[j]);
    keep.push_back(static_cast<Eigen::Index>(j));
  }
  std::vector<Eigen::Index> src_rows, tgt_rows;
  for (Eigen::Index i = 0; i < data.rows().rows(); ++i) {
    const double v = data.rows()(i, static_cast<Eigen::Index>(col));
    if (spec.source_values.count(v)) {
      src_rows.push_back(i);
    } else if (spec.target_values.count(v)) {
      tgt_rows.push_back(i);
    }
  }
  if (src_rows.empty()) throw InvalidArgument("split on '" + spec.column + "' leaves the source empty");
  if (tgt_rows.empty()) throw InvalidArgument("split on '" + spec.column + "' leaves the target empty");
  auto take = [&](const std::vector<Eigen::Index>& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < keep.size(); ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data.rows()(rows[r], keep[c]);
    return Dataset(names, std::move(m));
  };
  return SplitResult{take(src_rows), take(tgt_rows), data.n() - src_rows.size() - tgt_rows.size()};
}

// ---------------------------------------------------------------------------
// Synthetic shifts

enum class GeneratorKind { gaussian_mean_shift, gmm_component_shift, half_moons };

inline std::string_view to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::gaussian_mean_shift: return "gaussian_mean_shift";
    case GeneratorKind::gmm_component_shift: return "gmm_component_shift";
    case GeneratorKind::half_moons: return "half_moons";
  }
  return "?";
}

/// Accepts canonical names, dashed spellings and the short forms gaussian / gmm.
inline GeneratorKind parse_generator_kind(std::string_view s) {
  std::string t(s);
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "gaussian_mean_shift" || t == "gaussian") return GeneratorKind::gaussian_mean_shift;
  if (t == "gmm_component_shift" || t == "gmm") return GeneratorKind::gmm_component_shift;
  if (t == "half_moons" || t == "moons") return GeneratorKind::half_moons;
  throw InvalidArgument("unknown generator kind '" + std::string(s) + "' (expected gaussian, gmm or half-moons)");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::gaussian_mean_shift;
  std::size_t n = 500;
  std::size_t d = 2;
  std::uint64_t seed = 0;
  /// gaussian_mean_shift: target mean minus source mean; empty means 3 * e_0.
  std::vector<double> delta;
  /// gmm_component_shift: component means and per-component translations
  /// (rows). Row i belongs to component i mod #components on both sides.
  std::vector<std::vector<double>> means{{0.0, 0.0}, {6.0, 6.0}, {12.0, 0.0}};
  std::vector<std::vector<double>> deltas{{0.0, 3.0}, {3.0, -1.0}, {-2.0, -2.0}};
  double sigma = 0.5;
  /// half_moons: Gaussian noise scale and post-flip translation of the target.
  double noise = 0.05;
  std::vector<double> shift{0.5, 0.5};

  std::size_t dimension() const {
    switch (kind) {
      case GeneratorKind::gaussian_mean_shift: return d;
      case GeneratorKind::gmm_component_shift: return means.empty() ? 0 : means.front().size();
      case GeneratorKind::half_moons: return 2;
    }
    return 0;
  }

  void validate() const {
    if (n < 1) throw InvalidArgument("generator: n must be at least 1");
    switch (kind) {
      case GeneratorKind::gaussian_mean_shift:
        if (dimension() < 1) throw InvalidArgument("generator: d must be at least 1");
        if (!delta.empty() && delta.size() != d)
          throw InvalidArgument("generator: delta has " + std::to_string(delta.size()) + " entries but d = " + std::to_string(d));
        break;
      case GeneratorKind::gmm_component_shift: {
        if (means.empty()) throw InvalidArgument("generator: gmm needs at least one component");
        if (deltas.size() != means.size()) throw InvalidArgument("generator: gmm needs one delta per component");
        const std::size_t dim = means.front().size();
        if (dim < 1) throw InvalidArgument("generator: gmm component means must be non-empty");
        for (const auto& v : means)
          if (v.size() != dim) throw InvalidArgument("generator: gmm component means differ in length");
        for (const auto& v : deltas)
          if (v.size() != dim) throw InvalidArgument("generator: gmm deltas must match the mean length");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("generator: sigma must be > 0");
        break;
      }
      case GeneratorKind::half_moons:
        if (!(noise > 0.0) || !std::isfinite(noise)) throw InvalidArgument("generator: noise must be > 0");
        if (shift.size() != 2) throw InvalidArgument("generator: half-moons shift must have 2 entries");
        break;
    }
  }
};

namespace detail {

inline Matrix gaussian_sample(Rng& rng, std::size_t n, const Vector& mean, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  Matrix m(static_cast<Eigen::Index>(n), mean.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = mean[j] + g(rng);
  return m;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Two interleaving half circles of radius 1 plus isotropic noise.
inline Matrix two_moons(Rng& rng, std::size_t n, double noise) {
  const std::size_t n_outer = n / 2, n_inner = n - n_outer;
  Matrix m(static_cast<Eigen::Index>(n), 2);
  auto angle = [](std::size_t i, std::size_t count) {
    return count < 2 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  for (std::size_t i = 0; i < n_outer; ++i) {
    const double t = angle(i, n_outer);
    m.row(static_cast<Eigen::Index>(i)) << std::cos(t), std::sin(t);
  }
  for (std::size_t i = 0; i < n_inner; ++i) {
    const double t = angle(i, n_inner);
    m.row(static_cast<Eigen::Index>(n_outer + i)) << 1.0 - std::cos(t), 1.0 - std::sin(t) - 0.5;
  }
  std::normal_distribution<double> g(0.0, noise);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m(i, 0) += g(rng);
    m(i, 1) += g(rng);
  }
  return m;
}

inline std::vector<std::string> numbered_columns(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace detail

/// Source and target samples of n rows each. The source draws from
/// derive_seed(seed, 1) and the target from derive_seed(seed, 2).
inline std::pair<Dataset, Dataset> generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng src_rng(derive_seed(spec.seed, 1));
  Rng tgt_rng(derive_seed(spec.seed, 2));
  const std::size_t dim = spec.dimension();
  const auto names = detail::numbered_columns(dim);

  switch (spec.kind) {
    case GeneratorKind::gaussian_mean_shift: {
      Vector delta = Vector::Zero(static_cast<Eigen::Index>(dim));
      if (spec.delta.empty()) {
        delta[0] = 3.0;
      } else {
        delta = detail::to_vector(spec.delta);
      }
      const Vector zero = Vector::Zero(delta.size());
      return {Dataset(names, detail::gaussian_sample(src_rng, spec.n, zero, 1.0)),
              Dataset(names, detail::gaussian_sample(tgt_rng, spec.n, delta, 1.0))};
    }
    case GeneratorKind::gmm_component_shift: {
      const std::size_t comps = spec.means.size();
      auto draw = [&](Rng& rng, bool shifted) {
        std::normal_distribution<double> g(0.0, spec.sigma);
        Matrix m(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          const std::size_t c = static_cast<std::size_t>(i) % comps;
          for (std::size_t j = 0; j < dim; ++j)
            m(i, static_cast<Eigen::Index>(j)) = spec.means[c][j] + (shifted ? spec.deltas[c][j] : 0.0) + g(rng);
        }
        return m;
      };
      return {Dataset(names, draw(src_rng, false)), Dataset(names, draw(tgt_rng, true))};
    }
    case GeneratorKind::half_moons: {
      Matrix src = detail::two_moons(src_rng, spec.n, spec.noise);
      Matrix tgt = detail::two_moons(tgt_rng, spec.n, spec.noise);
      tgt.col(1) *= -1.0;
      tgt.col(0).array() += spec.shift[0];
      tgt.col(1).array() += spec.shift[1];
      return {Dataset(names, std::move(src)), Dataset(names, std::move(tgt))};
    }
  }
  throw InvalidArgument("unknown generator kind");
}

}  // namespace shiftex
