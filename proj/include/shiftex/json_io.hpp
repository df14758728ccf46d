#pragma once

// JSON documents for maps, reports and generator specs. Doubles are written
// in shortest round-trip form, so parse(dump(x)) reproduces x bit for bit.

#include <cstdio>
#include <string>

#include <json.hpp>

#include "shiftex/data.hpp"
#include "shiftex/metrics.hpp"

namespace shiftex {

using json = nlohmann::ordered_json;

namespace detail {

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json rows_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw InvalidArgument("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw InvalidArgument(std::string("missing JSON field '") + key + "'");
  return *it;
}

inline double number(const json& j, const char* what) {
  if (!j.is_number()) throw InvalidArgument(std::string(what) + ": expected a number");
  return j.get<double>();
}

inline std::size_t count(const json& j, const char* what) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    throw InvalidArgument(std::string(what) + ": expected a non-negative integer");
  return j.get<std::size_t>();
}

inline std::string text(const json& j, const char* what) {
  if (!j.is_string()) throw InvalidArgument(std::string(what) + ": expected a string");
  return j.get<std::string>();
}

inline Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
  return v;
}

inline Matrix rows_from(const json& j, std::size_t cols, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + ": expected an array of rows");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector r = vector_from(j[i], what);
    if (static_cast<std::size_t>(r.size()) != cols) throw InvalidArgument(std::string(what) + ": row has the wrong length");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos)
    throw InvalidArgument("training_fingerprint must be 16 lowercase hex digits");
  return std::stoull(s, nullptr, 16);
}

inline std::vector<std::string> names_of(const std::vector<std::size_t>& idx, const std::vector<std::string>& columns) {
  std::vector<std::string> out;
  for (std::size_t j : idx) out.push_back(columns[j]);
  return out;
}

inline ActiveSet active_from(const json& j, const std::vector<std::string>& columns) {
  const json& idx = field(j, "active_indices");
  if (!idx.is_array()) throw InvalidArgument("active_indices: expected an array");
  std::vector<std::size_t> indices;
  for (const auto& e : idx) indices.push_back(count(e, "active_indices"));
  ActiveSet a(indices, columns.size());
  const json& names = field(j, "active");
  if (!names.is_array() || names.size() != indices.size()) throw InvalidArgument("active: must list one name per index");
  for (std::size_t r = 0; r < indices.size(); ++r)
    if (text(names[r], "active") != columns[indices[r]]) throw InvalidArgument("active: names disagree with active_indices");
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline json to_json(const ShiftMap& map) {
  json j;
  j["schema"] = "shiftex.shift_map/1";
  j["family"] = std::string(to_string(map.family()));
  j["columns"] = map.columns;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, VectorShiftMap>) {
          j["delta"] = detail::vector_json(m.delta);
        } else if constexpr (std::is_same_v<T, KSparseMeanShiftMap>) {
          j["k"] = m.active.size();
          j["active"] = detail::names_of(m.active.indices(), map.columns);
          j["active_indices"] = m.active.indices();
          j["delta"] = detail::vector_json(m.delta);
        } else if constexpr (std::is_same_v<T, KSparseOTMap>) {
          j["k"] = m.active.size();
          j["active"] = detail::names_of(m.active.indices(), map.columns);
          j["active_indices"] = m.active.indices();
          j["training_rows"] = m.ot_images.n();
          j["training_fingerprint"] = detail::hex64(m.training_fingerprint);
          j["ot_images"] = detail::rows_json(m.ot_images.images);
        } else {
          j["k"] = m.k();
          j["member_counts"] = m.member_counts;
          j["source_centroids"] = detail::rows_json(m.source_centroids);
          j["target_centroids"] = detail::rows_json(m.target_centroids);
          j["deltas"] = detail::rows_json(m.deltas);
          j["standardizer"] = {{"mu", detail::vector_json(m.standardizer.mu)},
                               {"sigma", detail::vector_json(m.standardizer.sigma)},
                               {"constant_columns", detail::names_of(m.standardizer.constant_columns, map.columns)}};
        }
      },
      map.payload);
  return j;
}

/// Rebuilds a map and checks its invariants; throws InvalidArgument on any defect.
inline ShiftMap shift_map_from_json(const json& j) {
  using namespace detail;
  if (text(field(j, "schema"), "schema") != "shiftex.shift_map/1") throw InvalidArgument("not a shiftex.shift_map/1 document");
  ShiftMap map;
  const json& cols = field(j, "columns");
  if (!cols.is_array() || cols.empty()) throw InvalidArgument("columns: expected a non-empty array");
  for (const auto& c : cols) map.columns.push_back(text(c, "columns"));
  const std::size_t d = map.columns.size();
  auto check_len = [d](const Vector& v, const char* what) {
    if (static_cast<std::size_t>(v.size()) != d) throw InvalidArgument(std::string(what) + ": length must equal the column count");
    if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": entries must be finite");
  };

  switch (parse_family(text(field(j, "family"), "family"))) {
    case Family::vector: {
      VectorShiftMap m{vector_from(field(j, "delta"), "delta")};
      check_len(m.delta, "delta");
      map.payload = std::move(m);
      break;
    }
    case Family::k_sparse_mean: {
      KSparseMeanShiftMap m{active_from(j, map.columns), vector_from(field(j, "delta"), "delta")};
      check_len(m.delta, "delta");
      for (std::size_t c = 0; c < d; ++c)
        if (!m.active.contains(c) && m.delta[static_cast<Eigen::Index>(c)] != 0.0)
          throw InvalidArgument("delta must be zero outside the active set");
      if (count(field(j, "k"), "k") != m.active.size()) throw InvalidArgument("k must equal the active set size");
      map.payload = std::move(m);
      break;
    }
    case Family::k_sparse_ot: {
      KSparseOTMap m;
      m.active = active_from(j, map.columns);
      if (count(field(j, "k"), "k") != m.active.size()) throw InvalidArgument("k must equal the active set size");
      m.ot_images = PointMap(rows_from(field(j, "ot_images"), d, "ot_images"));
      if (count(field(j, "training_rows"), "training_rows") != m.ot_images.n())
        throw InvalidArgument("training_rows must equal the number of ot_images rows");
      m.training_fingerprint = parse_hex64(text(field(j, "training_fingerprint"), "training_fingerprint"));
      map.payload = std::move(m);
      break;
    }
    case Family::k_cluster: {
      KClusterMap m;
      const std::size_t k = count(field(j, "k"), "k");
      if (k < 1) throw InvalidArgument("k must be at least 1");
      m.source_centroids = rows_from(field(j, "source_centroids"), d, "source_centroids");
      m.target_centroids = rows_from(field(j, "target_centroids"), d, "target_centroids");
      m.deltas = rows_from(field(j, "deltas"), d, "deltas");
      for (const Matrix* x : {&m.source_centroids, &m.target_centroids, &m.deltas})
        if (static_cast<std::size_t>(x->rows()) != k) throw InvalidArgument("centroid and delta arrays need k rows");
      if (m.deltas != m.target_centroids - m.source_centroids)
        throw InvalidArgument("deltas must equal target_centroids - source_centroids");
      const json& counts = field(j, "member_counts");
      if (!counts.is_array() || counts.size() != k) throw InvalidArgument("member_counts needs k entries");
      for (const auto& c : counts) m.member_counts.push_back(count(c, "member_counts"));
      const json& st = field(j, "standardizer");
      m.standardizer.mu = vector_from(field(st, "mu"), "standardizer.mu");
      m.standardizer.sigma = vector_from(field(st, "sigma"), "standardizer.sigma");
      check_len(m.standardizer.mu, "standardizer.mu");
      check_len(m.standardizer.sigma, "standardizer.sigma");
      if (!(m.standardizer.sigma.array() > 0.0).all()) throw InvalidArgument("standardizer.sigma entries must be > 0");
      const json& constant = field(st, "constant_columns");
      if (!constant.is_array()) throw InvalidArgument("standardizer.constant_columns: expected an array");
      for (const auto& c : constant) {
        const auto it = std::find(map.columns.begin(), map.columns.end(), text(c, "constant_columns"));
        if (it == map.columns.end()) throw InvalidArgument("standardizer.constant_columns names an unknown column");
        m.standardizer.constant_columns.push_back(static_cast<std::size_t>(it - map.columns.begin()));
      }
      map.payload = std::move(m);
      break;
    }
  }
  return map;
}

// ---------------------------------------------------------------------------

inline json to_json(const OtConfig& c) {
  return {{"solver", std::string(to_string(c.solver))},
          {"epsilon", c.epsilon},
          {"max_iters", c.max_iters},
          {"convergence_tol", c.convergence_tol},
          {"exact_size_limit", c.exact_size_limit}};
}

inline OtConfig ot_config_from_json(const json& j) {
  OtConfig c;
  c.solver = parse_solver(detail::text(detail::field(j, "solver"), "solver"));
  c.epsilon = detail::number(detail::field(j, "epsilon"), "epsilon");
  c.max_iters = detail::count(detail::field(j, "max_iters"), "max_iters");
  c.convergence_tol = detail::number(detail::field(j, "convergence_tol"), "convergence_tol");
  c.exact_size_limit = detail::count(detail::field(j, "exact_size_limit"), "exact_size_limit");
  c.validate();
  return c;
}

inline bool uses_strategy(Family f) { return f == Family::k_sparse_mean || f == Family::k_sparse_ot; }
inline bool uses_seed(Family f) { return f == Family::k_cluster; }

inline json to_json(const ExplanationReport& r) {
  json j;
  j["schema"] = "shiftex.explanation_report/1";
  j["family"] = std::string(to_string(r.config.family));
  j["k"] = r.config.k;
  j["strategy"] = uses_strategy(r.config.family) ? json(std::string(to_string(r.config.resolved_strategy()))) : json(nullptr);
  j["lambda"] = r.config.lambda;
  j["seed"] = r.config.seed;
  j["restarts"] = r.config.restarts;
  j["ot"] = to_json(r.config.ot);
  j["solver_used"] = std::string(to_string(r.solver_used));
  j["n_source"] = r.n_source;
  j["n_target"] = r.n_target;
  j["baseline_w2"] = r.baseline_w2;
  j["pushed_w2"] = r.pushed_w2;
  j["transport_cost"] = r.transport_cost;
  j["distance_to_ot"] = r.distance_to_ot;
  j["objective"] = r.objective;
  j["percent_explained"] = r.percent_explained;
  j["notes"] = r.notes;
  j["map"] = to_json(r.map);
  return j;
}

inline ExplanationReport report_from_json(const json& j) {
  using namespace detail;
  if (text(field(j, "schema"), "schema") != "shiftex.explanation_report/1")
    throw InvalidArgument("not a shiftex.explanation_report/1 document");
  ExplanationReport r;
  r.map = shift_map_from_json(field(j, "map"));
  r.config.family = parse_family(text(field(j, "family"), "family"));
  if (r.config.family != r.map.family()) throw InvalidArgument("family disagrees with the embedded map");
  r.config.k = count(field(j, "k"), "k");
  const json& s = field(j, "strategy");
  if (!s.is_null()) r.config.strategy = parse_strategy(text(s, "strategy"));
  r.config.lambda = number(field(j, "lambda"), "lambda");
  r.config.seed = field(j, "seed").get<std::uint64_t>();
  r.config.restarts = count(field(j, "restarts"), "restarts");
  r.config.ot = ot_config_from_json(field(j, "ot"));
  r.solver_used = parse_solver(text(field(j, "solver_used"), "solver_used"));
  r.n_source = count(field(j, "n_source"), "n_source");
  r.n_target = count(field(j, "n_target"), "n_target");
  r.baseline_w2 = number(field(j, "baseline_w2"), "baseline_w2");
  r.pushed_w2 = number(field(j, "pushed_w2"), "pushed_w2");
  r.transport_cost = number(field(j, "transport_cost"), "transport_cost");
  r.distance_to_ot = number(field(j, "distance_to_ot"), "distance_to_ot");
  r.objective = number(field(j, "objective"), "objective");
  r.percent_explained = number(field(j, "percent_explained"), "percent_explained");
  for (const auto& n : field(j, "notes")) r.notes.push_back(text(n, "notes"));

  if (r.percent_explained > 100.0) throw InvalidArgument("percent_explained exceeds 100");
  if (r.transport_cost < 0.0 || r.distance_to_ot < 0.0) throw InvalidArgument("costs must be non-negative");
  if (r.objective != r.transport_cost + r.config.lambda * r.distance_to_ot)
    throw InvalidArgument("objective must equal transport_cost + lambda * distance_to_ot");
  return r;
}

// ---------------------------------------------------------------------------

inline json to_json(const GeneratorSpec& s) {
  json j;
  j["kind"] = std::string(to_string(s.kind));
  j["n"] = s.n;
  j["seed"] = s.seed;
  switch (s.kind) {
    case GeneratorKind::gaussian_mean_shift: {
      j["d"] = s.d;
      std::vector<double> delta = s.delta;
      if (delta.empty()) {
        delta.assign(s.d, 0.0);
        delta[0] = 3.0;
      }
      j["delta"] = delta;
      break;
    }
    case GeneratorKind::gmm_component_shift:
      j["means"] = s.means;
      j["deltas"] = s.deltas;
      j["sigma"] = s.sigma;
      break;
    case GeneratorKind::half_moons:
      j["noise"] = s.noise;
      j["shift"] = s.shift;
      break;
  }
  return j;
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline GeneratorSpec generator_spec_from_json(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw InvalidArgument("generator spec must be a JSON object");
  GeneratorSpec s;
  s.kind = parse_generator_kind(text(field(j, "kind"), "kind"));
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "kind") continue;
    if (key == "n") {
      s.n = count(v, "n");
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw InvalidArgument("seed: expected a non-negative integer");
      s.seed = v.get<std::uint64_t>();
    } else if (key == "d") {
      s.d = count(v, "d");
    } else if (key == "delta") {
      const Vector x = vector_from(v, "delta");
      s.delta.assign(x.data(), x.data() + x.size());
    } else if (key == "means" || key == "deltas") {
      if (!v.is_array()) throw InvalidArgument(key + ": expected an array of rows");
      std::vector<std::vector<double>> rows;
      for (const auto& r : v) {
        const Vector x = vector_from(r, key.c_str());
        rows.emplace_back(x.data(), x.data() + x.size());
      }
      (key == "means" ? s.means : s.deltas) = std::move(rows);
    } else if (key == "sigma") {
      s.sigma = number(v, "sigma");
    } else if (key == "noise") {
      s.noise = number(v, "noise");
    } else if (key == "shift") {
      const Vector x = vector_from(v, "shift");
      s.shift.assign(x.data(), x.data() + x.size());
    } else {
      throw InvalidArgument("unknown generator spec field '" + key + "'");
    }
  }
  if (s.kind == GeneratorKind::gaussian_mean_shift && !s.delta.empty() && !j.contains("d")) s.d = s.delta.size();
  s.validate();
  return s;
}

}  // namespace shiftex
