#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "shiftex/json_io.hpp"
#include "shiftex/metrics.hpp"

namespace shiftex {

struct SweepConfig {
  ExplainConfig base;  // family, strategy, lambda, OT settings, seed; base.k is ignored
  std::size_t threads = 1;
  bool timings = false;
};

struct SweepRow {
  std::size_t k = 0;
  std::optional<ExplanationReport> report;  // empty when the fit failed
  std::string error;
  std::optional<double> wall_time_ms;       // only with timings enabled
};

struct SweepResult {
  SweepConfig config;
  Solver solver_used = Solver::exact;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  double baseline_w2 = 0.0;
  std::vector<SweepRow> rows;  // ascending k, no duplicates
};

/// Largest k a family accepts for this data.
inline std::size_t max_k(Family family, const Dataset& source) {
  return family == Family::k_cluster ? source.n() : source.d();
}

/// Fits one map per k. The OT reference and baseline distance are computed
/// once before any fit starts; each k-cluster fit still seeds its own
/// clustering from (seed, k). Failed fits are recorded per row.
inline SweepResult run_sweep(const Dataset& source, const Dataset& target, std::vector<std::size_t> k_values,
                             const SweepConfig& config) {
  require_same_dim(source, target);
  if (k_values.empty()) throw InvalidArgument("sweep needs at least one k value");
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
  const Family family = config.base.family;
  const std::size_t limit = max_k(family, source);
  if (k_values.front() < 1 || k_values.back() > limit) {
    const std::string bad = std::to_string(k_values.front() < 1 ? k_values.front() : k_values.back());
    throw InvalidArgument(family == Family::k_cluster
                              ? "k = " + bad + " is out of range [1, N] with N = " + std::to_string(limit) + " source rows"
                              : "k = " + bad + " is out of range [1, d] with d = " + std::to_string(limit) + " columns");
  }
  if (!(config.base.lambda >= 0.0) || !std::isfinite(config.base.lambda)) throw InvalidArgument("lambda must be a finite number >= 0");

  const ExplainContext ctx = prepare_explain(source, target, config.base.ot);
  SweepResult result;
  result.config = config;
  result.solver_used = ctx.reference.plan.solver;
  result.n_source = source.n();
  result.n_target = target.n();
  result.baseline_w2 = ctx.baseline;
  result.rows.resize(k_values.size());

  auto fit_one = [&](std::size_t idx) {
    SweepRow& row = result.rows[idx];
    row.k = k_values[idx];
    ExplainConfig cfg = config.base;
    cfg.k = row.k;
    const auto start = std::chrono::steady_clock::now();
    try {
      row.report = explain(source, target, ctx, cfg);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (config.timings)
      row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  const std::size_t workers = std::min(std::max<std::size_t>(1, config.threads), k_values.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < k_values.size(); ++i) fit_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < k_values.size(); i = next++) fit_one(i);
      });
    for (auto& t : pool) t.join();
  }
  return result;
}

// ---------------------------------------------------------------------------

enum class OutputFormat { table, csv, json };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "table") return OutputFormat::table;
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw InvalidArgument("unknown output format '" + std::string(s) + "' (expected table, csv or json)");
}

/// printf %.6g
inline std::string format_6g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x == 0.0 ? 0.0 : x);
  return buf;
}

inline std::string pad_right(const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); }
inline std::string pad_left(const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; }

/// Aligned text: first column left-aligned, the rest right-aligned.
inline std::string render_columns(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], row[c].size());
    }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += c == 0 ? pad_right(row[c], width[c]) : pad_left(row[c], width[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

inline json to_json(const SweepResult& r) {
  json j;
  j["schema"] = "shiftex.sweep/1";
  j["family"] = std::string(to_string(r.config.base.family));
  j["strategy"] = uses_strategy(r.config.base.family) ? json(std::string(to_string(r.config.base.resolved_strategy()))) : json(nullptr);
  j["lambda"] = r.config.base.lambda;
  j["seed"] = r.config.base.seed;
  j["restarts"] = r.config.base.restarts;
  j["ot"] = to_json(r.config.base.ot);
  j["solver_used"] = std::string(to_string(r.solver_used));
  j["n_source"] = r.n_source;
  j["n_target"] = r.n_target;
  j["baseline_w2"] = r.baseline_w2;
  j["timings"] = r.config.timings;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json o;
    o["k"] = row.k;
    if (row.report) {
      o["transport_cost"] = row.report->transport_cost;
      o["distance_to_ot"] = row.report->distance_to_ot;
      o["percent_explained"] = row.report->percent_explained;
      o["objective"] = row.report->objective;
      o["pushed_w2"] = row.report->pushed_w2;
      o["error"] = nullptr;
      o["report"] = to_json(*row.report);
    } else {
      o["transport_cost"] = nullptr;
      o["distance_to_ot"] = nullptr;
      o["percent_explained"] = nullptr;
      o["objective"] = nullptr;
      o["pushed_w2"] = nullptr;
      o["error"] = row.error;
      o["report"] = nullptr;
    }
    o["wall_time_ms"] = row.wall_time_ms ? json(*row.wall_time_ms) : json(nullptr);
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return j;
}

inline SweepResult sweep_from_json(const json& j) {
  using namespace detail;
  if (text(field(j, "schema"), "schema") != "shiftex.sweep/1") throw InvalidArgument("not a shiftex.sweep/1 document");
  SweepResult r;
  r.config.base.family = parse_family(text(field(j, "family"), "family"));
  const json& s = field(j, "strategy");
  if (!s.is_null()) r.config.base.strategy = parse_strategy(text(s, "strategy"));
  r.config.base.lambda = number(field(j, "lambda"), "lambda");
  r.config.base.seed = field(j, "seed").get<std::uint64_t>();
  r.config.base.restarts = count(field(j, "restarts"), "restarts");
  r.config.base.ot = ot_config_from_json(field(j, "ot"));
  r.config.timings = field(j, "timings").get<bool>();
  r.solver_used = parse_solver(text(field(j, "solver_used"), "solver_used"));
  r.n_source = count(field(j, "n_source"), "n_source");
  r.n_target = count(field(j, "n_target"), "n_target");
  r.baseline_w2 = number(field(j, "baseline_w2"), "baseline_w2");
  std::size_t prev = 0;
  for (const auto& o : field(j, "rows")) {
    SweepRow row;
    row.k = count(field(o, "k"), "k");
    if (row.k <= prev) throw InvalidArgument("rows must have strictly ascending k");
    prev = row.k;
    const json& rep = field(o, "report");
    if (!rep.is_null()) {
      row.report = report_from_json(rep);
      if (row.report->config.k != row.k) throw InvalidArgument("row k disagrees with its report");
      if (number(field(o, "percent_explained"), "percent_explained") != row.report->percent_explained)
        throw InvalidArgument("row summary disagrees with its report");
    } else {
      row.error = text(field(o, "error"), "error");
    }
    const json& wt = field(o, "wall_time_ms");
    if (!wt.is_null()) row.wall_time_ms = number(wt, "wall_time_ms");
    r.rows.push_back(std::move(row));
  }
  if (r.rows.empty()) throw InvalidArgument("sweep has no rows");
  return r;
}

/// Fixed CSV header of render_sweep(..., csv).
inline constexpr const char* sweep_csv_header = "k,family,transport_cost,distance_to_ot,percent_explained,wall_time_ms";

inline std::string render_sweep(const SweepResult& r, OutputFormat format) {
  if (r.rows.empty()) throw InvalidArgument("render_sweep: empty result");
  const std::string family(to_string(r.config.base.family));
  switch (format) {
    case OutputFormat::json:
      return to_json(r).dump(2) + "\n";
    case OutputFormat::csv: {
      std::string out = std::string(sweep_csv_header) + "\n";
      for (const auto& row : r.rows) {
        out += std::to_string(row.k) + "," + family + ",";
        if (row.report) {
          out += format_double(row.report->transport_cost) + "," + format_double(row.report->distance_to_ot) + "," +
                 format_double(row.report->percent_explained);
        } else {
          out += ",,";
        }
        out += "," + (row.wall_time_ms ? format_double(*row.wall_time_ms) : std::string()) + "\n";
      }
      return out;
    }
    case OutputFormat::table: {
      std::vector<std::vector<std::string>> cells{{"k", "family", "transport_cost", "distance_to_ot", "percent_explained"}};
      if (r.config.timings) cells[0].push_back("wall_time_ms");
      for (const auto& row : r.rows) {
        std::vector<std::string> line{std::to_string(row.k), family};
        if (row.report) {
          line.push_back(format_6g(row.report->transport_cost));
          line.push_back(format_6g(row.report->distance_to_ot));
          line.push_back(format_6g(row.report->percent_explained));
        } else {
          line.insert(line.end(), {"-", "-", "-"});
        }
        if (r.config.timings) line.push_back(row.wall_time_ms ? format_6g(*row.wall_time_ms) : "-");
        cells.push_back(std::move(line));
      }
      std::string out = render_columns(cells);
      for (const auto& row : r.rows)
        if (!row.report) out += "k = " + std::to_string(row.k) + " failed: " + row.error + "\n";
      return out;
    }
  }
  return {};
}

}  // namespace shiftex
