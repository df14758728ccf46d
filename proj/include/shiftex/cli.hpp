#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shiftex/data.hpp"
#include "shiftex/json_io.hpp"
#include "shiftex/metrics.hpp"
#include "shiftex/sweep.hpp"

namespace shiftex::cli {

enum ExitCode : int { ok = 0, usage = 2, io = 3, numerical = 4 };

inline constexpr const char* seed_env = "SHIFT_EXPLAIN_SEED";

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::string ot_solver = "auto";
  OtConfig ot;
  std::string output = "table";
  std::string out_file;
  bool timings = false;
  std::size_t threads = 1;
};

struct GenerateFlags {
  std::string kind;
  std::string spec_file;
  std::string out_dir = ".";
  std::size_t n = 500;
  std::size_t d = 2;
  std::vector<double> delta;
  double sigma = 0.5;
  double noise = 0.05;
  std::vector<double> shift;
};

struct InputFlags {
  std::string source;
  std::string target;
  std::vector<std::string> columns;
  std::vector<std::string> encode;
  std::string split_column;
  std::vector<std::string> split_source;
  std::vector<std::string> split_target;
};

struct FitFlags {
  std::string family = "k-sparse-mean";
  std::size_t k = 1;
  std::string strategy;
  double lambda = 1.0;
  std::size_t restarts = 10;
  std::size_t k_min = 1;
  std::size_t k_max = 0;
};

struct DistanceFlags {
  std::string a;
  std::string b;
  std::vector<std::string> columns;
  std::vector<std::string> encode;
};

// ---------------------------------------------------------------------------
// Input handling

/// Parses COL=VAL:CODE items. The column ends at the first '=', the code
/// starts after the last ':'; VAL "*" sets the fallback code of the column.
inline std::map<std::string, ValueCodes> parse_encodings(const std::vector<std::string>& items) {
  std::map<std::string, ValueCodes> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    const auto colon = item.rfind(':');
    if (eq == std::string::npos || colon == std::string::npos || colon < eq || eq == 0)
      throw InvalidArgument("--encode expects COL=VALUE:CODE, got '" + item + "'");
    const std::string column = item.substr(0, eq);
    const std::string value = item.substr(eq + 1, colon - eq - 1);
    const auto code = parse_double(item.substr(colon + 1));
    if (!code) throw InvalidArgument("--encode: code in '" + item + "' is not a finite number");
    ValueCodes& vc = out[column];
    if (value == "*") {
      vc.fallback = *code;
    } else if (!vc.codes.emplace(value, *code).second) {
      throw InvalidArgument("--encode: value '" + value + "' of column '" + column + "' is encoded twice");
    }
  }
  return out;
}

inline void require_same_columns(const Dataset& a, const Dataset& b) {
  require_same_dim(a, b);
  if (a.columns() != b.columns()) throw InvalidArgument("source and target have different column names");
}

struct Inputs {
  Dataset source;
  Dataset target;
};

inline Inputs load_inputs(const InputFlags& f) {
  LoadOptions options;
  options.columns = f.columns;
  options.value_map = parse_encodings(f.encode);
  if (f.source.empty()) throw InvalidArgument("--source is required");

  const bool splitting = !f.split_column.empty() || !f.split_source.empty() || !f.split_target.empty();
  if (!splitting) {
    if (f.target.empty()) throw InvalidArgument("--target is required unless the split flags are given");
    Inputs in{load_csv(f.source, options), load_csv(f.target, options)};
    require_same_columns(in.source, in.target);
    return in;
  }
  if (!f.target.empty()) throw InvalidArgument("--target cannot be combined with the split flags");
  if (f.split_column.empty() || f.split_source.empty() || f.split_target.empty())
    throw InvalidArgument("--split-column, --split-source and --split-target must be given together");
  if (options.value_map.count(f.split_column))
    throw InvalidArgument("--encode cannot target the split column '" + f.split_column + "'");

  // The split column is encoded as 0 (source), 1 (target), 2 (neither).
  ValueCodes codes;
  for (const auto& v : f.split_source) codes.codes.emplace(v, 0.0);
  for (const auto& v : f.split_target)
    if (!codes.codes.emplace(v, 1.0).second) throw InvalidArgument("split value '" + v + "' is on both sides");
  codes.fallback = 2.0;
  options.value_map[f.split_column] = codes;
  if (!options.columns.empty() &&
      std::find(options.columns.begin(), options.columns.end(), f.split_column) == options.columns.end())
    options.columns.push_back(f.split_column);

  const Dataset all = load_csv(f.source, options);
  SplitResult parts = split(all, SplitSpec{f.split_column, {0.0}, {1.0}, true});
  return Inputs{std::move(parts.source), std::move(parts.target)};
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string render_explain_csv(const ExplanationReport& r) {
  return "k,family,transport_cost,distance_to_ot,percent_explained\n" + std::to_string(r.config.k) + "," +
         std::string(to_string(r.config.family)) + "," + format_double(r.transport_cost) + "," +
         format_double(r.distance_to_ot) + "," + format_double(r.percent_explained) + "\n";
}

inline std::string render_explain_table(const ExplanationReport& r, const Dataset& source) {
  const Family fam = r.config.family;
  std::vector<std::vector<std::string>> head{{"family", std::string(to_string(fam))}};
  if (fam != Family::vector) head.push_back({"k", std::to_string(r.config.k)});
  if (uses_strategy(fam)) head.push_back({"strategy", std::string(to_string(r.config.resolved_strategy()))});
  if (uses_seed(fam)) {
    head.push_back({"seed", std::to_string(r.config.seed)});
    head.push_back({"restarts", std::to_string(r.config.restarts)});
  }
  head.push_back({"lambda", format_6g(r.config.lambda)});
  head.push_back({"solver", std::string(to_string(r.solver_used))});
  head.push_back({"n_source", std::to_string(r.n_source)});
  head.push_back({"n_target", std::to_string(r.n_target)});
  head.push_back({"baseline_w2", format_6g(r.baseline_w2)});
  head.push_back({"pushed_w2", format_6g(r.pushed_w2)});
  head.push_back({"transport_cost", format_6g(r.transport_cost)});
  head.push_back({"distance_to_ot", format_6g(r.distance_to_ot)});
  head.push_back({"objective", format_6g(r.objective)});
  head.push_back({"percent_explained", format_6g(r.percent_explained)});
  std::string out = render_columns(head);

  const auto& cols = r.map.columns;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, VectorShiftMap>) {
          out += "\nshift (target minus source)\n";
          std::vector<std::vector<std::string>> t{{"column", "delta"}};
          for (std::size_t j = 0; j < cols.size(); ++j) t.push_back({cols[j], format_6g(m.delta(static_cast<Eigen::Index>(j)))});
          out += render_columns(t);
        } else if constexpr (std::is_same_v<M, KSparseMeanShiftMap>) {
          out += "\nshift (target minus source)\n";
          std::vector<std::vector<std::string>> t{{"column", "delta", "active"}};
          for (std::size_t j = 0; j < cols.size(); ++j)
            t.push_back({cols[j], format_6g(m.delta(static_cast<Eigen::Index>(j))), m.active.contains(j) ? "yes" : "no"});
          out += render_columns(t);
        } else if constexpr (std::is_same_v<M, KSparseOTMap>) {
          const Vector moved = (m.ot_images.images.colwise().mean() - source.rows().colwise().mean()).transpose();
          out += "\nmean displacement (active columns follow the optimal transport map)\n";
          std::vector<std::vector<std::string>> t{{"column", "mean_delta", "active"}};
          for (std::size_t j = 0; j < cols.size(); ++j) {
            const bool on = m.active.contains(j);
            t.push_back({cols[j], format_6g(on ? moved(static_cast<Eigen::Index>(j)) : 0.0), on ? "yes" : "no"});
          }
          out += render_columns(t);
        } else {
          for (std::size_t c = 0; c < m.k(); ++c) {
            out += "\ncluster " + std::to_string(c + 1) + " (members: " + std::to_string(m.member_counts[c]) + ")\n";
            std::vector<std::vector<std::string>> t{{"column", "source_mean", "target_mean", "delta"}};
            const auto i = static_cast<Eigen::Index>(c);
            for (std::size_t j = 0; j < cols.size(); ++j) {
              const auto jj = static_cast<Eigen::Index>(j);
              t.push_back({cols[j], format_6g(m.source_centroids(i, jj)), format_6g(m.target_centroids(i, jj)),
                           format_6g(m.deltas(i, jj))});
            }
            out += render_columns(t);
          }
        }
      },
      r.map.payload);
  if (!r.notes.empty()) {
    out += "\n";
    for (const auto& n : r.notes) out += "note: " + n + "\n";
  }
  return out;
}

inline json distance_json(const Dataset& a, const Dataset& b, Solver solver, double w2) {
  json j;
  j["schema"] = "shiftex.distance/1";
  j["solver_used"] = std::string(to_string(solver));
  j["n_a"] = a.n();
  j["n_b"] = b.n();
  j["w2_squared"] = w2;
  const Vector gap = b.column_means() - a.column_means();
  json g = json::object();
  for (std::size_t j2 = 0; j2 < a.d(); ++j2) g[a.columns()[j2]] = gap(static_cast<Eigen::Index>(j2));
  j["mean_gap"] = std::move(g);
  return j;
}

// ---------------------------------------------------------------------------
// Commands

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  void emit(const GlobalFlags& g, const std::string& text) {
    if (g.out_file.empty()) {
      out_ << text;
      return;
    }
    std::ofstream f(g.out_file, std::ios::binary);
    if (!f) throw IoError("cannot open '" + g.out_file + "' for writing");
    f << text;
    f.flush();
    if (!f) throw IoError("error while writing '" + g.out_file + "'");
  }

  void generate(const GlobalFlags& g, const GenerateFlags& f, bool seed_given, const CLI::App& sub) {
    GeneratorSpec spec;
    if (!f.spec_file.empty()) {
      json j;
      try {
        j = json::parse(read_text_file(f.spec_file));
      } catch (const json::exception& e) {
        throw InvalidArgument("cannot parse '" + f.spec_file + "': " + e.what());
      }
      spec = generator_spec_from_json(j);
    } else if (f.kind.empty()) {
      err_ << "error: generate needs --kind (or --spec)\n\n" << sub.help();
      throw UsageShown{};
    }
    if (!f.kind.empty()) spec.kind = parse_generator_kind(f.kind);
    const auto given = [&](const char* name) { return sub.count(name) > 0; };
    if (given("--n")) spec.n = f.n;
    if (given("--d")) spec.d = f.d;
    if (given("--delta")) {
      spec.delta = f.delta;
      if (!given("--d")) spec.d = f.delta.size();
    }
    if (given("--sigma")) spec.sigma = f.sigma;
    if (given("--noise")) spec.noise = f.noise;
    if (given("--shift")) spec.shift = f.shift;
    if (seed_given || f.spec_file.empty()) spec.seed = g.seed;
    spec.validate();

    const auto [source, target] = shiftex::generate(spec);
    const std::string dir = f.out_dir.empty() ? "." : f.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
    auto path = [&](const char* name) { return dir + "/" + name; };
    write_csv(path("source.csv"), source);
    write_csv(path("target.csv"), target);

    json manifest;
    manifest["schema"] = "shiftex.generate_manifest/1";
    manifest["seed"] = spec.seed;
    manifest["spec"] = to_json(spec);
    manifest["columns"] = source.columns();
    auto file_entry = [](const char* name, const Dataset& d) {
      json e;
      e["path"] = name;
      e["rows"] = d.n();
      e["fingerprint"] = detail::hex64(fingerprint(d.rows()));
      return e;
    };
    manifest["source"] = file_entry("source.csv", source);
    manifest["target"] = file_entry("target.csv", target);
    const std::string manifest_text = manifest.dump(2) + "\n";
    {
      std::ofstream mf(path("manifest.json"), std::ios::binary);
      if (!mf) throw IoError("cannot open '" + path("manifest.json") + "' for writing");
      mf << manifest_text;
      if (!mf.flush()) throw IoError("error while writing '" + path("manifest.json") + "'");
    }

    switch (parse_output_format(g.output)) {
      case OutputFormat::json: emit(g, manifest_text); break;
      case OutputFormat::csv:
        emit(g, "file,rows,columns\nsource.csv," + std::to_string(source.n()) + "," + std::to_string(source.d()) +
                    "\ntarget.csv," + std::to_string(target.n()) + "," + std::to_string(target.d()) + "\nmanifest.json,,\n");
        break;
      case OutputFormat::table:
        emit(g, render_columns({{"kind", std::string(to_string(spec.kind))},
                                {"seed", std::to_string(spec.seed)},
                                {"source", path("source.csv") + " (" + std::to_string(source.n()) + " rows)"},
                                {"target", path("target.csv") + " (" + std::to_string(target.n()) + " rows)"},
                                {"manifest", path("manifest.json")}}));
        break;
    }
  }

  static ExplainConfig explain_config(const GlobalFlags& g, const FitFlags& f) {
    ExplainConfig c;
    c.family = parse_family(f.family);
    c.k = f.k;
    if (!f.strategy.empty()) c.strategy = parse_strategy(f.strategy);
    c.lambda = f.lambda;
    c.ot = g.ot;
    c.seed = g.seed;
    c.restarts = f.restarts;
    if (c.restarts == 0) throw InvalidArgument("--restarts must be at least 1");
    return c;
  }

  void explain(const GlobalFlags& g, const InputFlags& in, const FitFlags& f) {
    const OutputFormat format = parse_output_format(g.output);
    const ExplainConfig config = explain_config(g, f);
    const Inputs data = load_inputs(in);
    if (config.family != Family::vector) {
      const std::size_t limit = max_k(config.family, data.source);
      if (config.k < 1 || config.k > limit)
        throw InvalidArgument("k = " + std::to_string(config.k) + " is out of range [1, " +
                              (config.family == Family::k_cluster ? "N] with N = " : "d] with d = ") +
                              std::to_string(limit));
    }
    const ExplanationReport r = shiftex::explain(data.source, data.target, config);
    switch (format) {
      case OutputFormat::json: emit(g, to_json(r).dump(2) + "\n"); break;
      case OutputFormat::csv: emit(g, render_explain_csv(r)); break;
      case OutputFormat::table: emit(g, render_explain_table(r, data.source)); break;
    }
  }

  void sweep(const GlobalFlags& g, const InputFlags& in, const FitFlags& f) {
    const OutputFormat format = parse_output_format(g.output);
    SweepConfig sc{explain_config(g, f), g.threads, g.timings};
    if (sc.threads == 0) throw InvalidArgument("--threads must be at least 1");
    const Inputs data = load_inputs(in);
    const std::size_t k_max = f.k_max ? f.k_max : max_k(sc.base.family, data.source);
    if (f.k_min < 1 || f.k_min > k_max)
      throw InvalidArgument("--k-min must lie in [1, k-max], got " + std::to_string(f.k_min));
    std::vector<std::size_t> ks;
    for (std::size_t k = f.k_min; k <= k_max; ++k) ks.push_back(k);
    const SweepResult r = run_sweep(data.source, data.target, ks, sc);
    emit(g, render_sweep(r, format));
  }

  void distance(const GlobalFlags& g, const DistanceFlags& f) {
    const OutputFormat format = parse_output_format(g.output);
    if (f.a.empty() || f.b.empty()) throw InvalidArgument("distance needs --a and --b");
    LoadOptions options;
    options.columns = f.columns;
    options.value_map = parse_encodings(f.encode);
    const Dataset a = load_csv(f.a, options);
    const Dataset b = load_csv(f.b, options);
    require_same_columns(a, b);
    g.ot.validate();
    const Solver solver = g.ot.resolve(a.n(), b.n());
    const double w2 = w2_squared(a, b, g.ot);
    const json j = distance_json(a, b, solver, w2);
    switch (format) {
      case OutputFormat::json: emit(g, j.dump(2) + "\n"); break;
      case OutputFormat::csv: {
        std::string s = "quantity,value\nw2_squared," + format_double(w2) + "\n";
        for (auto it = j["mean_gap"].begin(); it != j["mean_gap"].end(); ++it)
          s += csv_quote("mean_gap:" + it.key()) + "," + format_double(it.value().get<double>()) + "\n";
        emit(g, s);
        break;
      }
      case OutputFormat::table: {
        std::string s = render_columns({{"w2_squared", format_6g(w2)},
                                        {"solver", std::string(to_string(solver))},
                                        {"n_a", std::to_string(a.n())},
                                        {"n_b", std::to_string(b.n())}});
        s += "\nmean gap (b minus a)\n";
        std::vector<std::vector<std::string>> t{{"column", "mean_gap"}};
        for (auto it = j["mean_gap"].begin(); it != j["mean_gap"].end(); ++it)
          t.push_back({it.key(), format_6g(it.value().get<double>())});
        emit(g, s + render_columns(t));
        break;
      }
    }
  }

  /// Checks a JSON document against the structural rules of its schema tag.
  void verify(const GlobalFlags& g, const std::string& file) {
    std::string text;
    if (file == "-") {
      text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
    } else {
      text = read_text_file(file);
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
      throw InvalidArgument("document has no schema tag");
    const std::string schema = j["schema"].get<std::string>();
    if (schema == "shiftex.shift_map/1") {
      shift_map_from_json(j);
    } else if (schema == "shiftex.explanation_report/1") {
      report_from_json(j);
    } else if (schema == "shiftex.sweep/1") {
      sweep_from_json(j);
    } else if (schema == "shiftex.generate_manifest/1") {
      const GeneratorSpec s = generator_spec_from_json(detail::field(j, "spec"));
      if (detail::field(j, "seed").get<std::uint64_t>() != s.seed) throw InvalidArgument("manifest seed disagrees with its spec");
    } else if (schema == "shiftex.distance/1") {
      if (detail::number(detail::field(j, "w2_squared"), "w2_squared") < 0.0) throw InvalidArgument("w2_squared is negative");
      if (!detail::field(j, "mean_gap").is_object()) throw InvalidArgument("mean_gap must be an object");
    } else {
      throw InvalidArgument("unknown schema '" + schema + "'");
    }
    emit(g, "ok " + schema + "\n");
  }

  struct UsageShown {};

 private:
  std::ostream& out_;
  std::ostream& err_;
};

// ---------------------------------------------------------------------------

inline void add_input_flags(CLI::App* cmd, InputFlags& in) {
  cmd->add_option("--source", in.source, "Source CSV (or the single file to split)");
  cmd->add_option("--target", in.target, "Target CSV");
  cmd->add_option("--columns", in.columns, "Columns to use, comma separated (default: all)")->delimiter(',');
  cmd->add_option("--encode", in.encode, "Categorical codes COL=VALUE:CODE, comma separated; VALUE * is the fallback")
      ->delimiter(',');
  cmd->add_option("--split-column", in.split_column, "Column whose values decide source versus target");
  cmd->add_option("--split-source", in.split_source, "Raw values of the split column that form the source")->delimiter(',');
  cmd->add_option("--split-target", in.split_target, "Raw values of the split column that form the target")->delimiter(',');
}

inline void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--family", f.family, "vector | k-sparse-mean | k-sparse-ot | k-cluster")->capture_default_str();
  cmd->add_option("--strategy", f.strategy, "Active-set rule: mean-gap | ot-displacement");
  cmd->add_option("--lambda", f.lambda, "Weight of distance_to_ot in the objective")->capture_default_str();
  cmd->add_option("--restarts", f.restarts, "k-means restarts for k-cluster")->capture_default_str();
}

/// Runs one command line. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explains the shift between two tabular datasets with interpretable transport maps.", "shiftex"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalFlags g;
  std::string solver = "auto";
  CLI::Option* seed_opt = app.add_option("--seed", g.seed, "Random seed")->envname(seed_env)->capture_default_str();
  app.add_option("--ot-solver", solver, "exact | sinkhorn | auto")->capture_default_str();
  app.add_option("--epsilon", g.ot.epsilon, "Entropic strength relative to the mean pairwise squared distance")
      ->capture_default_str();
  app.add_option("--max-iters", g.ot.max_iters, "Sinkhorn iteration budget")->capture_default_str();
  app.add_option("--convergence-tol", g.ot.convergence_tol, "Sinkhorn marginal tolerance")->capture_default_str();
  app.add_option("--exact-size-limit", g.ot.exact_size_limit, "Largest N*M solved exactly")->capture_default_str();
  app.add_option("--output", g.output, "table | json | csv")->capture_default_str();
  app.add_option("--out-file", g.out_file, "Write the output here instead of stdout");
  app.add_flag("--timings", g.timings, "Report wall time per sweep row");
  app.add_option("--threads", g.threads, "Worker threads for sweep")->capture_default_str();

  GenerateFlags gen;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic source/target pair");
  generate->add_option("--kind", gen.kind, "gaussian | gmm | half-moons");
  generate->add_option("--spec", gen.spec_file, "Generator spec JSON; flags override its fields");
  generate->add_option("--out-dir", gen.out_dir, "Directory for source.csv, target.csv, manifest.json")->capture_default_str();
  generate->add_option("--n", gen.n, "Rows per side")->capture_default_str();
  generate->add_option("--d", gen.d, "Dimension (gaussian)")->capture_default_str();
  generate->add_option("--delta", gen.delta, "Mean shift, comma separated (gaussian)")->delimiter(',');
  generate->add_option("--sigma", gen.sigma, "Component standard deviation (gmm)")->capture_default_str();
  generate->add_option("--noise", gen.noise, "Noise scale (half-moons)")->capture_default_str();
  generate->add_option("--shift", gen.shift, "Target translation, comma separated (half-moons)")->delimiter(',');

  InputFlags in;
  FitFlags fit;
  CLI::App* explain = app.add_subcommand("explain", "Fit one shift explanation");
  add_input_flags(explain, in);
  add_fit_flags(explain, fit);
  explain->add_option("--k", fit.k, "Sparsity or number of clusters")->capture_default_str();

  CLI::App* sweep = app.add_subcommand("sweep", "Fit one map per k and report the frontier");
  add_input_flags(sweep, in);
  add_fit_flags(sweep, fit);
  sweep->add_option("--k-min", fit.k_min, "Smallest k")->capture_default_str();
  sweep->add_option("--k-max", fit.k_max, "Largest k (default: d, or N for k-cluster)");

  DistanceFlags dist;
  CLI::App* distance = app.add_subcommand("distance", "W2^2 and per-column mean gaps between two files");
  distance->add_option("--a", dist.a, "First CSV");
  distance->add_option("--b", dist.b, "Second CSV");
  distance->add_option("--columns", dist.columns, "Columns to use, comma separated")->delimiter(',');
  distance->add_option("--encode", dist.encode, "Categorical codes COL=VALUE:CODE")->delimiter(',');

  std::string verify_file;
  CLI::App* verify = app.add_subcommand("verify", "Check a JSON output document (- reads stdin)");
  verify->add_option("file", verify_file, "JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* where = &app;
    for (const CLI::App* s : app.get_subcommands()) where = s;
    err << where->help();
    return usage;
  }

  Runner runner(out, err);
  try {
    g.ot.solver = parse_solver(solver);
    g.ot.validate();
    parse_output_format(g.output);
    if (*generate) runner.generate(g, gen, seed_opt->count() > 0, *generate);
    else if (*explain) runner.explain(g, in, fit);
    else if (*sweep) runner.sweep(g, in, fit);
    else if (*distance) runner.distance(g, dist);
    else if (*verify) runner.verify(g, verify_file);
    return ok;
  } catch (const Runner::UsageShown&) {
    return usage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return io;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (residual " << format_6g(e.residual()) << " after " << e.iterations()
        << " iterations)\n";
    return numerical;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return numerical;
  }
}

}  // namespace shiftex::cli
