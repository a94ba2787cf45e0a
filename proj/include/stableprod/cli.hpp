#pragma once

// Command-line front end. Every subcommand validates its whole configuration,
// then builds a Document (header plus tables) that renders to CSV or JSON.
// Nothing in the output depends on the worker count or the clock, so a rerun
// with the same flags reproduces the output byte for byte.
//
// CSV layout: `# key: <json>` header lines (nested keys dotted), then for each
// table a `# table: <name>` line, the column row, the data rows and
// `# <name>.summary.<key>: <json>` footer lines.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stableprod/stableprod.hpp"

namespace stableprod::cli {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSchemaName = "stableprod-table";
inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kSuccess = 0, kInternalError = 1, kConfigError = 2, kNumericalFailure = 3 };

enum class Format { csv, json };

struct RunConfig {
  double alpha = 1.0;
  std::int64_t n = 1;
  std::int64_t steps = 4096;
  std::int64_t samples = 100000;
  std::uint64_t seed = 42;
  /// eps, x, t or z depending on the command; empty selects the defaults.
  std::vector<double> thresholds;
  std::string output_path;
  Format format = Format::csv;
  std::int64_t workers = 1;
  /// Keep exp(-|lambda|^2) units at alpha = 2 instead of standard BM.
  bool unit_normalization = false;
  double nu = 1.0;
  double start = 1.0;
  double r_min = 1.0 / 256.0;
  double r_max = 1.0 / 16.0;
  std::int64_t bins = 8;
  std::int64_t pairs = 10000;
  std::int64_t bridges = 10000;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
  Json summary = Json::object();
};

struct Document {
  Json header = Json::object();
  std::vector<Table> tables;
};

// ---------------------------------------------------------------------------
// Parsing helpers

/// Comma-separated reals; the token `e` stands for Euler's number.
inline std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  if (text.empty()) return values;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    const auto last = token.find_last_not_of(" \t");
    token = first == std::string::npos ? "" : token.substr(first, last - first + 1);
    if (token == "e") {
      values.push_back(std::numbers::e);
      continue;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (token.empty() || used != token.size() || !std::isfinite(value)) {
      throw std::invalid_argument(flag + ": '" + token + "' is not a number");
    }
    values.push_back(value);
  }
  return values;
}

namespace detail {

inline std::size_t positive(std::int64_t value, const char* name) {
  if (value <= 0) throw std::invalid_argument(std::string(name) + " must be positive");
  return static_cast<std::size_t>(value);
}

inline SimulationConfig simulation_config(const RunConfig& run, std::size_t dimension) {
  SimulationConfig config;
  config.alpha = StabilityIndex(run.alpha);
  config.dimension = dimension;
  config.steps = positive(run.steps, "steps");
  config.samples = positive(run.samples, "samples");
  config.seed = run.seed;
  config.workers = static_cast<unsigned>(positive(run.workers, "workers"));
  config.units = config.alpha.is_gaussian() && !run.unit_normalization
                     ? Units::standard_brownian
                     : Units::unit;
  config.validate();
  return config;
}

inline SimulationConfig product_config(const RunConfig& run) {
  return simulation_config(run, positive(run.n, "n"));
}

inline const char* units_name(Units units) {
  return units == Units::standard_brownian ? "standard_brownian" : "unit";
}

inline Json common_config(const SimulationConfig& config) {
  Json json = Json::object();
  json["alpha"] = config.alpha.value();
  json["n"] = config.dimension;
  json["steps"] = config.steps;
  json["samples"] = config.samples;
  json["units"] = units_name(config.units);
  return json;
}

inline std::vector<double> dyadic(int from, int to) {
  std::vector<double> values;
  for (int k = from; k <= to; ++k) values.push_back(std::ldexp(1.0, -k));
  return values;
}

inline std::vector<Json> estimate_cells(const ThresholdEstimate& row) {
  return {row.threshold, row.estimate.p_hat, row.estimate.ci_low,
          row.estimate.ci_high, row.estimate.successes, row.estimate.trials};
}

inline void refuse_zero_counts(std::span<const ThresholdEstimate> curve,
                               const char* name) {
  for (const auto& row : curve) {
    if (row.estimate.successes == 0) {
      std::ostringstream message;
      message << "zero count at " << name << " = " << row.threshold
              << "; raise samples or move the threshold";
      throw numerical_failure(message.str());
    }
  }
}

inline Json fit_json(const ExponentFit& fit) {
  Json json = Json::object();
  json["theta"] = fit.theta;
  json["stderr_theta"] = fit.stderr_theta;
  if (fit.includes_log_term) {
    json["beta"] = fit.beta;
    json["stderr_beta"] = fit.stderr_beta;
  }
  json["intercept"] = fit.intercept;
  json["r_squared"] = fit.r_squared;
  json["points"] = fit.points;
  return json;
}

inline double standard_factor(const SimulationConfig& config) {
  // Converts one coordinate in configured units to standard BM units.
  return config.units == Units::unit && config.alpha.is_gaussian()
             ? 1.0 / std::numbers::sqrt2
             : 1.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each has a `prepare` step that validates everything and returns
// the resolved configuration, and a `run` step that simulates.

struct Command {
  std::string name;
  std::function<Json(const RunConfig&)> prepare;
  std::function<Table(const RunConfig&)> run;
};

inline std::vector<double> persist_epsilons(const RunConfig& run) {
  return run.thresholds.empty() ? detail::dyadic(1, 6) : run.thresholds;
}

inline Json prepare_persist(const RunConfig& run) {
  const auto config = detail::product_config(run);
  const auto eps = persist_epsilons(run);
  stableprod::detail::check_thresholds(eps, true, "eps");
  if (config.samples < 1000) throw std::invalid_argument("persist needs samples >= 1000");
  Json json = detail::common_config(config);
  json["eps"] = eps;
  return json;
}

inline Table run_persist(const RunConfig& run) {
  prepare_persist(run);
  const auto config = detail::product_config(run);
  const auto eps = persist_epsilons(run);
  const auto curve = estimate_persistence(config, eps);
  detail::refuse_zero_counts(curve, "eps");
  Table table{"persist", {"eps", "p_hat", "ci_low", "ci_high", "successes", "trials"}};
  for (const auto& row : curve) table.rows.push_back(detail::estimate_cells(row));
  if (curve.size() >= 4) {
    table.summary["fit"] = detail::fit_json(fit_exponent(curve, false));
    bool log_defined = true;
    for (double e : eps) log_defined = log_defined && e != 1.0;
    table.summary["log_fit"] =
        log_defined ? detail::fit_json(fit_exponent(curve, true)) : Json(nullptr);
  }
  if (config.alpha.is_gaussian() && config.dimension == 1) {
    // sup of a standard BM on [0, 1] has the law of |N|.
    Json oracle = Json::array();
    for (double e : eps) {
      oracle.push_back(std::erf(e * detail::standard_factor(config) / std::numbers::sqrt2));
    }
    table.summary["oracle"] = oracle;
  }
  return table;
}

inline std::vector<double> tail_levels(const RunConfig& run) {
  if (!run.thresholds.empty()) return run.thresholds;
  if (run.alpha == 2.0) return {2.0, 3.0, 4.0};
  return {50.0, 100.0, 200.0, 400.0};
}

inline TailAsymptote tail_shape(const SimulationConfig& config) {
  const int n = static_cast<int>(config.dimension);
  return config.alpha.is_gaussian() ? TailAsymptote::gaussian(n)
                                    : TailAsymptote::stable(n, config.alpha.value());
}

inline double shape_at(const SimulationConfig& config, double x) {
  // The Gaussian shape is stated for standard BM coordinates.
  const double to_standard =
      std::pow(detail::standard_factor(config), static_cast<double>(config.dimension));
  return tail_shape(config)(x * to_standard);
}

inline Json prepare_tails(const RunConfig& run) {
  const auto config = detail::product_config(run);
  const auto xs = tail_levels(run);
  stableprod::detail::check_thresholds(xs, false, "x");
  if (config.samples < 1000) throw std::invalid_argument("tails needs samples >= 1000");
  for (double x : xs) shape_at(config, x);
  Json json = detail::common_config(config);
  json["x"] = xs;
  return json;
}

inline Table run_tails(const RunConfig& run) {
  prepare_tails(run);
  const auto config = detail::product_config(run);
  const auto xs = tail_levels(run);
  const auto curve = estimate_upper_tail(config, xs);
  detail::refuse_zero_counts(curve, "x");
  Table table{"tails", {"x", "p_hat", "ci_low", "ci_high", "successes", "trials",
                        "shape", "shape_ratio"}};
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& row : curve) {
    auto cells = detail::estimate_cells(row);
    const double shape = shape_at(config, row.threshold);
    const double ratio = row.estimate.p_hat / shape;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    cells.push_back(shape);
    cells.push_back(ratio);
    table.rows.push_back(std::move(cells));
  }
  table.summary["shape"] = config.alpha.is_gaussian() ? "x^(-1/n) exp(-(n/2) x^(2/n))"
                                                      : "(ln x)^(n-1) x^(-alpha)";
  table.summary["shape_ratio_min"] = lo;
  table.summary["shape_ratio_max"] = hi;
  table.summary["flatness"] = hi / lo;
  if (curve.size() >= 4) table.summary["fit"] = detail::fit_json(fit_exponent(curve, false));
  return table;
}

inline Json prepare_gtime(const RunConfig& run) {
  const auto config = detail::simulation_config(run, 1);
  if (!(run.r_min > 0.0 && run.r_max > run.r_min && run.r_max <= 1.0)) {
    throw std::invalid_argument("gtime needs 0 < r-min < r-max <= 1");
  }
  const auto bins = detail::positive(run.bins, "bins");
  if (bins < 2) throw std::invalid_argument("gtime needs at least 2 bins");
  Json json = detail::common_config(config);
  json.erase("n");
  json.erase("units");
  json["r_min"] = run.r_min;
  json["r_max"] = run.r_max;
  json["bins"] = bins;
  return json;
}

inline Table run_gtime(const RunConfig& run) {
  prepare_gtime(run);
  const auto config = detail::simulation_config(run, 1);
  const auto g1 = sample_last_sign_change(config);
  const auto fit = fit_density_slope(g1, run.r_min, run.r_max,
                                     static_cast<std::size_t>(run.bins),
                                     1.0 / static_cast<double>(config.steps));
  Table table{"gtime", {"r_low", "r_high", "count", "width", "density"}};
  for (const auto& bin : fit.bins) {
    table.rows.push_back({bin.lo, bin.hi, bin.count, bin.width, bin.density});
  }
  table.summary["slope"] = fit.slope;
  table.summary["stderr_slope"] = fit.stderr_slope;
  table.summary["r_squared"] = fit.r_squared;
  table.summary["target_slope"] = -0.5;
  for (const auto& [key, r] : {std::pair{"cdf_quarter", 0.25}, std::pair{"cdf_half", 0.5}}) {
    const auto cdf = empirical_cdf(g1, r);
    Json json = Json::object();
    json["r"] = r;
    json["p_hat"] = cdf.p_hat;
    json["ci_low"] = cdf.ci_low;
    json["ci_high"] = cdf.ci_high;
    json["arcsine"] = arcsine_cdf(r);
    table.summary[key] = json;
  }
  table.summary["zero_fraction"] = empirical_cdf(g1, 0.0).p_hat;
  return table;
}

inline std::vector<double> passage_times(const RunConfig& run) {
  if (!run.thresholds.empty()) return run.thresholds;
  if (run.alpha == 2.0) return {1.0, 4.0, 16.0};
  return {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
}

inline Json prepare_passage(const RunConfig& run) {
  const auto config = detail::simulation_config(run, 1);
  const auto times = passage_times(run);
  stableprod::detail::check_thresholds(times, false, "t");
  if (!(run.start > 0.0)) throw std::invalid_argument("passage needs start > 0");
  Json json = detail::common_config(config);
  json.erase("n");
  json["start"] = run.start;
  json["t"] = times;
  return json;
}

inline Table run_passage(const RunConfig& run) {
  prepare_passage(run);
  const auto config = detail::simulation_config(run, 1);
  const auto times = passage_times(run);
  const auto curve = estimate_survival(config, run.start, times);
  detail::refuse_zero_counts(curve, "t");
  Table table{"passage", {"t", "p_hat", "ci_low", "ci_high", "successes", "trials",
                          "oracle", "grid_margin"}};
  const double dt = times.back() / static_cast<double>(config.steps);
  const double start = run.start * detail::standard_factor(config);
  for (const auto& row : curve) {
    auto cells = detail::estimate_cells(row);
    if (config.alpha.is_gaussian()) {
      cells.push_back(bm_survival_from_one(row.threshold / (start * start)));
      cells.push_back(brownian_survival_grid_margin(start, row.threshold, dt));
    } else {
      cells.push_back(nullptr);
      cells.push_back(nullptr);
    }
    table.rows.push_back(std::move(cells));
  }
  if (curve.size() >= 4) {
    table.summary["fit"] = detail::fit_json(fit_exponent(curve, false));
    table.summary["target_exponent"] = -0.5;
  }
  return table;
}

inline LemmaCheckConfig lemma_config(const RunConfig& run) {
  const auto config = detail::simulation_config(run, 1);
  LemmaCheckConfig lemma;
  lemma.alpha = config.alpha;
  lemma.steps = config.steps;
  lemma.paths = config.samples;
  lemma.seed = config.seed;
  lemma.workers = config.workers;
  lemma.pairs = detail::positive(run.pairs, "pairs");
  lemma.bridges = detail::positive(run.bridges, "bridges");
  lemma.validate();
  return lemma;
}

inline Json prepare_bridge_check(const RunConfig& run) {
  const auto lemma = lemma_config(run);
  Json json = Json::object();
  json["alpha"] = lemma.alpha.value();
  json["steps"] = lemma.steps;
  json["paths"] = lemma.paths;
  json["pairs"] = lemma.pairs;
  json["bridges"] = lemma.bridges;
  json["bridge_steps"] = lemma.bridge_steps;
  json["resample_steps"] = lemma.resample_steps;
  if (!lemma.alpha.is_gaussian()) {
    json["a_bin"] = {lemma.bin_low, lemma.bin_high};
    json["endpoint_tolerance"] = lemma.endpoint_tolerance;
    json["reversal_tolerance"] = lemma.reversal_tolerance;
  }
  json["reversal_endpoint"] = lemma.reversal_endpoint;
  return json;
}

inline Table run_bridge_check(const RunConfig& run) {
  prepare_bridge_check(run);
  const auto report = lemma_check(lemma_config(run));
  Table table{"bridge-check", {"check", "statistic", "critical_1pct", "n1", "n2", "pass"}};
  auto add = [&](const char* name, const KsReport& ks) {
    table.rows.push_back({name, ks.statistic, ks.critical_1pct, ks.n1, ks.n2, ks.pass});
  };
  add("independence", report.independence.ks);
  add("bridge_marginal", report.marginal);
  add("time_reversal", report.reversal);
  add("dependent_control", report.dependent_control.ks);
  table.summary["paths"] = report.paths;
  table.summary["with_sign_change"] = report.with_sign_change;
  table.summary["in_bin"] = report.in_bin;
  table.summary["split_g1"] = report.independence.split_g1;
  table.summary["bridge_acceptance"] = report.bridge_acceptance;
  table.summary["reversal_acceptance"] = report.reversal_acceptance;
  table.summary["control_rejected"] = !report.dependent_control.ks.pass;
  table.summary["pass"] = report.pass() && !report.dependent_control.ks.pass;
  return table;
}

inline Json prepare_mellin(const RunConfig& run) {
  if (!(run.nu > -1.0)) throw std::invalid_argument("mellin needs nu > -1");
  const auto n = detail::positive(run.n, "n");
  if (run.samples < 2) throw std::invalid_argument("mellin needs samples >= 2");
  detail::positive(run.workers, "workers");
  Json json = Json::object();
  json["nu"] = run.nu;
  json["n"] = n;
  json["samples"] = run.samples;
  return json;
}

inline Table run_mellin(const RunConfig& run) {
  prepare_mellin(run);
  const int n = static_cast<int>(run.n);
  const double exact = mellin_abs_normal_product(run.nu, n);
  const auto mc = mellin_monte_carlo(run.nu, n, static_cast<std::uint64_t>(run.samples),
                                     run.seed, static_cast<unsigned>(run.workers));
  Table table{"mellin", {"nu", "n", "exact", "mc_mean", "mc_stderr", "z_score"}};
  const double z = mc.standard_error > 0.0 ? (mc.mean - exact) / mc.standard_error : 0.0;
  table.rows.push_back({run.nu, n, exact, mc.mean, mc.standard_error, z});
  return table;
}

inline std::vector<double> xy_levels(const RunConfig& run) {
  if (!run.thresholds.empty()) return run.thresholds;
  return {std::numbers::e, 10.0, 1e6};
}

inline Json prepare_xy_check(const RunConfig& run) {
  if (!(run.nu > 0.0)) throw std::invalid_argument("xy-check needs nu > 0");
  const auto zs = xy_levels(run);
  stableprod::detail::check_thresholds(zs, false, "z");
  if (zs.front() < 1.0) throw std::invalid_argument("xy-check needs z >= 1");
  detail::positive(run.samples, "samples");
  detail::positive(run.workers, "workers");
  Json json = Json::object();
  json["nu"] = run.nu;
  json["z"] = zs;
  json["samples"] = run.samples;
  return json;
}

inline Table run_xy_check(const RunConfig& run) {
  prepare_xy_check(run);
  const auto zs = xy_levels(run);
  const auto mc = pareto_product_monte_carlo(run.nu, zs,
                                             static_cast<std::uint64_t>(run.samples),
                                             run.seed, static_cast<unsigned>(run.workers));
  Table table{"xy-check", {"z", "exact", "mc_p_hat", "mc_ci_low", "mc_ci_high",
                           "mc_successes", "asymptote_ratio"}};
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const double z = zs[k];
    const double exact = pareto_product_tail(z, run.nu);
    const Json ratio = z > 1.0 ? Json(exact * std::pow(z, run.nu) / std::log(z))
                               : Json(nullptr);
    const auto& e = mc[k].estimate;
    table.rows.push_back({z, exact, e.p_hat, e.ci_low, e.ci_high, e.successes, ratio});
  }
  table.summary["asymptote_target"] = run.nu;
  return table;
}

inline const std::vector<Command>& commands() {
  static const std::vector<Command> all{
      {"persist", prepare_persist, run_persist},
      {"tails", prepare_tails, run_tails},
      {"gtime", prepare_gtime, run_gtime},
      {"passage", prepare_passage, run_passage},
      {"bridge-check", prepare_bridge_check, run_bridge_check},
      {"mellin", prepare_mellin, run_mellin},
      {"xy-check", prepare_xy_check, run_xy_check},
  };
  return all;
}

inline Json header_for(const std::string& command, const RunConfig& run, Json config) {
  Json header = Json::object();
  header["schema"] = kSchemaName;
  header["schema_version"] = kSchemaVersion;
  header["tool_version"] = kLibraryVersion;
  header["command"] = command;
  Json modules = Json::object();
  for (const auto& [name, version] : kModuleVersions) modules[std::string(name)] = version;
  header["modules"] = modules;
  header["seed"] = run.seed;
  header["config"] = std::move(config);
  return header;
}

/// Validates everything first, then runs. `report` runs every other command
/// with its default threshold list.
inline Document build_document(const std::string& command, const RunConfig& run) {
  Document doc;
  if (command == "report") {
    RunConfig shared = run;
    shared.thresholds.clear();
    Json config = Json::object();
    for (const auto& c : commands()) config[c.name] = c.prepare(shared);
    doc.header = header_for(command, run, std::move(config));
    for (const auto& c : commands()) doc.tables.push_back(c.run(shared));
    return doc;
  }
  for (const auto& c : commands()) {
    if (c.name == command) {
      doc.header = header_for(command, run, c.prepare(run));
      doc.tables.push_back(c.run(run));
      return doc;
    }
  }
  throw std::invalid_argument("unknown command " + command);
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline void flatten(std::ostream& out, const std::string& prefix, const Json& value) {
  if (value.is_object() && !value.empty()) {
    for (const auto& [key, item] : value.items()) {
      flatten(out, prefix.empty() ? key : prefix + "." + key, item);
    }
    return;
  }
  out << "# " << prefix << ": " << value.dump() << '\n';
}

inline std::string cell(const Json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

}  // namespace detail

inline std::string render_csv(const Document& doc) {
  std::ostringstream out;
  detail::flatten(out, "", doc.header);
  for (const auto& table : doc.tables) {
    out << "# table: " << table.name << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << (c ? "," : "") << table.columns[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << (c ? "," : "") << detail::cell(row[c]);
      }
      out << '\n';
    }
    if (!table.summary.empty()) detail::flatten(out, table.name + ".summary", table.summary);
  }
  return out.str();
}

inline std::string render_json(const Document& doc) {
  Json json = Json::object();
  json["header"] = doc.header;
  Json tables = Json::array();
  for (const auto& table : doc.tables) {
    Json t = Json::object();
    t["name"] = table.name;
    t["columns"] = table.columns;
    t["rows"] = table.rows;
    t["summary"] = table.summary;
    tables.push_back(std::move(t));
  }
  json["tables"] = std::move(tables);
  return json.dump(2) + "\n";
}

inline std::string render(const Document& doc, Format format) {
  return format == Format::json ? render_json(doc) : render_csv(doc);
}

/// Single-line JSON error record.
inline std::string error_record(int code, std::string_view kind, std::string_view command,
                                std::string_view message) {
  Json json = Json::object();
  Json error = Json::object();
  error["exit_code"] = code;
  error["kind"] = kind;
  error["command"] = command;
  error["message"] = message;
  json["error"] = std::move(error);
  return json.dump();
}

// ---------------------------------------------------------------------------
// Entry point

inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Persistence and large deviations of products of stable paths"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kLibraryVersion));

  RunConfig run;
  std::string format = "csv";
  std::string list;

  struct Spec {
    const char* name;
    const char* help;
    const char* list_flag;
  };
  const Spec specs[] = {
      {"persist", "P(S_n <= eps) curve and persistence exponent fit", "--eps"},
      {"tails", "P(S_n >= x) curve against the large-deviation shape", "--x"},
      {"gtime", "law of the last sign change g_1 and its small-r density slope", nullptr},
      {"passage", "survival P(T_0 >= t) from a positive start", "--t"},
      {"bridge-check", "pre-g_1 bridge, independence and time-reversal checks", nullptr},
      {"mellin", "Mellin transform of a product of |N(0,1)| against Monte Carlo", nullptr},
      {"xy-check", "Pareto product tail: closed form, Monte Carlo, asymptote", "--z"},
      {"report", "every experiment with default thresholds", nullptr},
  };
  for (const auto& spec : specs) {
    auto* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--alpha", run.alpha, "stability index in (0, 2]");
    sub->add_option("--n", run.n, "number of independent processes");
    sub->add_option("--steps", run.steps, "grid steps per path");
    sub->add_option("--samples", run.samples, "Monte Carlo samples");
    sub->add_option("--seed", run.seed, "base seed");
    sub->add_option("--out", run.output_path, "output file (default stdout)");
    sub->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", run.workers, "worker threads (output unchanged)");
    sub->add_flag("--unit-normalization", run.unit_normalization,
                  "keep exp(-lambda^2) units at alpha = 2");
    sub->add_option("--nu", run.nu, "Mellin or Pareto index");
    if (spec.list_flag) {
      sub->add_option(spec.list_flag, list, "comma-separated levels");
    }
    if (std::string_view(spec.name) == "passage") {
      sub->add_option("--start", run.start, "starting point (> 0)");
    }
    if (std::string_view(spec.name) == "gtime") {
      sub->add_option("--r-min", run.r_min, "smallest density bin edge");
      sub->add_option("--r-max", run.r_max, "largest density bin edge");
      sub->add_option("--bins", run.bins, "log-spaced density bins");
    }
    if (std::string_view(spec.name) == "bridge-check") {
      sub->add_option("--pairs", run.pairs, "pairs in the independence check");
      sub->add_option("--bridges", run.bridges, "bridge samples per comparison");
    }
  }

  std::string command;
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_record(kConfigError, "config_error", "", e.what()) << '\n';
    return kConfigError;
  }
  command = app.get_subcommands().front()->get_name();

  try {
    run.format = format == "json" ? Format::json : Format::csv;
    const char* flag = command == "persist" ? "--eps"
                       : command == "tails" ? "--x"
                       : command == "passage" ? "--t"
                                              : "--z";
    run.thresholds = parse_list(list, flag);
    const auto text = render(build_document(command, run), run.format);
    if (run.output_path.empty()) {
      out << text;
      out.flush();
    } else {
      std::ofstream file(run.output_path, std::ios::binary | std::ios::trunc);
      if (!file) throw std::invalid_argument("cannot open output file " + run.output_path);
      file << text;
      if (!file.flush()) throw std::runtime_error("write failed: " + run.output_path);
    }
    return kSuccess;
  } catch (const numerical_failure& e) {
    err << error_record(kNumericalFailure, "numerical_failure", command, e.what()) << '\n';
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << error_record(kConfigError, "config_error", command, e.what()) << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << error_record(kInternalError, "internal_error", command, e.what()) << '\n';
    return kInternalError;
  }
}

}  // namespace stableprod::cli
