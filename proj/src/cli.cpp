#include "mpc/cli.hpp"

#include "mpc/bayes.hpp"
#include "mpc/csv.hpp"
#include "mpc/estimation.hpp"
#include "mpc/forecast.hpp"
#include "mpc/ingestion.hpp"
#include "mpc/io.hpp"
#include "mpc/regime.hpp"
#include "mpc/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mpc::cli {

using io::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string out_path(const RunConfig& rc, const std::string& name) {
  std::filesystem::create_directories(rc.out_dir);
  return (std::filesystem::path(rc.out_dir) / name).string();
}

/// Flag value, then config key, then error.
template <typename T>
T required(const std::optional<T>& flag, const json& section, const char* key, const char* flag_name) {
  if (flag) return *flag;
  if (section.contains(key)) return section.at(key).get<T>();
  throw UsageError(std::string("missing ") + flag_name);
}

std::string required_path(const std::string& flag, const json& section, const char* key,
                          const char* flag_name) {
  return required<std::string>(flag.empty() ? std::nullopt : std::optional(flag), section, key, flag_name);
}

template <typename T>
std::optional<T> optional_value(const std::optional<T>& flag, const json& section, const char* key) {
  if (flag) return flag;
  if (section.contains(key) && !section.at(key).is_null()) return section.at(key).get<T>();
  return std::nullopt;
}

io::Provenance provenance(const std::string& command, const json& effective, std::uint64_t seed) {
  return {io::config_hash(json{{"command", command}, {"settings", effective}}), seed};
}

void warn(std::ostream& err, const std::string& message) {
  err << json{{"warning", message}}.dump() << '\n';
}

CategorizeOptions categorize_options(const json& section) {
  CategorizeOptions o;
  if (section.contains("flipper_max_median_holding_years"))
    o.flipper_max_median_holding_years = section.at("flipper_max_median_holding_years").get<double>();
  if (section.contains("builder_sale_window_years"))
    o.builder_sale_window_years = section.at("builder_sale_window_years").get<int>();
  return o;
}

/// A config entry that is either an inline object or a path to a JSON file.
json inline_or_file(const json& value) {
  return value.is_string() ? io::read_json_file(value.get<std::string>()) : value;
}

std::string file_label(Transition t) {
  return std::string(short_name(t.from)) + "_" + std::string(short_name(t.to));
}

}  // namespace

json RunConfig::section(const std::string& name) const {
  if (config.contains(name)) {
    const auto& s = config.at(name);
    if (!s.is_object()) throw io::FormatError(name, "config: section '" + name + "' must be an object");
    return s;
  }
  return json::object();
}

void cmd_ingest(const RunConfig& rc, const IngestArgs& args, std::ostream& err) {
  const auto section = rc.section("ingest");
  const auto path = required_path(args.transactions, section, "transactions", "--transactions");
  const auto parsed = parse_transactions_file(path);
  for (const auto& w : parsed.warnings) warn(err, w);
  if (parsed.lots.empty()) throw io::FormatError("transactions", path + ": no transactions");

  int first = std::numeric_limits<int>::max();
  int last = std::numeric_limits<int>::min();
  for (const auto& lot : parsed.lots) {
    first = std::min(first, lot.transactions.front().date.year);
    last = std::max(last, lot.transactions.back().date.year);
    if (lot.permit_year) last = std::max(last, *lot.permit_year);
  }
  const int first_year = optional_value(args.first_year, section, "first_year").value_or(first);
  const int last_year = optional_value(args.last_year, section, "last_year").value_or(last);
  const long platted =
      optional_value(args.platted, section, "platted").value_or(static_cast<long>(parsed.lots.size()));
  const auto options = categorize_options(section);

  const auto obs = annual_observations(parsed.lots, first_year, last_year, platted, options);
  const json effective = {{"first_year", first_year},
                          {"last_year", last_year},
                          {"platted", platted},
                          {"flipper_max_median_holding_years", options.flipper_max_median_holding_years},
                          {"builder_sale_window_years", options.builder_sale_window_years}};
  std::ostringstream out;
  io::write_observations(out, obs, provenance("ingest", effective, rc.seed));
  io::write_text_file(out_path(rc, "observations.csv"), out.str());
}

void cmd_estimate(const RunConfig& rc, const EstimateArgs& args, std::ostream& err) {
  const auto section = rc.section("estimate");
  const auto obs_path = required_path(args.observations, section, "observations", "--observations");
  const auto obs = io::read_observations_file(obs_path);
  if (obs.size() < 2) throw io::FormatError("observations", obs_path + ": need at least two years");

  json scenario_j = json::object();
  if (args.scenario) {
    scenario_j = io::read_json_file(*args.scenario);
  } else if (section.contains("scenario")) {
    scenario_j = inline_or_file(section.at("scenario"));
  }
  const auto scenario = io::scenario_from_json(scenario_j);
  const auto result = estimate_sequence(obs, scenario);
  for (int y : result.relaxed_years)
    warn(err, "estimate: bounds relaxed by " + csv::format_double(scenario.relax) + " in " + std::to_string(y));

  const auto prov = provenance("estimate", io::scenario_json(scenario), rc.seed);
  auto matrices = io::matrices_json(result.matrices, prov);
  matrices["relaxed_years"] = result.relaxed_years;
  io::write_text_file(out_path(rc, "matrices.json"), matrices.dump(2) + "\n");

  std::ostringstream res;
  io::write_csv_provenance(res, prov);
  res << "year,residual,relaxed,active_constraints\n";
  for (std::size_t i = 0; i < result.matrices.size(); ++i) {
    const int year = result.matrices[i].year;
    std::string active;
    for (const auto& a : result.active_constraints[i]) {
      if (!active.empty()) active += ';';
      active += transition_label(a.transition);
      active += a.side == ActiveConstraint::Side::Lower   ? "@lo="
                : a.side == ActiveConstraint::Side::Upper ? "@hi="
                                                          : "@pin=";
      active += csv::format_double(a.value);
    }
    const bool relaxed =
        std::find(result.relaxed_years.begin(), result.relaxed_years.end(), year) != result.relaxed_years.end();
    res << year << ',' << csv::format_double(result.residuals[i]) << ',' << (relaxed ? 1 : 0) << ','
        << csv::escape(active) << '\n';
  }
  io::write_text_file(out_path(rc, "residuals.csv"), res.str());
}

void cmd_forecast(const RunConfig& rc, const ForecastArgs& args, std::ostream&) {
  const auto section = rc.section("forecast");
  const auto matrices_path = required_path(args.matrices, section, "matrices", "--matrices");
  const auto obs_path = required_path(args.observations, section, "observations", "--observations");
  const auto history = io::matrices_from_json(io::read_json_file(matrices_path));
  const auto obs = io::read_observations_file(obs_path);
  if (obs.empty()) throw io::FormatError("observations", obs_path + ": no observations");
  if (history.empty()) throw io::FormatError("matrices", matrices_path + ": no matrices");

  json overrides = section;
  overrides.erase("matrices");
  overrides.erase("observations");
  auto settings = io::forecast_settings_from_json(overrides);
  if (args.mc_runs) settings.mc_runs = *args.mc_runs;
  if (args.horizon) settings.horizon = *args.horizon;
  if (args.threads) settings.threads = *args.threads;
  settings.seed = rc.seed;
  settings.check();

  const auto& last = obs.back();
  const long platted = static_cast<long>(std::llround(last.category_counts.total())) + last.residual;
  if (platted <= 0) throw io::FormatError("observations", obs_path + ": no platted lots");
  const auto run = run_forecast(history, last.category_counts, settings, platted);

  ForecastSeries series;
  for (const auto& o : obs) {
    ForecastPoint p;
    p.year = o.year;
    p.phase = Phase::Historical;
    p.permits = o.permits_issued;
    p.buildout = o.category_counts.permits() / static_cast<double>(platted);
    series.points.push_back(p);
  }
  series.points.insert(series.points.end(), run.series.points.begin(), run.series.points.end());

  // Threads never change the output, so they stay out of the hash.
  const json effective = {{"alpha", settings.alpha},
                          {"horizon", settings.horizon},
                          {"noise_sd", settings.noise_sd},
                          {"scale_factor", settings.scale_factor},
                          {"mc_runs", settings.mc_runs},
                          {"mc_sd_fraction", settings.mc_sd_fraction},
                          {"history_window", settings.history_window}};
  const auto prov = provenance("forecast", effective, rc.seed);
  std::ostringstream out;
  io::write_forecast(out, series, prov);
  io::write_text_file(out_path(rc, "forecast.csv"), out.str());

  auto mj = io::matrices_json(run.matrices, prov);
  mj["last_smoothed"] = io::matrix_json(run.last_smoothed);
  io::write_text_file(out_path(rc, "forecast_matrices.json"), mj.dump(2) + "\n");
}

void cmd_regimes(const RunConfig& rc, const RegimesArgs& args, std::ostream&) {
  const auto section = rc.section("regimes");
  const auto path = required_path(args.matrices, section, "matrices", "--matrices");
  const auto matrices = io::matrices_from_json(io::read_json_file(path));
  RegimeOptions options;
  options.k_max = optional_value(args.k_max, section, "k_max").value_or(options.k_max);
  options.restarts = optional_value<int>(std::nullopt, section, "restarts").value_or(options.restarts);
  options.seed = rc.seed;

  const auto report = detect_regimes(feature_series(matrices), options);
  const auto prov = provenance("regimes", {{"k_max", options.k_max}, {"restarts", options.restarts}}, rc.seed);
  io::write_text_file(out_path(rc, "regimes.json"), io::regime_report_json(report, prov).dump(2) + "\n");
  for (const auto& chart : report.charts) {
    std::ostringstream out;
    io::write_csv_provenance(out, prov);
    out << "year,cusum\n";
    for (std::size_t i = 0; i < chart.values.size(); ++i)
      out << report.years[i] << ',' << csv::format_double(chart.values[i]) << '\n';
    io::write_text_file(out_path(rc, "cusum_" + file_label(chart.transition) + ".csv"), out.str());
  }
}

void cmd_bayes(const RunConfig& rc, const BayesArgs& args, std::ostream& err) {
  const auto section = rc.section("bayes");
  const auto path = required_path(args.transactions, section, "transactions", "--transactions");
  const auto parsed = parse_transactions_file(path);
  for (const auto& w : parsed.warnings) warn(err, w);
  if (parsed.lots.empty()) throw io::FormatError("transactions", path + ": no transactions");

  int latest = std::numeric_limits<int>::min();
  for (const auto& lot : parsed.lots) latest = std::max(latest, lot.transactions.back().date.year);
  const int as_of = optional_value(args.as_of_year, section, "as_of_year").value_or(latest);
  const int horizon = optional_value(args.horizon, section, "horizon").value_or(7);
  if (horizon < 1) throw UsageError("--horizon must be >= 1");

  std::vector<std::string> names = args.categories;
  if (names.empty() && section.contains("categories")) names = section.at("categories").get<std::vector<std::string>>();
  if (names.empty()) names = {"B", "P"};
  std::vector<OwnerCategory> categories;
  for (const auto& n : names) {
    const auto c = parse_category(n);
    if (c == OwnerCategory::Permits) throw UsageError("bayes: Permits is not an owner category");
    if (c == OwnerCategory::Flippers || c == OwnerCategory::Adjacents)
      warn(err, "bayes: " + std::string(long_name(c)) + " rarely permit directly; the fitted pmf may be sparse");
    if (std::find(categories.begin(), categories.end(), c) == categories.end()) categories.push_back(c);
  }
  std::sort(categories.begin(), categories.end(), [](auto a, auto b) { return index(a) < index(b); });

  PmfFitOptions options;
  options.as_of_year = as_of;
  options.categorize = categorize_options(section);
  json short_names = json::array();
  for (auto c : categories) short_names.push_back(std::string(short_name(c)));
  const auto prov = provenance("bayes", {{"as_of_year", as_of}, {"horizon", horizon}, {"categories", short_names}},
                               rc.seed);

  std::array<std::vector<double>, 4> per_category;
  for (auto& v : per_category) v.assign(static_cast<std::size_t>(horizon), 0.0);
  for (auto c : categories) {
    const auto pmf = fit_pmf(parsed.lots, c, options);
    auto j = io::pmf_json(pmf);
    j["provenance"] = io::provenance_json(prov);
    io::write_text_file(out_path(rc, "pmf_" + std::string(short_name(c)) + ".json"), j.dump(2) + "\n");
    per_category[static_cast<std::size_t>(index(c))] =
        expected_category_permits(pmf, held_lots(parsed.lots, c, as_of, options.categorize), horizon);
  }
  const auto total = expected_total_permits(per_category);

  std::ostringstream out;
  io::write_csv_provenance(out, prov);
  out << "year";
  for (auto c : categories) out << ',' << long_name(c);
  out << ",total\n";
  for (int h = 0; h < horizon; ++h) {
    out << as_of + h + 1;
    for (auto c : categories)
      out << ',' << csv::format_double(per_category[static_cast<std::size_t>(index(c))][static_cast<std::size_t>(h)]);
    out << ',' << csv::format_double(total[static_cast<std::size_t>(h)]) << '\n';
  }
  io::write_text_file(out_path(rc, "expected_permits.csv"), out.str());
}

void cmd_synth(const RunConfig& rc, const SynthArgs& args, std::ostream&) {
  const auto section = rc.section("synth");
  json spec_j;
  if (args.spec) {
    spec_j = io::read_json_file(*args.spec);
  } else if (section.contains("spec")) {
    spec_j = inline_or_file(section.at("spec"));
  } else {
    throw UsageError("missing --spec");
  }
  auto spec = io::synth_spec_from_json(spec_j);
  if (rc.seed_explicit) spec.seed = rc.seed;
  int years = 10;
  if (spec_j.contains("years")) years = spec_j.at("years").get<int>();
  years = optional_value(args.years, section, "years").value_or(years);
  try {
    spec.check(years);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw io::FormatError("spec", e.what());
  }

  const auto output = simulate(spec, years);
  json effective = spec_j;
  effective["years"] = years;
  effective.erase("seed");
  const auto prov = provenance("synth", effective, spec.seed);

  std::ostringstream tx;
  io::write_csv_provenance(tx, prov);
  write_transactions(tx, output.lots);
  io::write_text_file(out_path(rc, "transactions.csv"), tx.str());
  io::write_text_file(out_path(rc, "truth.json"), io::synth_truth_json(spec, output, prov).dump(2) + "\n");
}

void cmd_report(const RunConfig& rc, const ReportArgs& args, std::ostream&) {
  const auto section = rc.section("report");
  const auto path = required_path(args.forecast, section, "forecast", "--forecast");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto rows = io::read_forecast(in);

  const io::ForecastRow* last_hist = nullptr;
  const io::ForecastRow* first_fc = nullptr;
  const io::ForecastRow* last_fc = nullptr;
  for (const auto& r : rows) {
    if (r.phase == Phase::Historical) last_hist = &r;
    if (r.phase == Phase::Forecast) {
      if (!first_fc) first_fc = &r;
      last_fc = &r;
    }
  }
  if (!last_hist || !first_fc) throw io::FormatError("forecast", path + ": needs historical and forecast rows");

  auto pct = [](const std::optional<double>& v) { return v ? json(100.0 * *v) : json(nullptr); };
  auto change = [&](const std::optional<double>& v) {
    if (!v || last_hist->permits <= 0.0) return json(nullptr);
    return json(100.0 * (*v - last_hist->permits) / last_hist->permits);
  };
  json report = {
      {"provenance", io::provenance_json(provenance("report", json::object(), rc.seed))},
      {"last_historical_year", last_hist->year},
      {"last_historical_permits", last_hist->permits},
      {"next_year",
       {{"year", first_fc->year},
        {"permits", first_fc->permits},
        {"permit_change_pct", change(first_fc->permits)},
        {"permit_change_pct_lo", change(first_fc->permits_lo)},
        {"permit_change_pct_hi", change(first_fc->permits_hi)}}},
      {"horizon_end",
       {{"year", last_fc->year},
        {"buildout_pct", 100.0 * last_fc->buildout},
        {"buildout_pct_lo", pct(last_fc->buildout_lo)},
        {"buildout_pct_hi", pct(last_fc->buildout_hi)}}}};
  io::write_text_file(out_path(rc, "report.json"), report.dump(2) + "\n");
}

namespace {

json error_record(int code, const std::string& kind, const std::string& message) {
  return {{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
}

int report_error(std::ostream& err, int code, json record) {
  err << record.dump() << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Master-planned community growth model"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "transactions.csv -> observations.csv");
  ingest_cmd->add_option("--transactions", ingest.transactions, "transactions CSV");
  ingest_cmd->add_option("--platted", ingest.platted, "platted lot count (default: lots seen)");
  ingest_cmd->add_option("--first-year", ingest.first_year, "first year to tally");
  ingest_cmd->add_option("--last-year", ingest.last_year, "last year to tally");

  EstimateArgs estimate;
  auto* estimate_cmd = app.add_subcommand("estimate", "observations.csv -> matrices.json, residuals.csv");
  estimate_cmd->add_option("--observations", estimate.observations, "observations CSV");
  estimate_cmd->add_option("--scenario", estimate.scenario, "constraint scenario JSON");

  ForecastArgs forecast;
  auto* forecast_cmd = app.add_subcommand("forecast", "matrices.json -> forecast.csv, forecast_matrices.json");
  forecast_cmd->add_option("--matrices", forecast.matrices, "estimated matrices JSON");
  forecast_cmd->add_option("--observations", forecast.observations, "observations CSV");
  forecast_cmd->add_option("--mc-runs", forecast.mc_runs, "Monte Carlo replicates (0 disables bands)");
  forecast_cmd->add_option("--horizon", forecast.horizon, "years to forecast");
  forecast_cmd->add_option("--threads", forecast.threads, "worker threads");

  RegimesArgs regimes;
  auto* regimes_cmd = app.add_subcommand("regimes", "matrices.json -> regimes.json, cusum_*.csv");
  regimes_cmd->add_option("--matrices", regimes.matrices, "estimated matrices JSON");
  regimes_cmd->add_option("--k-max", regimes.k_max, "largest cluster count tried");

  BayesArgs bayes;
  auto* bayes_cmd = app.add_subcommand("bayes", "transactions.csv -> expected_permits.csv, pmf_*.json");
  bayes_cmd->add_option("--transactions", bayes.transactions, "transactions CSV");
  bayes_cmd->add_option("--as-of", bayes.as_of_year, "year lots are held as of");
  bayes_cmd->add_option("--horizon", bayes.horizon, "years of expected permits");
  bayes_cmd->add_option("--category", bayes.categories, "F, B, P or A; repeatable");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "spec.json -> transactions.csv, truth.json");
  synth_cmd->add_option("--spec", synth.spec, "synthetic market spec JSON");
  synth_cmd->add_option("--years", synth.years, "years to simulate");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "forecast.csv -> report.json");
  report_cmd->add_option("--forecast", report.forecast, "forecast CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, kUsage, error_record(kUsage, "usage", e.what()));
  }

  try {
    RunConfig rc;
    if (config_path) rc.config = io::read_json_file(*config_path);
    if (!rc.config.is_object()) throw io::FormatError("config", "config: top level must be an object");
    if (seed) {
      rc.seed = *seed;
      rc.seed_explicit = true;
    } else if (rc.config.contains("seed")) {
      rc.seed = rc.config.at("seed").get<std::uint64_t>();
      rc.seed_explicit = true;
    }
    rc.out_dir = out_dir;

    if (ingest_cmd->parsed()) cmd_ingest(rc, ingest, err);
    if (estimate_cmd->parsed()) cmd_estimate(rc, estimate, err);
    if (forecast_cmd->parsed()) cmd_forecast(rc, forecast, err);
    if (regimes_cmd->parsed()) cmd_regimes(rc, regimes, err);
    if (bayes_cmd->parsed()) cmd_bayes(rc, bayes, err);
    if (synth_cmd->parsed()) cmd_synth(rc, synth, err);
    if (report_cmd->parsed()) cmd_report(rc, report, err);
    return kOk;
  } catch (const UsageError& e) {
    return report_error(err, kUsage, error_record(kUsage, "usage", e.what()));
  } catch (const InfeasibleError& e) {
    auto rec = error_record(kInfeasible, "infeasible", e.what());
    json rows = json::array();
    for (auto c : e.rows()) rows.push_back(std::string(short_name(c)));
    rec["error"]["rows"] = rows;
    if (e.year()) rec["error"]["year"] = *e.year();
    return report_error(err, kInfeasible, rec);
  } catch (const io::FormatError& e) {
    auto rec = error_record(kInputError, "format", e.what());
    rec["error"]["field"] = e.field();
    return report_error(err, kInputError, rec);
  } catch (const ParseError& e) {
    auto rec = error_record(kInputError, "parse", e.what());
    rec["error"]["rows"] = e.rows();
    return report_error(err, kInputError, rec);
  } catch (const ValidationError& e) {
    auto rec = error_record(kInputError, "validation", e.what());
    json violations = json::array();
    for (const auto& v : e.violations()) violations.push_back(v.describe());
    rec["error"]["violations"] = violations;
    return report_error(err, kInputError, rec);
  } catch (const DomainError& e) {
    return report_error(err, kDomainError, error_record(kDomainError, "domain", e.what()));
  } catch (const std::domain_error& e) {
    return report_error(err, kDomainError, error_record(kDomainError, "domain", e.what()));
  } catch (const json::exception& e) {
    return report_error(err, kInputError, error_record(kInputError, "format", e.what()));
  } catch (const std::invalid_argument& e) {
    return report_error(err, kInputError, error_record(kInputError, "invalid", e.what()));
  } catch (const std::exception& e) {
    return report_error(err, kInputError, error_record(kInputError, "io", e.what()));
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("mpcgrowth");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mpc::cli
