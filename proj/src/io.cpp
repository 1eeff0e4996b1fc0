#include "mpc/io.hpp"

#include "mpc/csv.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mpc::io {

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json provenance_json(const Provenance& p) {
  return {{"config_hash", p.config_hash}, {"seed", p.seed}};
}

void write_csv_provenance(std::ostream& out, const Provenance& p) {
  out << "# config_hash=" << p.config_hash << " seed=" << p.seed << '\n';
}

FormatError::FormatError(std::string field, const std::string& message)
    : std::runtime_error(message), field_(std::move(field)) {}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path);
}

namespace {

constexpr std::array<const char*, 14> kObservationColumns = {
    "year",     "flippers",       "builders",     "prospects", "adjacents",
    "permits",  "permits_issued", "custom_ratio", "residual",  "entry_f",
    "entry_b",  "entry_p",        "entry_a",      "entry_r"};

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + "." + key, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + "." + key, where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get_field<T>(j, key, where);
}

}  // namespace

void write_observations(std::ostream& out, const std::vector<AnnualObservation>& obs,
                        const Provenance& p) {
  write_csv_provenance(out, p);
  for (std::size_t c = 0; c < kObservationColumns.size(); ++c)
    out << (c ? "," : "") << kObservationColumns[c];
  out << '\n';
  for (const auto& o : obs) {
    out << o.year;
    for (int c = 0; c < kNumCategories; ++c) out << ',' << csv::format_double(o.category_counts.counts(c));
    out << ',' << csv::format_double(o.permits_issued) << ','
        << (o.custom_ratio ? csv::format_double(*o.custom_ratio) : "") << ',' << o.residual;
    for (int c = 0; c < kNumCategories; ++c) out << ',' << csv::format_double(o.entries(c));
    out << '\n';
  }
}

std::vector<AnnualObservation> read_observations(std::istream& in) {
  const auto header = csv::read_record(in);
  if (!header || header->size() < kObservationColumns.size())
    throw FormatError("observations.header", "observations: malformed header");
  for (std::size_t c = 0; c < kObservationColumns.size(); ++c) {
    if (csv::trim((*header)[c]) != kObservationColumns[c])
      throw FormatError("observations.header", std::string("observations: expected column '") +
                                                   kObservationColumns[c] + "'");
  }
  std::vector<AnnualObservation> out;
  std::size_t row = 0;
  while (auto rec = csv::read_record(in)) {
    ++row;
    if (rec->size() == 1 && csv::trim(rec->front()).empty()) continue;
    auto fail = [&](std::size_t col) {
      return FormatError(std::string("observations.") + kObservationColumns[col],
                         "observations: row " + std::to_string(row) + ": bad " +
                             kObservationColumns[col]);
    };
    if (rec->size() < kObservationColumns.size()) throw fail(rec->size());
    auto number = [&](std::size_t col) {
      const auto v = csv::parse_double((*rec)[col]);
      if (!v) throw fail(col);
      return *v;
    };
    AnnualObservation o;
    const auto year = csv::parse_long((*rec)[0]);
    if (!year) throw fail(0);
    o.year = static_cast<int>(*year);
    o.category_counts.year = o.year;
    for (int c = 0; c < kNumCategories; ++c) o.category_counts.counts(c) = number(1 + static_cast<std::size_t>(c));
    o.permits_issued = number(6);
    if (!csv::trim((*rec)[7]).empty()) o.custom_ratio = number(7);
    const auto residual = csv::parse_long((*rec)[8]);
    if (!residual) throw fail(8);
    o.residual = *residual;
    for (int c = 0; c < kNumCategories; ++c) o.entries(c) = number(9 + static_cast<std::size_t>(c));
    out.push_back(o);
  }
  return out;
}

std::vector<AnnualObservation> read_observations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_observations(in);
}

json matrix_json(const TransitionMatrixd& m) {
  json rows = json::array();
  for (int r = 0; r < kNumCategories; ++r) {
    json row = json::array();
    for (int c = 0; c < kNumCategories; ++c) row.push_back(m.entries(r, c));
    rows.push_back(row);
  }
  return {{"year", m.year}, {"entries", rows}};
}

TransitionMatrixd matrix_from_json(const json& j, const std::string& where) {
  TransitionMatrixd m;
  m.year = get_field<int>(j, "year", where);
  const auto rows = get_field<std::vector<std::vector<double>>>(j, "entries", where);
  if (rows.size() != kNumCategories)
    throw FormatError(where + ".entries", where + ": entries must be 5x5");
  for (int r = 0; r < kNumCategories; ++r) {
    if (rows[static_cast<std::size_t>(r)].size() != kNumCategories)
      throw FormatError(where + ".entries", where + ": entries must be 5x5");
    for (int c = 0; c < kNumCategories; ++c)
      m.entries(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

json matrices_json(const std::vector<TransitionMatrixd>& ms, const Provenance& p) {
  json arr = json::array();
  for (const auto& m : ms) arr.push_back(matrix_json(m));
  return {{"provenance", provenance_json(p)},
          {"categories", {"Flippers", "Builders", "Prospects", "Adjacents", "Permits"}},
          {"matrices", arr}};
}

std::vector<TransitionMatrixd> matrices_from_json(const json& j) {
  if (!j.contains("matrices") || !j.at("matrices").is_array())
    throw FormatError("matrices", "matrices.json: missing 'matrices' array");
  std::vector<TransitionMatrixd> out;
  std::size_t i = 0;
  for (const auto& m : j.at("matrices"))
    out.push_back(matrix_from_json(m, "matrices[" + std::to_string(i++) + "]"));
  return out;
}

ConstraintScenario scenario_from_json(const json& j) {
  ConstraintScenario s;
  if (j.contains("bounds")) {
    std::size_t i = 0;
    for (const auto& b : j.at("bounds")) {
      const std::string where = "scenario.bounds[" + std::to_string(i++) + "]";
      TransitionBound tb;
      try {
        tb.transition.from = parse_category(get_field<std::string>(b, "from", where));
        tb.transition.to = parse_category(get_field<std::string>(b, "to", where));
      } catch (const std::invalid_argument& e) {
        throw FormatError(where, where + ": " + e.what());
      }
      tb.year_start = get_or<int>(b, "year_start", -1000000, where);
      tb.year_end = get_or<int>(b, "year_end", 1000000, where);
      tb.lo = get_or<double>(b, "lo", 0.0, where);
      tb.hi = get_or<double>(b, "hi", 1.0, where);
      s.bounds.push_back(tb);
    }
  }
  if (j.contains("lambda") && !j.at("lambda").is_null()) s.lambda = get_field<double>(j, "lambda", "scenario");
  s.ratio_tolerance = get_or<double>(j, "ratio_tol", s.ratio_tolerance, "scenario");
  s.ratio_weight = get_or<double>(j, "ratio_weight", s.ratio_weight, "scenario");
  s.use_custom_ratio = get_or<bool>(j, "use_custom_ratio", s.use_custom_ratio, "scenario");
  s.max_iterations = get_or<int>(j, "max_iterations", s.max_iterations, "scenario");
  s.step_tolerance = get_or<double>(j, "step_tolerance", s.step_tolerance, "scenario");
  s.relax = get_or<double>(j, "relax", s.relax, "scenario");
  try {
    s.check();
  } catch (const std::invalid_argument& e) {
    throw FormatError("scenario", e.what());
  }
  return s;
}

json scenario_json(const ConstraintScenario& s) {
  json bounds = json::array();
  for (const auto& b : s.bounds) {
    bounds.push_back({{"from", std::string(short_name(b.transition.from))},
                      {"to", std::string(short_name(b.transition.to))},
                      {"year_start", b.year_start},
                      {"year_end", b.year_end},
                      {"lo", b.lo},
                      {"hi", b.hi}});
  }
  json j = {{"bounds", bounds},
            {"ratio_tol", s.ratio_tolerance},
            {"ratio_weight", s.ratio_weight},
            {"use_custom_ratio", s.use_custom_ratio},
            {"max_iterations", s.max_iterations},
            {"step_tolerance", s.step_tolerance},
            {"relax", s.relax}};
  j["lambda"] = s.lambda ? json(*s.lambda) : json(nullptr);
  return j;
}

ForecastSettings forecast_settings_from_json(const json& j, ForecastSettings base) {
  const std::string w = "forecast";
  base.alpha = get_or<double>(j, "alpha", base.alpha, w);
  base.horizon = get_or<int>(j, "horizon", base.horizon, w);
  base.noise_sd = get_or<double>(j, "noise_sd", base.noise_sd, w);
  base.scale_factor = get_or<double>(j, "scale_factor", base.scale_factor, w);
  base.mc_runs = get_or<int>(j, "mc_runs", base.mc_runs, w);
  base.mc_sd_fraction = get_or<double>(j, "mc_sd_fraction", base.mc_sd_fraction, w);
  base.history_window = get_or<int>(j, "history_window", base.history_window, w);
  base.threads = get_or<int>(j, "threads", base.threads, w);
  base.seed = get_or<std::uint64_t>(j, "seed", base.seed, w);
  try {
    base.check();
  } catch (const std::invalid_argument& e) {
    throw FormatError(w, e.what());
  }
  return base;
}

void write_forecast(std::ostream& out, const ForecastSeries& series, const Provenance& p) {
  bool with_ci = false;
  for (const auto& pt : series.points) with_ci = with_ci || pt.permits_lo.has_value();
  write_csv_provenance(out, p);
  out << (with_ci ? "year,phase,permits,permits_lo,permits_hi,buildout,buildout_lo,buildout_hi\n"
                  : "year,phase,permits,buildout\n");
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
  for (const auto& pt : series.points) {
    out << pt.year << ',' << (pt.phase == Phase::Historical ? "historical" : "forecast") << ','
        << csv::format_double(pt.permits);
    if (with_ci) out << ',' << opt(pt.permits_lo) << ',' << opt(pt.permits_hi);
    out << ',' << csv::format_double(pt.buildout);
    if (with_ci) out << ',' << opt(pt.buildout_lo) << ',' << opt(pt.buildout_hi);
    out << '\n';
  }
}

std::vector<ForecastRow> read_forecast(std::istream& in) {
  const auto header = csv::read_record(in);
  if (!header) throw FormatError("forecast.header", "forecast: empty file");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) col[std::string(csv::trim((*header)[i]))] = i;
  for (const char* need : {"year", "phase", "permits", "buildout"}) {
    if (!col.count(need))
      throw FormatError(std::string("forecast.") + need, std::string("forecast: missing column '") + need + "'");
  }
  std::vector<ForecastRow> rows;
  while (auto rec = csv::read_record(in)) {
    if (rec->size() == 1 && csv::trim(rec->front()).empty()) continue;
    auto cell = [&](const char* name) -> std::optional<double> {
      const auto it = col.find(name);
      if (it == col.end() || it->second >= rec->size()) return std::nullopt;
      return csv::parse_double((*rec)[it->second]);
    };
    ForecastRow r;
    const auto year = cell("year");
    const auto permits = cell("permits");
    const auto buildout = cell("buildout");
    if (!year || !permits || !buildout) throw FormatError("forecast", "forecast: malformed row");
    r.year = static_cast<int>(*year);
    r.phase = csv::trim((*rec)[col["phase"]]) == "historical" ? Phase::Historical : Phase::Forecast;
    r.permits = *permits;
    r.buildout = *buildout;
    r.permits_lo = cell("permits_lo");
    r.permits_hi = cell("permits_hi");
    r.buildout_lo = cell("buildout_lo");
    r.buildout_hi = cell("buildout_hi");
    rows.push_back(r);
  }
  return rows;
}

json pmf_json(const TimeToPermitPMF& pmf) {
  json mass = json::array();
  for (const auto& [offset, p] : pmf.mass) mass.push_back({offset, p});
  return {{"category", std::string(long_name(pmf.category))}, {"mass", mass}};
}

TimeToPermitPMF pmf_from_json(const json& j) {
  TimeToPermitPMF pmf;
  try {
    pmf.category = parse_category(get_field<std::string>(j, "category", "pmf"));
  } catch (const std::invalid_argument& e) {
    throw FormatError("pmf.category", e.what());
  }
  for (const auto& pair : get_field<std::vector<std::pair<int, double>>>(j, "mass", "pmf"))
    pmf.mass[pair.first] += pair.second;
  try {
    pmf.check();
  } catch (const std::invalid_argument& e) {
    throw FormatError("pmf.mass", e.what());
  }
  return pmf;
}

namespace {

TransitionMatrixd bare_matrix(const json& rows, const std::string& where) {
  return matrix_from_json(json{{"year", 0}, {"entries", rows}}, where);
}

}  // namespace

SynthSpec synth_spec_from_json(const json& j) {
  const std::string w = "synth";
  SynthSpec s;
  const auto initial = get_field<json>(j, "initial", w);
  long sum = 0;
  for (auto c : kAllCategories) {
    long v = 0;
    for (auto key : {std::string(short_name(c)), std::string(long_name(c))})
      if (initial.contains(key)) v = initial.at(key).get<long>();
    s.initial[static_cast<std::size_t>(index(c))] = v;
    sum += v;
  }
  s.platted = get_or<long>(j, "platted", sum, w);
  s.start_year = get_or<int>(j, "start_year", s.start_year, w);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed, w);
  s.builder_pool = get_or<int>(j, "builder_pool", s.builder_pool, w);
  if (j.contains("matrix")) s.matrix = bare_matrix(j.at("matrix"), w + ".matrix");
  if (j.contains("regime_changes")) {
    for (const auto& rc : j.at("regime_changes"))
      s.regime_changes[get_field<int>(rc, "year", w + ".regime_changes")] =
          bare_matrix(get_field<json>(rc, "matrix", w + ".regime_changes"), w + ".regime_changes");
  }
  if (j.contains("per_year")) {
    for (const auto& m : j.at("per_year")) s.per_year.push_back(bare_matrix(m, w + ".per_year"));
  }
  return s;
}

json synth_truth_json(const SynthSpec& spec, const SynthOutput& out, const Provenance& p) {
  json labels = json::object();
  for (std::size_t l = 0; l < out.lots.size(); ++l) {
    std::string seq;
    for (auto c : out.labels[l]) seq += short_name(c);
    labels[out.lots[l].lot_id] = seq;
  }
  json obs = json::array();
  for (const auto& o : out.observations) {
    json counts = json::array();
    for (int c = 0; c < kNumCategories; ++c) counts.push_back(o.category_counts.counts(c));
    obs.push_back({{"year", o.year},
                   {"counts", counts},
                   {"permits_issued", o.permits_issued},
                   {"custom_ratio", o.custom_ratio ? json(*o.custom_ratio) : json(nullptr)}});
  }
  json initial = json::object();
  for (auto c : kAllCategories) initial[std::string(short_name(c))] = spec.initial[static_cast<std::size_t>(index(c))];
  return {{"provenance", provenance_json(p)},
          {"platted", spec.platted},
          {"start_year", spec.start_year},
          {"initial", initial},
          {"true_matrices", matrices_json(out.true_matrices, p)["matrices"]},
          {"observations", obs},
          {"labels", labels}};
}

json regime_report_json(const RegimeReport& r, const Provenance& p) {
  json criteria = json::array();
  for (std::size_t i = 0; i < r.ks.size(); ++i)
    criteria.push_back({{"k", r.ks[i]}, {"aic", r.criteria[i].aic}, {"bic", r.criteria[i].bic}});
  json cusum_cp = json::array();
  for (const auto& c : r.charts) {
    cusum_cp.push_back({{"transition", transition_label(c.transition)},
                        {"changepoint_year", c.changepoint_year ? json(*c.changepoint_year) : json(nullptr)}});
  }
  return {{"provenance", provenance_json(p)},
          {"years", r.years},
          {"labels", r.labels},
          {"changepoints", r.changepoints},
          {"criteria", criteria},
          {"chosen_k", r.chosen_k},
          {"cusum_changepoints", cusum_cp},
          {"note", r.note}};
}

}  // namespace mpc::io
