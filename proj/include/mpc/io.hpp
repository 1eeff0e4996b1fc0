#ifndef MPC_IO_HPP
#define MPC_IO_HPP

// File formats shared by the command-line stages.
//
//   observations.csv  year,flippers,builders,prospects,adjacents,permits,
//                     permits_issued,custom_ratio,residual,entry_f,...,entry_r
//   matrices.json     {"provenance": {...}, "matrices": [{"year", "entries"}]}
//   scenario.json     {"bounds": [{from,to,year_start,year_end,lo,hi}],
//                      "lambda", "ratio_tol", ...}
//   forecast.csv      year,phase,permits[,permits_lo,permits_hi],buildout[,...]
//   pmf.json          {"category", "mass": [[offset, prob], ...]}
//
// CSV outputs start with a "# config_hash=... seed=..." comment line; JSON
// outputs carry the same values under "provenance".

#include "mpc/bayes.hpp"
#include "mpc/estimation.hpp"
#include "mpc/forecast.hpp"
#include "mpc/ingestion.hpp"
#include "mpc/regime.hpp"
#include "mpc/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mpc::io {

using nlohmann::json;

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// FNV-1a over the compact dump of `config`, as 16 hex digits.
std::string config_hash(const json& config);

json provenance_json(const Provenance& p);
void write_csv_provenance(std::ostream& out, const Provenance& p);

/// Malformed input: names the file and field at fault.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

void write_observations(std::ostream& out, const std::vector<AnnualObservation>& obs,
                        const Provenance& p);
std::vector<AnnualObservation> read_observations(std::istream& in);
std::vector<AnnualObservation> read_observations_file(const std::string& path);

json matrix_json(const TransitionMatrixd& m);
TransitionMatrixd matrix_from_json(const json& j, const std::string& where);
json matrices_json(const std::vector<TransitionMatrixd>& ms, const Provenance& p);
std::vector<TransitionMatrixd> matrices_from_json(const json& j);

ConstraintScenario scenario_from_json(const json& j);
json scenario_json(const ConstraintScenario& s);

/// Overlays the keys present in `j` onto `base`.
ForecastSettings forecast_settings_from_json(const json& j, ForecastSettings base = {});

void write_forecast(std::ostream& out, const ForecastSeries& series, const Provenance& p);

struct ForecastRow {
  int year = 0;
  Phase phase = Phase::Forecast;
  double permits = 0.0;
  double buildout = 0.0;
  std::optional<double> permits_lo, permits_hi, buildout_lo, buildout_hi;
};
std::vector<ForecastRow> read_forecast(std::istream& in);

json pmf_json(const TimeToPermitPMF& pmf);
TimeToPermitPMF pmf_from_json(const json& j);

SynthSpec synth_spec_from_json(const json& j);
json synth_truth_json(const SynthSpec& spec, const SynthOutput& out, const Provenance& p);

json regime_report_json(const RegimeReport& r, const Provenance& p);

}  // namespace mpc::io

#endif  // MPC_IO_HPP
