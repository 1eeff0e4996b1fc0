#ifndef MPC_CLI_HPP
#define MPC_CLI_HPP

// Subcommands of the mpcgrowth tool. Each command reads files, writes files
// into the output directory and returns an exit code:
//
//   0 ok, 1 usage, 2 missing or ill-formed input, 3 infeasible estimation,
//   4 domain error (e.g. categorizing an already-permitted lot).
//
// Failures print a single JSON error record on the error stream.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mpc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInputError = 2,
  kInfeasible = 3,
  kDomainError = 4,
};

struct RunConfig {
  nlohmann::json config = nlohmann::json::object();  // contents of --config, or {}
  std::uint64_t seed = 0;
  bool seed_explicit = false;  // from --seed or the config, not defaulted
  std::string out_dir = ".";

  /// Section `name` of the config, or an empty object.
  nlohmann::json section(const std::string& name) const;
};

struct IngestArgs {
  std::string transactions;
  std::optional<long> platted;
  std::optional<int> first_year;
  std::optional<int> last_year;
};

struct EstimateArgs {
  std::string observations;
  std::optional<std::string> scenario;
};

struct ForecastArgs {
  std::string matrices;
  std::string observations;
  std::optional<int> mc_runs;
  std::optional<int> horizon;
  std::optional<int> threads;
};

struct RegimesArgs {
  std::string matrices;
  std::optional<int> k_max;
};

struct BayesArgs {
  std::string transactions;
  std::optional<int> as_of_year;
  std::optional<int> horizon;
  std::vector<std::string> categories;
};

struct SynthArgs {
  std::optional<std::string> spec;
  std::optional<int> years;
};

struct ReportArgs {
  std::string forecast;
};

// Each command throws on failure; run() maps exceptions to exit codes.
void cmd_ingest(const RunConfig& rc, const IngestArgs& args, std::ostream& err);
void cmd_estimate(const RunConfig& rc, const EstimateArgs& args, std::ostream& err);
void cmd_forecast(const RunConfig& rc, const ForecastArgs& args, std::ostream& err);
void cmd_regimes(const RunConfig& rc, const RegimesArgs& args, std::ostream& err);
void cmd_bayes(const RunConfig& rc, const BayesArgs& args, std::ostream& err);
void cmd_synth(const RunConfig& rc, const SynthArgs& args, std::ostream& err);
void cmd_report(const RunConfig& rc, const ReportArgs& args, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mpc::cli

#endif  // MPC_CLI_HPP
