#ifndef MPC_INGESTION_HPP
#define MPC_INGESTION_HPP

#include "mpc/core.hpp"

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpc {

struct Date {
  int year = 0;
  int month = 1;
  int day = 1;

  friend auto operator<=>(const Date&, const Date&) = default;

  /// Days since 1970-01-01.
  long days() const;
  std::string iso() const;
};

/// Parses YYYY-MM-DD, optionally followed by a 'T' time suffix.
std::optional<Date> parse_date(std::string_view text);

struct TransactionRecord {
  std::string lot_id;
  Date date;
  std::optional<double> price;
  std::string buyer_id;
  bool buyer_is_contractor = false;
  std::string instrument;
  // Evidence about the buyer at the time of this transaction.
  bool adjacent_to_owner_residence = false;
  int owner_lot_count = 1;
  std::size_t row = 0;  // 1-based data row in the source file
};

struct LotHistory {
  std::string lot_id;
  std::vector<TransactionRecord> transactions;  // sorted by date, stable
  std::optional<int> permit_year;
  std::optional<int> built_year;

  /// Recorded permit year, or built_year - 1 when only the build is known.
  std::optional<int> effective_permit_year() const;
  bool permitted_by(int year) const;

  /// The transaction that made the current owner as of the end of `year`.
  const TransactionRecord* owner_as_of(int year) const;

  bool adjacent_to_owner_residence() const;
  int owner_lot_count() const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::vector<std::size_t> rows = {});
  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ParseResult {
  std::vector<LotHistory> lots;  // ordered by lot_id
  std::vector<std::string> warnings;
};

/// Reads transactions.csv. Rows that fail to parse are collected and reported
/// together in one ParseError naming their data-row numbers.
ParseResult parse_transactions(std::istream& in);
ParseResult parse_transactions_file(const std::string& path);

/// Writes lots in the transactions.csv schema read by parse_transactions.
void write_transactions(std::ostream& out, const std::vector<LotHistory>& lots);

struct CategorizeOptions {
  /// Multi-lot owners whose median holding period is at most this many years
  /// are Flippers.
  double flipper_max_median_holding_years = 2.0;
  /// A sale within this many years of completion marks the seller a Builder.
  int builder_sale_window_years = 1;
};

/// Every completed sale per buyer, for the Flipper holding-period rule.
class OwnerIndex {
 public:
  OwnerIndex() = default;
  explicit OwnerIndex(const std::vector<LotHistory>& lots);

  /// Median holding period (years) over sales by `buyer_id` completed no
  /// later than `year`; nullopt when the buyer has not sold anything yet.
  std::optional<double> median_holding_years(const std::string& buyer_id,
                                             int year) const;

 private:
  struct Sale {
    int year;
    double holding_years;
  };
  std::map<std::string, std::vector<Sale>> sales_;
};

/// Category of whoever owns `lot` at the end of `year`, ignoring permits.
/// Rules in priority order: Builder, Adjacent, Flipper, Prospect.
/// Throws DomainError when nobody owns the lot yet.
OwnerCategory categorize_owner(const LotHistory& lot, int year,
                               const OwnerIndex& owners,
                               const CategorizeOptions& options = {});

/// Owner category of an unpermitted lot. Throws DomainError when the lot is
/// already permitted at or before `as_of_year`.
OwnerCategory categorize(const LotHistory& lot, int as_of_year,
                         const OwnerIndex& owners,
                         const CategorizeOptions& options = {});
OwnerCategory categorize(const LotHistory& lot, int as_of_year,
                         const CategorizeOptions& options = {});

struct AnnualObservation {
  int year = 0;
  StateVectord category_counts;  // unpermitted by category + cumulative permits
  double permits_issued = 0.0;
  std::optional<double> custom_ratio;
  /// Platted lots never sold by the end of the year; not part of the state.
  long residual = 0;
  /// Lots that left the unsold residual during this year, by category.
  CategoryVector<double> entries = CategoryVector<double>::Zero();
};

std::vector<AnnualObservation> annual_observations(
    const std::vector<LotHistory>& lots, int first_year, int last_year,
    long platted, const CategorizeOptions& options = {});

/// Custom / (custom + spec) among houses built in `year`: custom when the
/// permit holder was a Prospect, spec when a Builder.
std::optional<double> custom_spec_ratio(const std::vector<LotHistory>& lots,
                                        int year, const OwnerIndex& owners,
                                        const CategorizeOptions& options = {});
std::optional<double> custom_spec_ratio(const std::vector<LotHistory>& lots,
                                        int year,
                                        const CategorizeOptions& options = {});

}  // namespace mpc

#endif  // MPC_INGESTION_HPP
