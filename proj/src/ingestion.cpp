#include "mpc/ingestion.hpp"

#include "mpc/csv.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

namespace mpc {

long Date::days() const {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  return static_cast<long>(sys_days{ymd}.time_since_epoch().count());
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::optional<Date> parse_date(std::string_view text) {
  text = csv::trim(text);
  if (auto t = text.find('T'); t != std::string_view::npos) text = text.substr(0, t);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto y = csv::parse_long(text.substr(0, 4));
  auto m = csv::parse_long(text.substr(5, 2));
  auto d = csv::parse_long(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{
      std::chrono::year{static_cast<int>(*y)},
      std::chrono::month{static_cast<unsigned>(*m)},
      std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{static_cast<int>(*y), static_cast<int>(*m), static_cast<int>(*d)};
}

std::optional<int> LotHistory::effective_permit_year() const {
  if (permit_year) return permit_year;
  if (built_year) return *built_year - 1;
  return std::nullopt;
}

bool LotHistory::permitted_by(int year) const {
  const auto p = effective_permit_year();
  return p && *p <= year;
}

const TransactionRecord* LotHistory::owner_as_of(int year) const {
  const TransactionRecord* owner = nullptr;
  for (const auto& t : transactions) {
    if (t.date.year > year) break;
    owner = &t;
  }
  return owner;
}

bool LotHistory::adjacent_to_owner_residence() const {
  return !transactions.empty() && transactions.back().adjacent_to_owner_residence;
}

int LotHistory::owner_lot_count() const {
  return transactions.empty() ? 0 : transactions.back().owner_lot_count;
}

ParseError::ParseError(std::string message, std::vector<std::size_t> rows)
    : std::runtime_error(std::move(message)), rows_(std::move(rows)) {}

namespace {

enum Column {
  kLotId,
  kDate,
  kPrice,
  kBuyerId,
  kContractor,
  kInstrument,
  kAdjacent,
  kOwnerLotCount,
  kPermitYear,
  kBuiltYear,
  kColumnCount
};

constexpr std::array<std::string_view, kColumnCount> kColumnNames = {
    "lot_id",   "date",       "price",
    "buyer_id", "buyer_is_contractor", "instrument",
    "adjacent_to_owner_residence", "owner_lot_count", "permit_year",
    "built_year"};

constexpr bool is_optional_column(int c) { return c == kPermitYear || c == kBuiltYear; }

std::optional<bool> parse_flag(std::string_view s) {
  s = csv::trim(s);
  if (s.empty() || s == "0" || s == "false" || s == "FALSE" || s == "no") return false;
  if (s == "1" || s == "true" || s == "TRUE" || s == "yes") return true;
  return std::nullopt;
}

struct RowError {
  std::size_t row;
  std::string what;
};

}  // namespace

ParseResult parse_transactions(std::istream& in) {
  auto header = csv::read_record(in);
  if (!header) throw ParseError("malformed header: input is empty");
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0)
    header->front().erase(0, 3);

  std::array<int, kColumnCount> position;
  position.fill(-1);
  for (std::size_t i = 0; i < header->size(); ++i) {
    const auto name = csv::trim((*header)[i]);
    for (int c = 0; c < kColumnCount; ++c) {
      if (name == kColumnNames[static_cast<std::size_t>(c)]) {
        if (position[static_cast<std::size_t>(c)] >= 0)
          throw ParseError("malformed header: duplicate column '" + std::string(name) + "'");
        position[static_cast<std::size_t>(c)] = static_cast<int>(i);
      }
    }
  }
  for (int c = 0; c < kColumnCount; ++c) {
    if (position[static_cast<std::size_t>(c)] < 0 && !is_optional_column(c)) {
      throw ParseError("malformed header: missing column '" +
                       std::string(kColumnNames[static_cast<std::size_t>(c)]) + "'");
    }
  }

  ParseResult result;
  std::vector<RowError> errors;
  std::map<std::string, LotHistory> lots;
  std::set<std::tuple<std::string, Date, std::string>> seen;

  std::size_t row = 0;
  while (auto record = csv::read_record(in)) {
    ++row;
    if (record->size() == 1 && csv::trim(record->front()).empty()) continue;
    auto field = [&](int c) -> std::string_view {
      const int p = position[static_cast<std::size_t>(c)];
      if (p < 0 || static_cast<std::size_t>(p) >= record->size()) return {};
      return csv::trim((*record)[static_cast<std::size_t>(p)]);
    };

    TransactionRecord t;
    t.row = row;
    t.lot_id = std::string(field(kLotId));
    if (t.lot_id.empty()) {
      errors.push_back({row, "empty lot_id"});
      continue;
    }
    const auto date = parse_date(field(kDate));
    if (!date) {
      errors.push_back({row, "unparseable date '" + std::string(field(kDate)) + "'"});
      continue;
    }
    t.date = *date;
    if (!field(kPrice).empty()) {
      t.price = csv::parse_double(field(kPrice));
      if (!t.price) {
        errors.push_back({row, "bad price '" + std::string(field(kPrice)) + "'"});
        continue;
      }
    }
    t.buyer_id = std::string(field(kBuyerId));
    t.instrument = std::string(field(kInstrument));
    const auto contractor = parse_flag(field(kContractor));
    const auto adjacent = parse_flag(field(kAdjacent));
    if (!contractor || !adjacent) {
      errors.push_back({row, "bad 0/1 flag"});
      continue;
    }
    t.buyer_is_contractor = *contractor;
    t.adjacent_to_owner_residence = *adjacent;
    if (!field(kOwnerLotCount).empty()) {
      const auto n = csv::parse_long(field(kOwnerLotCount));
      if (!n || *n < 1) {
        errors.push_back({row, "bad owner_lot_count '" + std::string(field(kOwnerLotCount)) + "'"});
        continue;
      }
      t.owner_lot_count = static_cast<int>(*n);
    }
    std::optional<int> permit_year, built_year;
    bool bad_year = false;
    for (auto [col, out] : {std::pair{kPermitYear, &permit_year}, std::pair{kBuiltYear, &built_year}}) {
      if (field(col).empty()) continue;
      const auto y = csv::parse_long(field(col));
      if (!y) {
        errors.push_back({row, "bad " + std::string(kColumnNames[static_cast<std::size_t>(col)])});
        bad_year = true;
        break;
      }
      *out = static_cast<int>(*y);
    }
    if (bad_year) continue;
    if (permit_year && built_year && *permit_year > *built_year) {
      errors.push_back({row, "permit_year after built_year"});
      continue;
    }

    if (!seen.emplace(t.lot_id, t.date, t.buyer_id).second) {
      result.warnings.push_back("row " + std::to_string(row) + ": duplicate transaction for lot " +
                                t.lot_id + " on " + t.date.iso() + ", keeping the first");
      continue;
    }

    auto& lot = lots[t.lot_id];
    lot.lot_id = t.lot_id;
    for (auto [value, slot, name] : {std::tuple{permit_year, &lot.permit_year, "permit_year"},
                                     std::tuple{built_year, &lot.built_year, "built_year"}}) {
      if (!value) continue;
      if (*slot && **slot != *value) {
        result.warnings.push_back("row " + std::to_string(row) + ": conflicting " + name +
                                  " for lot " + t.lot_id + ", keeping " +
                                  std::to_string(**slot));
      } else {
        *slot = value;
      }
    }
    lot.transactions.push_back(std::move(t));
  }

  if (!errors.empty()) {
    std::string msg = "rejected rows:";
    std::vector<std::size_t> rows;
    for (const auto& e : errors) {
      msg += " row " + std::to_string(e.row) + " (" + e.what + ");";
      rows.push_back(e.row);
    }
    msg.pop_back();
    throw ParseError(msg, std::move(rows));
  }

  result.lots.reserve(lots.size());
  for (auto& [id, lot] : lots) {
    std::stable_sort(lot.transactions.begin(), lot.transactions.end(),
                     [](const auto& a, const auto& b) { return a.date < b.date; });
    if (lot.permit_year && lot.built_year && *lot.permit_year > *lot.built_year)
      throw ParseError("lot " + id + ": permit_year after built_year");
    result.lots.push_back(std::move(lot));
  }
  return result;
}

ParseResult parse_transactions_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_transactions(in);
}

void write_transactions(std::ostream& out, const std::vector<LotHistory>& lots) {
  for (std::size_t c = 0; c < kColumnNames.size(); ++c)
    out << (c ? "," : "") << kColumnNames[c];
  out << '\n';
  for (const auto& lot : lots) {
    for (const auto& t : lot.transactions) {
      out << csv::escape(lot.lot_id) << ',' << t.date.iso() << ','
          << (t.price ? csv::format_double(*t.price) : "") << ',' << csv::escape(t.buyer_id)
          << ',' << (t.buyer_is_contractor ? 1 : 0) << ',' << csv::escape(t.instrument) << ','
          << (t.adjacent_to_owner_residence ? 1 : 0) << ',' << t.owner_lot_count << ','
          << (lot.permit_year ? std::to_string(*lot.permit_year) : "") << ','
          << (lot.built_year ? std::to_string(*lot.built_year) : "") << '\n';
    }
  }
}

OwnerIndex::OwnerIndex(const std::vector<LotHistory>& lots) {
  for (const auto& lot : lots) {
    for (std::size_t i = 0; i + 1 < lot.transactions.size(); ++i) {
      const auto& bought = lot.transactions[i];
      const auto& sold = lot.transactions[i + 1];
      const double held = static_cast<double>(sold.date.days() - bought.date.days()) / 365.25;
      sales_[bought.buyer_id].push_back({sold.date.year, held});
    }
  }
}

std::optional<double> OwnerIndex::median_holding_years(const std::string& buyer_id,
                                                       int year) const {
  const auto it = sales_.find(buyer_id);
  if (it == sales_.end()) return std::nullopt;
  std::vector<double> held;
  for (const auto& s : it->second)
    if (s.year <= year) held.push_back(s.holding_years);
  if (held.empty()) return std::nullopt;
  std::sort(held.begin(), held.end());
  const std::size_t n = held.size();
  return n % 2 ? held[n / 2] : 0.5 * (held[n / 2 - 1] + held[n / 2]);
}

OwnerCategory categorize_owner(const LotHistory& lot, int year, const OwnerIndex& owners,
                               const CategorizeOptions& options) {
  const TransactionRecord* owner = lot.owner_as_of(year);
  if (!owner) {
    throw DomainError("lot " + lot.lot_id + " has no owner by " + std::to_string(year));
  }

  if (owner->buyer_is_contractor) return OwnerCategory::Builders;
  if (lot.built_year) {
    // Sold shortly before or after the house was completed.
    const auto next = static_cast<std::size_t>(owner - lot.transactions.data()) + 1;
    if (next < lot.transactions.size() &&
        std::abs(lot.transactions[next].date.year - *lot.built_year) <=
            options.builder_sale_window_years) {
      return OwnerCategory::Builders;
    }
  }
  if (owner->adjacent_to_owner_residence) return OwnerCategory::Adjacents;
  if (owner->owner_lot_count >= 2) {
    const auto median = owners.median_holding_years(owner->buyer_id, year);
    if (!median || *median <= options.flipper_max_median_holding_years)
      return OwnerCategory::Flippers;
  }
  return OwnerCategory::Prospects;
}

OwnerCategory categorize(const LotHistory& lot, int as_of_year, const OwnerIndex& owners,
                         const CategorizeOptions& options) {
  if (lot.permitted_by(as_of_year)) {
    throw DomainError("lot " + lot.lot_id + " was permitted in " +
                      std::to_string(*lot.effective_permit_year()) + ", not unpermitted as of " +
                      std::to_string(as_of_year));
  }
  return categorize_owner(lot, as_of_year, owners, options);
}

OwnerCategory categorize(const LotHistory& lot, int as_of_year, const CategorizeOptions& options) {
  return categorize(lot, as_of_year, OwnerIndex({lot}), options);
}

std::optional<double> custom_spec_ratio(const std::vector<LotHistory>& lots, int year,
                                        const OwnerIndex& owners,
                                        const CategorizeOptions& options) {
  int custom = 0;
  int spec = 0;
  for (const auto& lot : lots) {
    if (!lot.built_year || *lot.built_year != year) continue;
    const auto permit = lot.effective_permit_year();
    if (!lot.owner_as_of(*permit)) continue;
    switch (categorize_owner(lot, *permit, owners, options)) {
      case OwnerCategory::Prospects: ++custom; break;
      case OwnerCategory::Builders: ++spec; break;
      default: break;
    }
  }
  if (custom + spec == 0) return std::nullopt;
  return static_cast<double>(custom) / static_cast<double>(custom + spec);
}

std::optional<double> custom_spec_ratio(const std::vector<LotHistory>& lots, int year,
                                        const CategorizeOptions& options) {
  return custom_spec_ratio(lots, year, OwnerIndex(lots), options);
}

std::vector<AnnualObservation> annual_observations(const std::vector<LotHistory>& lots,
                                                   int first_year, int last_year, long platted,
                                                   const CategorizeOptions& options) {
  if (first_year > last_year)
    throw std::invalid_argument("annual_observations: empty year range");
  if (platted < static_cast<long>(lots.size())) {
    throw std::invalid_argument("annual_observations: platted (" + std::to_string(platted) +
                                ") is below the number of lots (" +
                                std::to_string(lots.size()) + ")");
  }

  const OwnerIndex owners(lots);
  // -1 marks a lot outside the state (still unsold).
  auto state_of = [&](const LotHistory& lot, int year) -> int {
    if (lot.permitted_by(year)) return index(OwnerCategory::Permits);
    if (!lot.owner_as_of(year)) return -1;
    return index(categorize_owner(lot, year, owners, options));
  };

  std::vector<AnnualObservation> out;
  out.reserve(static_cast<std::size_t>(last_year - first_year + 1));
  for (int year = first_year; year <= last_year; ++year) {
    AnnualObservation obs;
    obs.year = year;
    obs.category_counts.year = year;
    long in_state = 0;
    for (const auto& lot : lots) {
      const int now = state_of(lot, year);
      if (now < 0) continue;
      ++in_state;
      obs.category_counts.counts(now) += 1.0;
      if (state_of(lot, year - 1) < 0) obs.entries(now) += 1.0;
      if (const auto p = lot.effective_permit_year(); p && *p == year) obs.permits_issued += 1.0;
    }
    obs.residual = platted - in_state;
    obs.custom_ratio = custom_spec_ratio(lots, year, owners, options);
    out.push_back(std::move(obs));
  }
  return out;
}

}  // namespace mpc
