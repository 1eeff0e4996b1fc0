#include "mpc/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpc {

void TimeToPermitPMF::check() const {
  double sum = 0.0;
  for (const auto& [offset, p] : mass) {
    if (offset < 0) throw std::invalid_argument("pmf: negative offset");
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("pmf: masses must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("pmf: masses sum to " + std::to_string(sum) + ", not 1");
}

double TimeToPermitPMF::at(int offset) const {
  const auto it = mass.find(offset);
  return it == mass.end() ? 0.0 : it->second;
}

std::map<int, double> posterior(const TimeToPermitPMF& pmf, int years_held) {
  pmf.check();
  if (years_held < 0) throw std::invalid_argument("posterior: years held must be >= 0");
  double survival = 0.0;
  for (auto it = pmf.mass.upper_bound(years_held); it != pmf.mass.end(); ++it) survival += it->second;
  if (!(survival > 0.0)) {
    throw DomainError("posterior: lot held " + std::to_string(years_held) +
                      " years is beyond the distribution's support");
  }
  std::map<int, double> out;
  for (auto it = pmf.mass.upper_bound(years_held); it != pmf.mass.end(); ++it)
    out.emplace(it->first - years_held, it->second / survival);
  return out;
}

std::vector<double> expected_category_permits(const TimeToPermitPMF& pmf,
                                              const std::vector<HeldLot>& lots, int horizon) {
  if (horizon < 0) throw std::invalid_argument("expected_category_permits: negative horizon");
  std::vector<double> out(static_cast<std::size_t>(horizon), 0.0);
  for (const auto& lot : lots) {
    if (lot.category != pmf.category) {
      throw std::invalid_argument("expected_category_permits: lot category " +
                                  std::string(long_name(lot.category)) + " does not match pmf " +
                                  std::string(long_name(pmf.category)));
    }
    for (const auto& [t, p] : posterior(pmf, lot.years_held)) {
      if (t <= horizon) out[static_cast<std::size_t>(t - 1)] += p;
    }
  }
  return out;
}

std::vector<double> expected_total_permits(const std::array<std::vector<double>, 4>& per_category) {
  const std::size_t n = per_category[0].size();
  for (const auto& v : per_category) {
    if (v.size() != n) throw std::invalid_argument("expected_total_permits: horizon lengths differ");
  }
  std::vector<double> out(n, 0.0);
  for (const auto& v : per_category)
    for (std::size_t i = 0; i < n; ++i) out[i] += v[i];
  return out;
}

namespace {

// Year the current owner (as of `year`) bought the lot.
int purchase_year(const LotHistory& lot, int year) {
  return lot.owner_as_of(year)->date.year;
}

}  // namespace

TimeToPermitPMF fit_pmf(const std::vector<LotHistory>& lots, OwnerCategory category,
                        const PmfFitOptions& options) {
  const OwnerIndex owners(lots);
  std::map<int, int> permitted;
  std::vector<int> censored;
  int max_offset = 0;
  for (const auto& lot : lots) {
    const auto permit = lot.effective_permit_year();
    if (permit && *permit <= options.as_of_year) {
      if (!lot.owner_as_of(*permit)) continue;
      if (categorize_owner(lot, *permit, owners, options.categorize) != category) continue;
      const int offset = *permit - purchase_year(lot, *permit);
      ++permitted[offset];
      max_offset = std::max(max_offset, offset);
    } else {
      if (!lot.owner_as_of(options.as_of_year)) continue;
      if (categorize_owner(lot, options.as_of_year, owners, options.categorize) != category) continue;
      const int held = options.as_of_year - purchase_year(lot, options.as_of_year);
      censored.push_back(held);
      max_offset = std::max(max_offset, held);
    }
  }
  if (permitted.empty()) {
    throw DomainError("fit_pmf: no permitted " + std::string(long_name(category)) +
                      " lots to fit");
  }

  int n = static_cast<int>(censored.size());
  for (const auto& [offset, count] : permitted) n += count;
  TimeToPermitPMF pmf;
  pmf.category = category;
  for (const auto& [offset, count] : permitted)
    pmf.mass[offset] = static_cast<double>(count) / n;
  if (!censored.empty())
    pmf.mass[max_offset + 1] += static_cast<double>(censored.size()) / n;
  return pmf;
}

std::vector<HeldLot> held_lots(const std::vector<LotHistory>& lots, OwnerCategory category,
                               int as_of_year, const CategorizeOptions& options) {
  const OwnerIndex owners(lots);
  std::vector<HeldLot> out;
  for (const auto& lot : lots) {
    if (lot.permitted_by(as_of_year) || !lot.owner_as_of(as_of_year)) continue;
    if (categorize(lot, as_of_year, owners, options) != category) continue;
    out.push_back({category, as_of_year - purchase_year(lot, as_of_year)});
  }
  return out;
}

}  // namespace mpc
