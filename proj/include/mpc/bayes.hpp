#ifndef MPC_BAYES_HPP
#define MPC_BAYES_HPP

// Time-to-permit distributions and the posterior for lots already held
// unpermitted for t_i years:
//
//   posterior_i(t) = P_c(t + t_i) / sum_{k > t_i} P_c(k),   t >= 1
//
// Summing posteriors over a category's lots gives its expected permits per
// future year; summing categories gives the total.

#include "mpc/core.hpp"
#include "mpc/ingestion.hpp"

#include <array>
#include <map>
#include <vector>

namespace mpc {

struct TimeToPermitPMF {
  OwnerCategory category = OwnerCategory::Prospects;
  std::map<int, double> mass;  // years from purchase to permit -> probability

  /// Throws std::invalid_argument unless masses are >= 0 on offsets >= 0 and
  /// sum to 1 within 1e-9.
  void check() const;
  double at(int offset) const;
};

struct HeldLot {
  OwnerCategory category = OwnerCategory::Prospects;
  int years_held = 0;
};

/// Posterior over years-from-now t >= 1. Throws DomainError when no mass lies
/// beyond `years_held`.
std::map<int, double> posterior(const TimeToPermitPMF& pmf, int years_held);

/// Expected permits in each of the next `horizon` years (index 0 is next year).
std::vector<double> expected_category_permits(const TimeToPermitPMF& pmf,
                                              const std::vector<HeldLot>& lots, int horizon);

std::vector<double> expected_total_permits(const std::array<std::vector<double>, 4>& per_category);

struct PmfFitOptions {
  /// Year at which unpermitted lots are right-censored.
  int as_of_year = 0;
  CategorizeOptions categorize;
};

/// Empirical time-to-permit histogram for lots whose permit holder (or, for
/// still-unpermitted lots, current owner) falls in `category`. Censored lots
/// put their mass on one sentinel offset past every observed duration.
TimeToPermitPMF fit_pmf(const std::vector<LotHistory>& lots, OwnerCategory category,
                        const PmfFitOptions& options);

/// Unpermitted lots of `category` at the end of `as_of_year`, with years held
/// by the current owner.
std::vector<HeldLot> held_lots(const std::vector<LotHistory>& lots, OwnerCategory category,
                               int as_of_year, const CategorizeOptions& options = {});

}  // namespace mpc

#endif  // MPC_BAYES_HPP
