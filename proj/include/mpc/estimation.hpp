#ifndef MPC_ESTIMATION_HPP
#define MPC_ESTIMATION_HPP

// Per-year transition-matrix estimation from aggregate category counts.
//
// One year gives five balance equations for fourteen free probabilities, so
// the fit is regularized toward a prior matrix and restricted by scenario
// bounds:
//
//   minimize  |x_t P - x_next|^2 + lambda |P - prior|_F^2 + ratio penalty
//   over      P row-stochastic, structural zeros fixed, lo <= P_free <= hi
//
// The problem is a convex quadratic (plus a convex hinge-squared penalty) in
// the free parameters; it is solved by accelerated projected gradient with a
// per-row projection onto the box-intersected simplex.

#include "mpc/core.hpp"
#include "mpc/ingestion.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpc {

/// Bounds on one free transition for the steps starting in
/// [year_start, year_end].
struct TransitionBound {
  Transition transition{OwnerCategory::Builders, OwnerCategory::Permits};
  int year_start = 0;
  int year_end = 0;
  double lo = 0.0;
  double hi = 1.0;
};

struct ConstraintScenario {
  std::vector<TransitionBound> bounds;
  /// Tikhonov weight; nullopt means 0.1 x lots in the state.
  std::optional<double> lambda;
  double ratio_tolerance = 0.1;
  /// Custom-ratio penalty weight, relative to the data term.
  double ratio_weight = 10.0;
  bool use_custom_ratio = true;
  int max_iterations = 10000;
  double step_tolerance = 1e-8;
  /// Additive bound widening applied to years whose bounds are infeasible;
  /// zero reports the infeasibility instead.
  double relax = 0.0;

  /// Throws std::invalid_argument on bounds outside [0,1], lo > hi, or
  /// overlapping year ranges for one transition.
  void check() const;

  /// Lower/upper bound vectors over the free parameters for the step starting
  /// in `year`.
  FreeVector<double> lower(int year) const;
  FreeVector<double> upper(int year) const;

  ConstraintScenario relaxed(double amount) const;
  double lambda_for(double lots) const { return lambda ? *lambda : 0.1 * lots; }
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::vector<OwnerCategory> rows, std::optional<int> year);
  const std::vector<OwnerCategory>& rows() const { return rows_; }
  std::optional<int> year() const { return year_; }

 private:
  std::vector<OwnerCategory> rows_;
  std::optional<int> year_;
};

struct ActiveConstraint {
  enum class Side { Lower, Upper, Pinned };
  Transition transition;
  Side side;
  double value;
};

struct YearFit {
  TransitionMatrixd matrix;
  double residual = 0.0;  // |x_t P - x_next|_2, lots
  double objective = 0.0;
  int iterations = 0;
  bool relaxed = false;
  std::vector<ActiveConstraint> active;
};

/// Fits one year. `custom_ratio`, when given and enabled in the scenario, is
/// the target share of Prospect permits among this step's permits.
YearFit estimate_year(const StateVectord& x_t, const StateVectord& x_next,
                      const ConstraintScenario& scenario,
                      const std::optional<TransitionMatrixd>& prior,
                      std::optional<double> custom_ratio = std::nullopt);

struct EstimationResult {
  std::vector<TransitionMatrixd> matrices;
  std::vector<double> residuals;
  std::vector<std::vector<ActiveConstraint>> active_constraints;
  std::vector<int> relaxed_years;
};

/// Chains estimate_year over consecutive observations, each year's fit being
/// the next year's prior. Lots entering the state from the unsold residual
/// during a year are removed from that year's target.
EstimationResult estimate_sequence(const std::vector<AnnualObservation>& observations,
                                   const ConstraintScenario& scenario);

/// Amount by which the Prospect share of permit flow misses `ratio` beyond
/// `tolerance`; zero when there is no permit flow.
double custom_ratio_constraint(const StateVectord& x_t, const TransitionMatrixd& p,
                               double ratio, double tolerance);

/// Euclidean projection of `v` onto {lo <= y <= hi, sum(y) <= 1}. Requires
/// sum(lo) <= 1. Exposed for testing.
Eigen::VectorXd project_capped_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi);

}  // namespace mpc

#endif  // MPC_ESTIMATION_HPP
