#ifndef MPC_FORECAST_HPP
#define MPC_FORECAST_HPP

#include "mpc/core.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace mpc {

struct ForecastSettings {
  double alpha = 0.15;
  int horizon = 7;
  double noise_sd = 0.05;
  /// Multiplies the permit-flow probabilities (B->R, P->R) of the last
  /// smoothed matrix; < 1 models a slowdown.
  double scale_factor = 1.0;
  int mc_runs = 1000;
  /// Monte Carlo noise sd as a fraction of each probability.
  double mc_sd_fraction = 0.20;
  std::uint64_t seed = 0;
  int history_window = 4;
  /// Worker threads for Monte Carlo; 0 uses the hardware concurrency.
  int threads = 0;

  void check() const;
};

/// s[0] = v[0]; s[i] = alpha * v[i] + (1 - alpha) * s[i-1].
std::vector<double> ema_smooth(std::span<const double> values, double alpha);

struct NormalizedMatrix {
  TransitionMatrixd matrix;
  std::vector<OwnerCategory> fallback_rows;  // degenerate rows reset to self-retention
};

/// Three-step row normalization of the non-absorbing rows: scale to sum 1,
/// clip negatives, rescale. Rows already summing to 1 within 1e-12 skip a
/// scaling step, which makes the operation idempotent bit for bit.
NormalizedMatrix normalize_rows(const SquareMatrix<double>& raw, int year);

/// EMA-smooths each free probability over the last `window` matrices and
/// returns the final smoothed matrix.
TransitionMatrixd smooth_history(const std::vector<TransitionMatrixd>& history, double alpha,
                                 int window);

/// Stochastic smoothing forward from `last_smoothed`, one matrix per future
/// year. Each free probability follows
///   s = alpha * N(prev, noise_sd) + (1 - alpha) * prev
/// and every matrix is renormalized.
std::vector<TransitionMatrixd> forecast_probabilities(const TransitionMatrixd& last_smoothed,
                                                      const ForecastSettings& settings,
                                                      std::mt19937_64& rng);

std::vector<StateVectord> forecast_states(const StateVectord& x0,
                                          const std::vector<TransitionMatrixd>& matrices);

enum class Phase { Historical, Forecast };

struct ForecastPoint {
  int year = 0;
  Phase phase = Phase::Forecast;
  double permits = 0.0;
  double buildout = 0.0;
  std::optional<double> permits_lo, permits_hi;
  std::optional<double> buildout_lo, buildout_hi;

  friend bool operator==(const ForecastPoint&, const ForecastPoint&) = default;
};

struct ForecastSeries {
  std::vector<ForecastPoint> points;
  std::vector<StateVectord> states;  // point-forecast states, one per forecast year

  friend bool operator==(const ForecastSeries&, const ForecastSeries&) = default;
};

/// Point forecast from the unperturbed matrices plus empirical 2.5/97.5
/// percentile bands over `mc_runs` replicates. In each replicate every free
/// probability p of every year's matrix is drawn from N(p, mc_sd_fraction*p)
/// and the matrix renormalized. Replicate r draws from a stream seeded by
/// (seed, r), so the result does not depend on the thread count.
ForecastSeries monte_carlo(const StateVectord& x0, const std::vector<TransitionMatrixd>& base,
                           const ForecastSettings& settings, long platted);

struct ForecastRun {
  TransitionMatrixd last_smoothed;
  std::vector<TransitionMatrixd> matrices;
  ForecastSeries series;
};

/// smooth_history -> forecast_probabilities -> monte_carlo.
ForecastRun run_forecast(const std::vector<TransitionMatrixd>& history, const StateVectord& x0,
                         const ForecastSettings& settings, long platted);

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace mpc

#endif  // MPC_FORECAST_HPP
