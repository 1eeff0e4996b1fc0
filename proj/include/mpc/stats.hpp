#ifndef MPC_STATS_HPP
#define MPC_STATS_HPP

#include <span>
#include <utility>
#include <vector>

namespace mpc {

/// Sample correlation coefficient. Throws on unequal lengths, fewer than two
/// points, or a constant series.
double pearson(std::span<const double> x, std::span<const double> y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_lo = 0.0;  // confidence interval on the slope
  double slope_hi = 0.0;
  double slope_stderr = 0.0;
  double r = 0.0;  // 0 when y is constant
};

/// Ordinary least squares with a t-based slope interval on n - 2 degrees of
/// freedom.
LinearFit linreg_ci(std::span<const double> x, std::span<const double> y, double confidence);

struct ErrorMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

ErrorMetrics error_metrics(std::span<const double> actual, std::span<const double> predicted);

/// OLS trend on (year, permits) extrapolated over the next `horizon` years,
/// floored at zero.
std::vector<double> linear_baseline(const std::vector<std::pair<int, double>>& history, int horizon);

}  // namespace mpc

#endif  // MPC_STATS_HPP
