#include "mpc/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mpc {

namespace {

struct Moments {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
};

Moments centered_moments(std::span<const double> x, std::span<const double> y) {
  Moments m;
  const auto n = static_cast<double>(x.size());
  m.mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  m.mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const auto m = centered_moments(x, y);
  if (!(m.sxx > 0.0) || !(m.syy > 0.0)) throw std::invalid_argument("pearson: degenerate variance");
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

LinearFit linreg_ci(std::span<const double> x, std::span<const double> y, double confidence) {
  if (x.size() != y.size()) throw std::invalid_argument("linreg_ci: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("linreg_ci: need at least 3 points");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("linreg_ci: confidence must be in (0, 1)");
  const auto m = centered_moments(x, y);
  if (!(m.sxx > 0.0)) throw std::invalid_argument("linreg_ci: degenerate x variance");

  LinearFit fit;
  fit.slope = m.sxy / m.sxx;
  fit.intercept = m.mean_y - fit.slope * m.mean_x;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += e * e;
  }
  const double dof = static_cast<double>(x.size()) - 2.0;
  fit.slope_stderr = std::sqrt(ssr / dof / m.sxx);
  const boost::math::students_t dist(dof);
  const double t = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
  fit.slope_lo = fit.slope - t * fit.slope_stderr;
  fit.slope_hi = fit.slope + t * fit.slope_stderr;
  fit.r = m.syy > 0.0 ? std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0) : 0.0;
  return fit;
}

ErrorMetrics error_metrics(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw std::invalid_argument("error_metrics: length mismatch");
  if (actual.empty()) throw std::invalid_argument("error_metrics: empty input");
  ErrorMetrics e;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - predicted[i];
    e.mae += std::abs(d);
    e.mse += d * d;
  }
  const auto n = static_cast<double>(actual.size());
  e.mae /= n;
  e.mse /= n;
  e.rmse = std::sqrt(e.mse);
  return e;
}

std::vector<double> linear_baseline(const std::vector<std::pair<int, double>>& history, int horizon) {
  if (history.size() < 2) throw std::invalid_argument("linear_baseline: need at least 2 points");
  if (horizon < 0) throw std::invalid_argument("linear_baseline: negative horizon");
  std::vector<double> x, y;
  int last = history.front().first;
  for (const auto& [year, permits] : history) {
    x.push_back(year);
    y.push_back(permits);
    last = std::max(last, year);
  }
  const auto m = centered_moments(x, y);
  if (!(m.sxx > 0.0)) throw std::invalid_argument("linear_baseline: all history in one year");
  const double slope = m.sxy / m.sxx;
  const double intercept = m.mean_y - slope * m.mean_x;
  std::vector<double> out;
  for (int h = 1; h <= horizon; ++h) out.push_back(std::max(0.0, intercept + slope * (last + h)));
  return out;
}

}  // namespace mpc
