#include "mpc/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mpc {

void ForecastSettings::check() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("forecast: alpha must be in (0, 1]");
  if (horizon < 0) throw std::invalid_argument("forecast: horizon must be >= 0");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("forecast: noise_sd must be >= 0");
  if (!(scale_factor >= 0.0)) throw std::invalid_argument("forecast: scale_factor must be >= 0");
  if (mc_runs < 0) throw std::invalid_argument("forecast: mc_runs must be >= 0");
  if (!(mc_sd_fraction >= 0.0)) throw std::invalid_argument("forecast: mc_sd_fraction must be >= 0");
  if (history_window < 1) throw std::invalid_argument("forecast: history_window must be >= 1");
  if (threads < 0) throw std::invalid_argument("forecast: threads must be >= 0");
}

std::vector<double> ema_smooth(std::span<const double> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("ema_smooth: empty series");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ema_smooth: alpha must be in (0, 1]");
  std::vector<double> s(values.size());
  s[0] = values[0];
  for (std::size_t i = 1; i < values.size(); ++i)
    s[i] = alpha * values[i] + (1.0 - alpha) * s[i - 1];
  return s;
}

NormalizedMatrix normalize_rows(const SquareMatrix<double>& raw, int year) {
  constexpr int absorbing = index(OwnerCategory::Permits);
  for (int c = 0; c < kNumCategories; ++c) {
    if (raw(absorbing, c) != (c == absorbing ? 1.0 : 0.0))
      throw std::invalid_argument("normalize_rows: permits row must be [0,0,0,0,1]");
  }
  for (int r = 0; r < absorbing; ++r) {
    if (is_structural_zero(r, absorbing) && raw(r, absorbing) != 0.0)
      throw std::invalid_argument("normalize_rows: structural zero is nonzero in row " +
                                  std::string(long_name(category_at(r))));
  }
  if (!raw.allFinite()) throw std::invalid_argument("normalize_rows: non-finite entry");

  NormalizedMatrix out;
  out.matrix.entries = raw;
  out.matrix.year = year;
  auto& m = out.matrix.entries;
  constexpr double kDegenerate = 1e-12;
  auto rescale = [&](int r) {
    const double sum = m.row(r).sum();
    if (sum <= kDegenerate) return false;
    if (std::abs(sum - 1.0) > 1e-12) m.row(r) /= sum;
    return true;
  };
  for (int r = 0; r < absorbing; ++r) {
    bool ok = rescale(r);
    if (ok) {
      m.row(r) = m.row(r).cwiseMax(0.0);
      ok = rescale(r);
    }
    if (!ok) {
      m.row(r).setZero();
      m(r, r) = 1.0;
      out.fallback_rows.push_back(category_at(r));
    }
  }
  return out;
}

TransitionMatrixd smooth_history(const std::vector<TransitionMatrixd>& history, double alpha,
                                 int window) {
  if (history.empty()) throw std::invalid_argument("smooth_history: no historical matrices");
  if (window < 1) throw std::invalid_argument("smooth_history: window must be >= 1");
  const std::size_t n = std::min(history.size(), static_cast<std::size_t>(window));
  const std::size_t first = history.size() - n;

  FreeVector<double> last;
  std::vector<double> series(n);
  for (int k = 0; k < kNumFree; ++k) {
    const auto t = kFreeParameters[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < n; ++i) series[i] = history[first + i](t.from, t.to);
    last(k) = ema_smooth(series, alpha).back();
  }
  return normalize_rows(from_free_parameters(last, history.back().year).entries,
                        history.back().year)
      .matrix;
}

std::vector<TransitionMatrixd> forecast_probabilities(const TransitionMatrixd& last_smoothed,
                                                      const ForecastSettings& settings,
                                                      std::mt19937_64& rng) {
  settings.check();
  if (auto v = validate(last_smoothed); !v.empty()) throw ValidationError(std::move(v));

  FreeVector<double> prev = free_parameters(last_smoothed);
  for (auto t : {Transition{OwnerCategory::Builders, OwnerCategory::Permits},
                 Transition{OwnerCategory::Prospects, OwnerCategory::Permits}}) {
    prev(*free_index(t.from, t.to)) *= settings.scale_factor;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<TransitionMatrixd> out;
  out.reserve(static_cast<std::size_t>(settings.horizon));
  for (int h = 1; h <= settings.horizon; ++h) {
    FreeVector<double> next;
    for (int k = 0; k < kNumFree; ++k) {
      const double draw = settings.noise_sd > 0.0 ? prev(k) + settings.noise_sd * normal(rng) : prev(k);
      next(k) = settings.alpha * draw + (1.0 - settings.alpha) * prev(k);
    }
    const int year = last_smoothed.year + h;
    auto m = normalize_rows(from_free_parameters(next, year).entries, year).matrix;
    prev = free_parameters(m);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<StateVectord> forecast_states(const StateVectord& x0,
                                          const std::vector<TransitionMatrixd>& matrices) {
  std::vector<StateVectord> out;
  out.reserve(matrices.size());
  StateVectord x = x0;
  for (const auto& m : matrices) {
    x = step(x, m);
    out.push_back(x);
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

namespace {

std::mt19937_64 replicate_stream(std::uint64_t seed, int replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate), 0x6d63u};
  return std::mt19937_64(seq);
}

}  // namespace

ForecastSeries monte_carlo(const StateVectord& x0, const std::vector<TransitionMatrixd>& base,
                           const ForecastSettings& settings, long platted) {
  settings.check();
  const std::size_t horizon = base.size();
  for (std::size_t h = 0; h < horizon; ++h) {
    if (base[h].year != x0.year + static_cast<int>(h))
      throw std::invalid_argument("monte_carlo: matrices are not consecutive from the start year");
  }

  ForecastSeries series;
  series.states = forecast_states(x0, base);
  StateVectord prev = x0;
  for (std::size_t h = 0; h < horizon; ++h) {
    const auto& next = series.states[h];
    ForecastPoint p;
    p.year = next.year;
    p.phase = Phase::Forecast;
    p.permits = annual_permits(prev, next);
    p.buildout = buildout_pct(next, platted);
    series.points.push_back(p);
    prev = next;
  }
  if (settings.mc_runs == 0 || horizon == 0) return series;

  const auto runs = static_cast<std::size_t>(settings.mc_runs);
  // Replicate-major: [run * horizon + year].
  std::vector<double> permits(runs * horizon);
  std::vector<double> buildout(runs * horizon);

  auto replicate = [&](std::size_t r) {
    auto rng = replicate_stream(settings.seed, static_cast<int>(r));
    std::normal_distribution<double> normal(0.0, 1.0);
    StateVectord x = x0;
    for (std::size_t h = 0; h < horizon; ++h) {
      FreeVector<double> theta = free_parameters(base[h]);
      for (int k = 0; k < kNumFree; ++k) {
        const double sd = settings.mc_sd_fraction * theta(k);
        if (sd > 0.0) theta(k) += sd * normal(rng);
      }
      const auto m = normalize_rows(from_free_parameters(theta, base[h].year).entries,
                                    base[h].year).matrix;
      const StateVectord next = step(x, m);
      permits[r * horizon + h] = annual_permits(x, next);
      buildout[r * horizon + h] = buildout_pct(next, platted);
      x = next;
    }
  };

  std::size_t workers = settings.threads > 0 ? static_cast<std::size_t>(settings.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, runs);
  if (workers <= 1) {
    for (std::size_t r = 0; r < runs; ++r) replicate(r);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < runs; r += workers) replicate(r);
      });
    }
  }

  std::vector<double> column(runs);
  for (std::size_t h = 0; h < horizon; ++h) {
    auto band = [&](const std::vector<double>& values) {
      for (std::size_t r = 0; r < runs; ++r) column[r] = values[r * horizon + h];
      std::sort(column.begin(), column.end());
      return std::pair{quantile_sorted(column, 0.025), quantile_sorted(column, 0.975)};
    };
    auto& p = series.points[h];
    std::tie(p.permits_lo, p.permits_hi) = band(permits);
    std::tie(p.buildout_lo, p.buildout_hi) = band(buildout);
  }
  return series;
}

ForecastRun run_forecast(const std::vector<TransitionMatrixd>& history, const StateVectord& x0,
                         const ForecastSettings& settings, long platted) {
  settings.check();
  ForecastRun run;
  run.last_smoothed = smooth_history(history, settings.alpha, settings.history_window);
  if (x0.year != run.last_smoothed.year + 1)
    throw std::invalid_argument("run_forecast: start state must follow the last historical step");
  std::mt19937_64 rng(settings.seed);
  run.matrices = forecast_probabilities(run.last_smoothed, settings, rng);
  run.series = monte_carlo(x0, run.matrices, settings, platted);
  return run;
}

}  // namespace mpc
