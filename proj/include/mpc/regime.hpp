#ifndef MPC_REGIME_HPP
#define MPC_REGIME_HPP

// Regime-shift detection over per-year transition-probability vectors:
// cumulative-deviation charts, k-means, diagonal Gaussian mixtures and
// information-criterion model selection.

#include "mpc/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpc {

/// One row per year, one column per free transition (kFreeParameters order).
struct FeatureVectorSeries {
  std::vector<int> years;
  Eigen::MatrixXd values;
};

FeatureVectorSeries feature_series(const std::vector<TransitionMatrixd>& matrices);

/// c[i] = sum_{j <= i} (s[j] - target); target defaults to the series mean.
std::vector<double> cusum(std::span<const double> series,
                          std::optional<double> target = std::nullopt);

/// Index of the first point after the largest |c|: where the level shifts.
/// nullopt when the peak is the last point or the chart is flat.
std::optional<std::size_t> cusum_changepoint(std::span<const double> chart);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;  // k x d
  double distortion = 0.0;    // sum of squared distances to assigned centroid
  std::vector<double> distortion_history;
  int iterations = 0;
};

/// Lloyd iteration from k-means++ seeding; rows of `points` are observations.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

inline constexpr double kVarianceFloor = 1e-6;

struct GmmResult {
  Eigen::VectorXd weights;            // k
  Eigen::MatrixXd means;              // k x d
  Eigen::MatrixXd variances;          // k x d, diagonal covariances
  Eigen::MatrixXd responsibilities;   // n x k
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_history;
  int iterations = 0;

  std::vector<int> labels() const;
  int parameter_count() const;
};

/// EM for a diagonal-covariance mixture, initialized from kmeans(seed).
/// Stops when the log-likelihood changes by less than 1e-8 or after 500
/// iterations.
GmmResult gmm_fit(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

InformationCriteria information_criteria(double log_likelihood, int n_params, int n_points);

struct RegimeOptions {
  int k_max = 5;
  int restarts = 5;
  std::uint64_t seed = 0;
};

struct TransitionChart {
  Transition transition;
  std::vector<double> values;
  std::optional<int> changepoint_year;
};

struct RegimeReport {
  std::vector<int> years;
  std::vector<int> labels;
  std::vector<int> changepoints;  // first year of each new label run
  std::vector<int> ks;
  std::vector<InformationCriteria> criteria;  // parallel to ks
  int chosen_k = 1;
  std::vector<TransitionChart> charts;
  std::string note;
};

/// Best-of-`restarts` GMM fit for k = 1..k_max; chosen_k minimizes BIC.
/// Ties between restarts go to the lowest seed.
RegimeReport detect_regimes(const FeatureVectorSeries& features, const RegimeOptions& options);

}  // namespace mpc

#endif  // MPC_REGIME_HPP
