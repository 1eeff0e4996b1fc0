#include "mpc/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mpc {

FeatureVectorSeries feature_series(const std::vector<TransitionMatrixd>& matrices) {
  FeatureVectorSeries f;
  f.values.resize(static_cast<Eigen::Index>(matrices.size()), kNumFree);
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (i > 0 && matrices[i].year != matrices[i - 1].year + 1)
      throw std::invalid_argument("feature_series: matrix years are not consecutive");
    f.years.push_back(matrices[i].year);
    f.values.row(static_cast<Eigen::Index>(i)) = free_parameters(matrices[i]).transpose();
  }
  return f;
}

std::vector<double> cusum(std::span<const double> series, std::optional<double> target) {
  if (series.empty()) throw std::invalid_argument("cusum: empty series");
  const double t = target ? *target
                          : std::accumulate(series.begin(), series.end(), 0.0) /
                                static_cast<double>(series.size());
  std::vector<double> c(series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    acc += series[i] - t;
    c[i] = acc;
  }
  return c;
}

std::optional<std::size_t> cusum_changepoint(std::span<const double> chart) {
  if (chart.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < chart.size(); ++i)
    if (std::abs(chart[i]) > std::abs(chart[best])) best = i;
  if (chart[best] == 0.0 || best + 1 >= chart.size()) return std::nullopt;
  return best + 1;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Assigns each row to its nearest centroid (lowest index on ties).
double assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
              std::vector<int>& labels, Eigen::VectorXd& dist) {
  const Eigen::Index n = points.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    const double d = (centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    dist(i) = d;
    total += d;
  }
  return total;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: k must be in [1, number of points]");
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  Eigen::MatrixXd centroids(k, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  auto first = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centroids.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = true;
  Eigen::VectorXd d2 = (points.rowwise() - points.row(first)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index pick = -1;
    const double total = d2.sum();
    if (total > 0.0) {
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (d2(i) > 0.0 && u < acc) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Eigen::Index i = n - 1; i >= 0; --i)
          if (d2(i) > 0.0) { pick = i; break; }
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) { pick = i; break; }
    }
    centroids.row(c) = points.row(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    d2 = d2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }

  KMeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Eigen::VectorXd dist(n);
  for (int it = 0; it < 1000; ++it) {
    assign(points, centroids, labels, dist);
    if (labels == result.labels) break;
    result.labels = labels;
    result.iterations = it + 1;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts(labels[static_cast<std::size_t>(i)]);
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        centroids.row(c) = sums.row(c) / counts(c);
      } else {
        // Empty cluster: move it onto the point worst served by its centroid.
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        centroids.row(c) = points.row(far);
        dist(far) = 0.0;
      }
    }
    double distortion = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      distortion += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    result.distortion_history.push_back(distortion);
  }
  result.centroids = centroids;
  result.distortion = assign(points, centroids, labels, dist);
  result.labels = labels;
  return result;
}

std::vector<int> GmmResult::labels() const {
  std::vector<int> out(static_cast<std::size_t>(responsibilities.rows()));
  for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
    Eigen::Index best = 0;
    responsibilities.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

int GmmResult::parameter_count() const {
  const auto k = static_cast<int>(means.rows());
  const auto d = static_cast<int>(means.cols());
  return k * 2 * d + (k - 1);
}

namespace {

// Log-densities of every point under every component, n x k.
Eigen::MatrixXd component_log_density(const Eigen::MatrixXd& x, const GmmResult& g) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = g.means.rows();
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Eigen::MatrixXd out(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::RowVectorXd var = g.variances.row(c);
    const double norm = -0.5 * (var.array().log() + log2pi).sum();
    const Eigen::MatrixXd diff = x.rowwise() - g.means.row(c);
    out.col(c) = ((diff.array().square().rowwise() / var.array()).rowwise().sum() * -0.5 + norm).matrix() +
                 Eigen::VectorXd::Constant(n, std::log(g.weights(c)));
  }
  return out;
}

// Turns log joint densities into responsibilities; returns the log-likelihood.
double normalize_responsibilities(Eigen::MatrixXd& log_joint) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    const double m = log_joint.row(i).maxCoeff();
    const double lse = m + std::log((log_joint.row(i).array() - m).exp().sum());
    log_joint.row(i) = (log_joint.row(i).array() - lse).exp();
    ll += lse;
  }
  return ll;
}

}  // namespace

GmmResult gmm_fit(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (k < 1 || k > n) throw std::invalid_argument("gmm_fit: k must be in [1, number of points]");

  const auto init = kmeans(points, k, seed);
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::RowVectorXd global_var =
      ((points.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n))
          .max(kVarianceFloor)
          .matrix();

  GmmResult g;
  g.means = init.centroids;
  g.variances = global_var.replicate(k, 1);
  g.weights = Eigen::VectorXd::Zero(k);
  for (int label : init.labels) g.weights(label) += 1.0;
  g.weights /= static_cast<double>(n);

  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 500; ++it) {
    Eigen::MatrixXd resp = component_log_density(points, g);
    const double ll = normalize_responsibilities(resp);
    g.responsibilities = resp;
    g.log_likelihood = ll;
    g.log_likelihood_history.push_back(ll);
    g.iterations = it;
    if (std::abs(ll - prev) < 1e-8) break;
    prev = ll;

    for (Eigen::Index c = 0; c < k; ++c) {
      const double nk = resp.col(c).sum();
      if (nk < 1e-10) {
        g.weights(c) = std::max(nk, 1e-300) / static_cast<double>(n);
        continue;
      }
      const Eigen::RowVectorXd mu = (resp.col(c).transpose() * points) / nk;
      const Eigen::MatrixXd diff = points.rowwise() - mu;
      Eigen::RowVectorXd var = (resp.col(c).transpose() * diff.array().square().matrix()) / nk;
      g.means.row(c) = mu;
      g.variances.row(c) = var.array().max(kVarianceFloor).matrix();
      g.weights(c) = nk / static_cast<double>(n);
    }
    g.weights /= g.weights.sum();
  }
  (void)d;
  return g;
}

InformationCriteria information_criteria(double log_likelihood, int n_params, int n_points) {
  if (n_points < 1) throw std::invalid_argument("information_criteria: n_points must be >= 1");
  return {2.0 * n_params - 2.0 * log_likelihood,
          n_params * std::log(static_cast<double>(n_points)) - 2.0 * log_likelihood};
}

RegimeReport detect_regimes(const FeatureVectorSeries& features, const RegimeOptions& options) {
  const auto n = static_cast<int>(features.values.rows());
  if (n < 1) throw std::invalid_argument("detect_regimes: no feature vectors");
  if (options.k_max < 1 || options.restarts < 1)
    throw std::invalid_argument("detect_regimes: k_max and restarts must be >= 1");

  RegimeReport report;
  report.years = features.years;
  report.note =
      "Regime count from BIC over diagonal Gaussian mixtures; changepoints from label changes "
      "and per-transition CUSUM peaks. No Lagrange Multiplier regime-switching test is run.";

  double best_bic = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  for (int k = 1; k <= std::min(options.k_max, n); ++k) {
    std::optional<GmmResult> best;
    for (int r = 0; r < options.restarts; ++r) {
      auto g = gmm_fit(features.values, k, options.seed + static_cast<std::uint64_t>(r));
      if (!best || g.log_likelihood > best->log_likelihood) best = std::move(g);
    }
    const auto ic = information_criteria(best->log_likelihood, best->parameter_count(), n);
    report.ks.push_back(k);
    report.criteria.push_back(ic);
    if (ic.bic < best_bic) {
      best_bic = ic.bic;
      report.chosen_k = k;
      best_labels = best->labels();
    }
  }

  // Relabel by first appearance so labels read 0, 1, 2, ... along time.
  std::vector<int> remap(static_cast<std::size_t>(report.chosen_k), -1);
  int next = 0;
  for (int& l : best_labels) {
    auto& m = remap[static_cast<std::size_t>(l)];
    if (m < 0) m = next++;
    l = m;
  }
  report.labels = best_labels;
  for (std::size_t i = 1; i < report.labels.size(); ++i)
    if (report.labels[i] != report.labels[i - 1]) report.changepoints.push_back(report.years[i]);

  for (int j = 0; j < kNumFree; ++j) {
    std::vector<double> column(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = features.values(i, j);
    TransitionChart chart;
    chart.transition = kFreeParameters[static_cast<std::size_t>(j)];
    chart.values = cusum(column);
    if (auto cp = cusum_changepoint(chart.values)) chart.changepoint_year = report.years[*cp];
    report.charts.push_back(std::move(chart));
  }
  return report;
}

}  // namespace mpc
