#include <doctest.h>

#include "mpc/regime.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace mpc;

namespace {

Eigen::MatrixXd two_clusters(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::MatrixXd x(20, 3);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = (i < 10 ? 0.0 : 5.0) + noise(rng);
  return x;
}

}  // namespace

TEST_CASE("cusum charts") {
  CHECK(cusum(std::vector<double>{0.3, 0.3, 0.3}, 0.3) == std::vector<double>{0, 0, 0});
  CHECK(cusum(std::vector<double>{1, 2, 3}, 2.0) == std::vector<double>{-1, -1, 0});

  std::vector<double> stepped(10, 0.2);
  stepped.insert(stepped.end(), 5, 0.4);
  const auto c = cusum(stepped, 0.2);
  for (std::size_t i = 10; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);

  const auto centered = cusum(stepped);
  double sum = 0.0;
  const double mean = (10 * 0.2 + 5 * 0.4) / 15.0;
  for (double v : stepped) sum += v - mean;
  CHECK(centered.back() == sum);
  CHECK(cusum_changepoint(centered) == 10u);
  CHECK_FALSE(cusum_changepoint(cusum(std::vector<double>{0.5, 0.5}, 0.5)));
}

TEST_CASE("k-means basics") {
  const auto x = two_clusters(3);
  const auto one = kmeans(x, 1, 0);
  CHECK((one.centroids.row(0) - x.colwise().mean()).norm() <= 1e-12);

  const auto two = kmeans(x, 2, 0);
  for (int i = 1; i < 10; ++i) CHECK(two.labels[static_cast<std::size_t>(i)] == two.labels[0]);
  for (int i = 11; i < 20; ++i) CHECK(two.labels[static_cast<std::size_t>(i)] == two.labels[10]);
  CHECK(two.labels[0] != two.labels[10]);
  for (std::size_t i = 1; i < two.distortion_history.size(); ++i)
    CHECK(two.distortion_history[i] <= two.distortion_history[i - 1] + 1e-12);

  const auto all = kmeans(x, 20, 0);
  CHECK(all.distortion == doctest::Approx(0.0));
  CHECK(std::set<int>(all.labels.begin(), all.labels.end()).size() == 20);
  CHECK_THROWS(kmeans(x, 21, 0));
}

TEST_CASE("single gaussian matches closed form") {
  const auto x = two_clusters(4);
  const auto g = gmm_fit(x, 1, 0);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd var = (x.rowwise() - mean).array().square().colwise().mean();
  CHECK((g.means.row(0) - mean).norm() <= 1e-10);
  CHECK((g.variances.row(0) - var).norm() <= 1e-10);
  double ll = 0.0;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j)
      ll += -0.5 * std::log(2.0 * std::numbers::pi * var(j)) - 0.5 * std::pow(x(i, j) - mean(j), 2) / var(j);
  CHECK(g.log_likelihood == doctest::Approx(ll).epsilon(1e-10));
}

TEST_CASE("EM is monotone and duplicates only shift the likelihood") {
  const auto x = two_clusters(5);
  const auto g = gmm_fit(x, 2, 1);
  for (std::size_t i = 1; i < g.log_likelihood_history.size(); ++i)
    CHECK(g.log_likelihood_history[i] >= g.log_likelihood_history[i - 1] - 1e-10);
  CHECK(g.parameter_count() == 2 * 2 * 3 + 1);

  Eigen::MatrixXd doubled(40, 3);
  doubled << x, x;
  const auto d = gmm_fit(doubled, 1, 1);
  const auto s = gmm_fit(x, 1, 1);
  CHECK((d.means - s.means).norm() <= 1e-10);
  CHECK(d.log_likelihood == doctest::Approx(2.0 * s.log_likelihood).epsilon(1e-10));
}

TEST_CASE("information criteria") {
  auto ic = information_criteria(0.0, 0, 5);
  CHECK(ic.aic == 0.0);
  CHECK(ic.bic == 0.0);
  ic = information_criteria(-10.0, 3, 20);
  CHECK(ic.aic == doctest::Approx(26.0));
  CHECK(ic.bic == doctest::Approx(3.0 * std::log(20.0) + 20.0));
  CHECK(information_criteria(-10.0, 5, 20).bic > ic.bic);
}

TEST_CASE("planted regimes") {
  int majority = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<TransitionMatrixd> ms;
    std::vector<int> truth;
    for (int i = 0; i < 30; ++i) {
      const int regime = i < 10 ? 0 : (i < 20 ? 1 : 2);
      truth.push_back(regime);
      FreeVector<double> theta = FreeVector<double>::Constant(0.05);
      if (regime >= 1) theta(0) = theta(1) = 0.25;
      if (regime >= 2) theta(5) = theta(6) = 0.25;
      for (int k = 0; k < kNumFree; ++k) theta(k) = std::max(0.0, theta(k) + noise(rng));
      ms.push_back(from_free_parameters(theta, 1990 + i));
    }
    RegimeOptions o;
    o.seed = seed;
    const auto report = detect_regimes(feature_series(ms), o);
    int correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += report.labels[i] == truth[i];
    if (correct * 2 > static_cast<int>(truth.size())) ++majority;
    CHECK(report.charts.size() == 14);
    CHECK(report.ks.size() == report.criteria.size());
    CHECK(report.note.find("Lagrange") != std::string::npos);
  }
  CHECK(majority >= 8);
}

TEST_CASE("feature series needs consecutive years") {
  std::vector<TransitionMatrixd> ms(2);
  ms[0].year = 2000;
  ms[1].year = 2002;
  CHECK_THROWS(feature_series(ms));
}
