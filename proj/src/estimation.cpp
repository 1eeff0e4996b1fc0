#include "mpc/estimation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace mpc {

namespace {

using Vec14 = FreeVector<double>;

// Free-parameter indices of each non-absorbing row.
const std::array<std::vector<int>, 4>& row_groups() {
  static const auto groups = [] {
    std::array<std::vector<int>, 4> g;
    for (int k = 0; k < kNumFree; ++k)
      g[static_cast<std::size_t>(index(kFreeParameters[static_cast<std::size_t>(k)].from))]
          .push_back(k);
    return g;
  }();
  return groups;
}

Vec14 project(const Vec14& v, const Vec14& lo, const Vec14& hi) {
  Vec14 out;
  for (const auto& group : row_groups()) {
    const auto n = static_cast<Eigen::Index>(group.size());
    Eigen::VectorXd gv(n), gl(n), gh(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k = group[static_cast<std::size_t>(i)];
      gv(i) = v(k);
      gl(i) = lo(k);
      gh(i) = hi(k);
    }
    const Eigen::VectorXd p = project_capped_box(gv, gl, gh);
    for (Eigen::Index i = 0; i < n; ++i) out(group[static_cast<std::size_t>(i)]) = p(i);
  }
  return out;
}

// The estimation objective as affine maps of the free parameters.
struct Objective {
  Eigen::Matrix<double, kNumCategories, kNumFree> data_map;
  Eigen::Matrix<double, kNumCategories, 1> data_offset;
  Eigen::Matrix<double, 25, kNumFree> reg_map;
  Eigen::Matrix<double, 25, 1> reg_offset;
  double lambda = 0.0;

  bool has_ratio = false;
  Vec14 ratio_gap = Vec14::Zero();   // custom - ratio * (custom + spec)
  Vec14 ratio_flow = Vec14::Zero();  // custom + spec
  double ratio_tolerance = 0.0;
  double ratio_weight = 0.0;

  double ratio_hinge(const Vec14& theta) const {
    return std::abs(ratio_gap.dot(theta)) - ratio_tolerance * ratio_flow.dot(theta);
  }

  double value(const Vec14& theta) const {
    double f = (data_map * theta + data_offset).squaredNorm() +
               lambda * (reg_map * theta + reg_offset).squaredNorm();
    if (has_ratio) {
      const double h = std::max(0.0, ratio_hinge(theta));
      f += ratio_weight * h * h;
    }
    return f;
  }

  Vec14 gradient(const Vec14& theta) const {
    Vec14 g = 2.0 * data_map.transpose() * (data_map * theta + data_offset) +
              2.0 * lambda * reg_map.transpose() * (reg_map * theta + reg_offset);
    if (has_ratio) {
      const double h = ratio_hinge(theta);
      if (h > 0.0) {
        const double s = ratio_gap.dot(theta) >= 0.0 ? 1.0 : -1.0;
        g += 2.0 * ratio_weight * h * (s * ratio_gap - ratio_tolerance * ratio_flow);
      }
    }
    return g;
  }

  double lipschitz() const {
    const Eigen::Matrix<double, kNumFree, kNumFree> h =
        2.0 * (data_map.transpose() * data_map + lambda * reg_map.transpose() * reg_map);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kNumFree, kNumFree>> eig(
        h, Eigen::EigenvaluesOnly);
    double l = eig.eigenvalues().maxCoeff();
    if (has_ratio) {
      const double n = ratio_gap.norm() + ratio_tolerance * ratio_flow.norm();
      l += 2.0 * ratio_weight * n * n;
    }
    return std::max(l, 1e-12);
  }
};

Objective build_objective(const StateVectord& x, const StateVectord& y,
                          const SquareMatrix<double>& prior, double lambda,
                          std::optional<double> ratio, const ConstraintScenario& scenario) {
  Objective obj;
  obj.data_map.setZero();
  obj.reg_map.setZero();
  for (int k = 0; k < kNumFree; ++k) {
    const auto t = kFreeParameters[static_cast<std::size_t>(k)];
    const int from = index(t.from);
    const int to = index(t.to);
    obj.data_map(to, k) += x.counts(from);
    obj.data_map(from, k) -= x.counts(from);
    obj.reg_map(from * kNumCategories + to, k) = 1.0;
    obj.reg_map(from * kNumCategories + from, k) = -1.0;
  }
  // With every free parameter at zero the matrix is the identity.
  obj.data_offset = (x.counts - y.counts).transpose();
  const SquareMatrix<double> diff = SquareMatrix<double>::Identity() - prior;
  for (int r = 0; r < kNumCategories; ++r)
    for (int c = 0; c < kNumCategories; ++c) obj.reg_offset(r * kNumCategories + c) = diff(r, c);
  obj.lambda = lambda;

  if (ratio && scenario.use_custom_ratio) {
    const int pr = *free_index(OwnerCategory::Prospects, OwnerCategory::Permits);
    const int br = *free_index(OwnerCategory::Builders, OwnerCategory::Permits);
    const double xp = x[OwnerCategory::Prospects];
    const double xb = x[OwnerCategory::Builders];
    obj.has_ratio = true;
    obj.ratio_gap(pr) = (1.0 - *ratio) * xp;
    obj.ratio_gap(br) = -*ratio * xb;
    obj.ratio_flow(pr) = xp;
    obj.ratio_flow(br) = xb;
    obj.ratio_tolerance = scenario.ratio_tolerance;
    obj.ratio_weight = scenario.ratio_weight;
  }
  return obj;
}

TransitionMatrixd to_matrix(const Vec14& theta, int year) {
  auto m = from_free_parameters(theta, year);
  for (int r = 0; r < 4; ++r) m.entries(r, r) = std::max(0.0, m.entries(r, r));
  return m;
}

std::vector<OwnerCategory> infeasible_rows(const Vec14& lo) {
  std::vector<OwnerCategory> rows;
  for (std::size_t r = 0; r < row_groups().size(); ++r) {
    double sum = 0.0;
    for (int k : row_groups()[r]) sum += lo(k);
    if (sum > 1.0 + 1e-12) rows.push_back(category_at(static_cast<int>(r)));
  }
  return rows;
}

std::string infeasible_message(const std::vector<OwnerCategory>& rows, std::optional<int> year) {
  std::string msg = "infeasible constraint set";
  if (year) msg += " for the step starting " + std::to_string(*year);
  msg += ": lower bounds exceed 1 in row";
  msg += rows.size() > 1 ? "s" : "";
  for (std::size_t i = 0; i < rows.size(); ++i)
    msg += (i ? ", " : " ") + std::string(long_name(rows[i]));
  return msg;
}

}  // namespace

Eigen::VectorXd project_capped_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi) {
  auto clamp_shift = [&](double shift) {
    return (v.array() - shift).max(lo.array()).min(hi.array()).matrix().eval();
  };
  Eigen::VectorXd y = clamp_shift(0.0);
  if (y.sum() <= 1.0) return y;

  // sum(clamp(v - s)) is non-increasing in s and reaches sum(lo) <= 1.
  double below = 0.0;
  double above = (v - lo).maxCoeff();
  for (int it = 0; it < 200 && above - below > 0.0; ++it) {
    const double mid = 0.5 * (below + above);
    if (mid <= below || mid >= above) break;
    if (clamp_shift(mid).sum() > 1.0) below = mid;
    else above = mid;
  }
  return clamp_shift(above);
}

void ConstraintScenario::check() const {
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> ranges;
  for (const auto& b : bounds) {
    const std::string label = transition_label(b.transition);
    if (!free_index(b.transition.from, b.transition.to))
      throw std::invalid_argument("scenario: " + label + " is not a free transition");
    if (!(b.lo >= 0.0 && b.hi <= 1.0 && b.lo <= b.hi))
      throw std::invalid_argument("scenario: bounds for " + label + " must satisfy 0 <= lo <= hi <= 1");
    if (b.year_start > b.year_end)
      throw std::invalid_argument("scenario: empty year range for " + label);
    auto& r = ranges[{index(b.transition.from), index(b.transition.to)}];
    for (const auto& [s, e] : r) {
      if (b.year_start <= e && s <= b.year_end)
        throw std::invalid_argument("scenario: overlapping year ranges for " + label);
    }
    r.emplace_back(b.year_start, b.year_end);
  }
  if (lambda && !(*lambda >= 0.0)) throw std::invalid_argument("scenario: lambda must be >= 0");
  if (!(ratio_tolerance >= 0.0)) throw std::invalid_argument("scenario: ratio_tol must be >= 0");
  if (!(ratio_weight >= 0.0)) throw std::invalid_argument("scenario: ratio_weight must be >= 0");
  if (max_iterations < 1) throw std::invalid_argument("scenario: max_iterations must be >= 1");
  if (!(relax >= 0.0)) throw std::invalid_argument("scenario: relax must be >= 0");
}

FreeVector<double> ConstraintScenario::lower(int year) const {
  Vec14 lo = Vec14::Zero();
  for (const auto& b : bounds)
    if (year >= b.year_start && year <= b.year_end)
      lo(*free_index(b.transition.from, b.transition.to)) = b.lo;
  return lo;
}

FreeVector<double> ConstraintScenario::upper(int year) const {
  Vec14 hi = Vec14::Ones();
  for (const auto& b : bounds)
    if (year >= b.year_start && year <= b.year_end)
      hi(*free_index(b.transition.from, b.transition.to)) = b.hi;
  return hi;
}

ConstraintScenario ConstraintScenario::relaxed(double amount) const {
  ConstraintScenario out = *this;
  for (auto& b : out.bounds) {
    b.lo = std::max(0.0, b.lo - amount);
    b.hi = std::min(1.0, b.hi + amount);
  }
  return out;
}

InfeasibleError::InfeasibleError(std::vector<OwnerCategory> rows, std::optional<int> year)
    : std::runtime_error(infeasible_message(rows, year)), rows_(std::move(rows)), year_(year) {}

double custom_ratio_constraint(const StateVectord& x_t, const TransitionMatrixd& p, double ratio,
                               double tolerance) {
  const double custom = x_t[OwnerCategory::Prospects] * p(OwnerCategory::Prospects, OwnerCategory::Permits);
  const double spec = x_t[OwnerCategory::Builders] * p(OwnerCategory::Builders, OwnerCategory::Permits);
  const double flow = custom + spec;
  if (!(flow > 0.0)) return 0.0;
  return std::max(0.0, std::abs(custom / flow - ratio) - tolerance);
}

YearFit estimate_year(const StateVectord& x_t, const StateVectord& x_next,
                      const ConstraintScenario& scenario,
                      const std::optional<TransitionMatrixd>& prior,
                      std::optional<double> custom_ratio) {
  scenario.check();
  const double total = x_t.total();
  if (std::abs(total - x_next.total()) > 1e-9 * std::max(1.0, std::abs(total))) {
    throw std::invalid_argument("estimate_year: lot totals differ between " +
                                std::to_string(x_t.year) + " and " + std::to_string(x_next.year));
  }
  if (x_next.permits() < x_t.permits() - 1e-9 * std::max(1.0, total))
    throw std::invalid_argument("estimate_year: cumulative permits decreased");
  if ((x_t.counts.array() < 0.0).any() || (x_next.counts.array() < 0.0).any())
    throw std::invalid_argument("estimate_year: negative category counts");

  const int year = x_t.year;
  const Vec14 lo = scenario.lower(year);
  const Vec14 hi = scenario.upper(year);
  if (auto rows = infeasible_rows(lo); !rows.empty()) throw InfeasibleError(std::move(rows), year);

  // Without a prior, pull toward the feasible matrix with the largest
  // diagonal: every free parameter at its lower bound.
  const TransitionMatrixd target = prior ? *prior : to_matrix(lo, year);
  const Objective obj = build_objective(x_t, x_next, target.entries, scenario.lambda_for(total),
                                        custom_ratio, scenario);

  const double step = 1.0 / obj.lipschitz();
  Vec14 theta = project(free_parameters(target), lo, hi);
  double f = obj.value(theta);
  Vec14 z = theta;
  double momentum = 1.0;
  int it = 0;
  while (it < scenario.max_iterations) {
    ++it;
    Vec14 next = project(z - step * obj.gradient(z), lo, hi);
    double f_next = obj.value(next);
    if (f_next > f) {
      // Restart from the last iterate with a plain projected step.
      momentum = 1.0;
      next = project(theta - step * obj.gradient(theta), lo, hi);
      f_next = obj.value(next);
    }
    const double change = (next - theta).lpNorm<Eigen::Infinity>();
    const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    z = next + ((momentum - 1.0) / m_next) * (next - theta);
    momentum = m_next;
    theta = next;
    f = f_next;
    if (change < scenario.step_tolerance) break;
  }

  YearFit fit;
  fit.matrix = to_matrix(theta, year);
  fit.residual = (x_t.counts * fit.matrix.entries - x_next.counts).norm();
  fit.objective = f;
  fit.iterations = it;
  for (int k = 0; k < kNumFree; ++k) {
    const auto t = kFreeParameters[static_cast<std::size_t>(k)];
    if (lo(k) == hi(k)) {
      fit.active.push_back({t, ActiveConstraint::Side::Pinned, lo(k)});
    } else if (std::abs(theta(k) - lo(k)) <= 1e-9) {
      fit.active.push_back({t, ActiveConstraint::Side::Lower, lo(k)});
    } else if (std::abs(theta(k) - hi(k)) <= 1e-9) {
      fit.active.push_back({t, ActiveConstraint::Side::Upper, hi(k)});
    }
  }
  return fit;
}

EstimationResult estimate_sequence(const std::vector<AnnualObservation>& observations,
                                   const ConstraintScenario& scenario) {
  if (observations.size() < 2)
    throw std::invalid_argument("estimate_sequence: need at least 2 observations");
  for (std::size_t i = 1; i < observations.size(); ++i) {
    if (observations[i].year != observations[i - 1].year + 1)
      throw std::invalid_argument("estimate_sequence: observation years are not consecutive");
  }
  scenario.check();

  EstimationResult result;
  std::optional<TransitionMatrixd> prior;
  for (std::size_t i = 0; i + 1 < observations.size(); ++i) {
    StateVectord x = observations[i].category_counts;
    x.year = observations[i].year;
    StateVectord y = observations[i + 1].category_counts;
    y.counts -= observations[i + 1].entries;
    y.year = observations[i + 1].year;
    // Houses completed two years on were permitted during this step.
    std::optional<double> ratio;
    if (i + 2 < observations.size()) ratio = observations[i + 2].custom_ratio;

    YearFit fit;
    try {
      fit = estimate_year(x, y, scenario, prior, ratio);
    } catch (const InfeasibleError& e) {
      if (!(scenario.relax > 0.0)) throw;
      try {
        fit = estimate_year(x, y, scenario.relaxed(scenario.relax), prior, ratio);
      } catch (const InfeasibleError& again) {
        throw InfeasibleError(again.rows(), x.year);
      }
      fit.relaxed = true;
      result.relaxed_years.push_back(x.year);
    }
    prior = fit.matrix;
    result.matrices.push_back(fit.matrix);
    result.residuals.push_back(fit.residual);
    result.active_constraints.push_back(std::move(fit.active));
  }
  return result;
}

}  // namespace mpc
