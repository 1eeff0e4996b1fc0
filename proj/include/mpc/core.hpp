#ifndef MPC_CORE_HPP
#define MPC_CORE_HPP

// Absorbing, time-varying Markov model of lot ownership.
//
// The state is a row vector of unpermitted lots per owner category plus the
// cumulative permit count; one step advances it by one calendar year:
//
//     x_{t+1} = x_t * P_t
//
// Everything here is a value type or a pure function and is templated on the
// scalar so the same code runs on double (the default) or long double.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpc {

inline constexpr int kNumCategories = 5;
inline constexpr int kNumFree = 14;

/// Owner categories in canonical (F, B, P, A, R) order. Permits is absorbing.
enum class OwnerCategory : int {
  Flippers = 0,
  Builders = 1,
  Prospects = 2,
  Adjacents = 3,
  Permits = 4,
};

inline constexpr std::array<OwnerCategory, kNumCategories> kAllCategories = {
    OwnerCategory::Flippers, OwnerCategory::Builders, OwnerCategory::Prospects,
    OwnerCategory::Adjacents, OwnerCategory::Permits};

constexpr int index(OwnerCategory c) { return static_cast<int>(c); }

constexpr OwnerCategory category_at(int i) {
  return static_cast<OwnerCategory>(i);
}

constexpr std::string_view short_name(OwnerCategory c) {
  constexpr std::array<std::string_view, kNumCategories> names = {"F", "B", "P",
                                                                  "A", "R"};
  return names[static_cast<std::size_t>(index(c))];
}

constexpr std::string_view long_name(OwnerCategory c) {
  constexpr std::array<std::string_view, kNumCategories> names = {
      "Flippers", "Builders", "Prospects", "Adjacents", "Permits"};
  return names[static_cast<std::size_t>(index(c))];
}

/// Accepts "F", "flippers", "Flippers", ... Throws std::invalid_argument.
OwnerCategory parse_category(std::string_view text);

/// Only Builders and Prospects lots can move straight to Permits.
constexpr bool can_permit(OwnerCategory c) {
  return c == OwnerCategory::Builders || c == OwnerCategory::Prospects;
}

/// (from, to) of a free transition probability.
struct Transition {
  OwnerCategory from;
  OwnerCategory to;

  friend constexpr bool operator==(Transition, Transition) = default;
};

/// The 14 free off-diagonal positions, row-major in canonical order. The
/// diagonal of each row is whatever the row's free entries leave over.
inline constexpr std::array<Transition, kNumFree> kFreeParameters = [] {
  std::array<Transition, kNumFree> out{};
  std::size_t n = 0;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < kNumCategories; ++c) {
      if (r == c) continue;
      if (c == index(OwnerCategory::Permits) && !can_permit(category_at(r)))
        continue;
      out[n++] = {category_at(r), category_at(c)};
    }
  }
  return out;
}();

/// Position of (from, to) in kFreeParameters, or nullopt when the entry is a
/// diagonal, a structural zero, or part of the absorbing row.
constexpr std::optional<int> free_index(OwnerCategory from, OwnerCategory to) {
  for (int k = 0; k < kNumFree; ++k) {
    if (kFreeParameters[static_cast<std::size_t>(k)] == Transition{from, to})
      return k;
  }
  return std::nullopt;
}

constexpr bool is_structural_zero(int row, int col) {
  if (row == index(OwnerCategory::Permits)) return col != row;
  return col == index(OwnerCategory::Permits) && !can_permit(category_at(row));
}

std::string transition_label(Transition t);  // "B->R"

template <typename Scalar>
using CategoryVector = Eigen::Matrix<Scalar, 1, kNumCategories>;
template <typename Scalar>
using SquareMatrix = Eigen::Matrix<Scalar, kNumCategories, kNumCategories>;
template <typename Scalar>
using FreeVector = Eigen::Matrix<Scalar, kNumFree, 1>;

/// Expected lots per category at the end of `year`.
template <typename Scalar = double>
struct StateVector {
  CategoryVector<Scalar> counts = CategoryVector<Scalar>::Zero();
  int year = 0;

  Scalar operator[](OwnerCategory c) const { return counts(index(c)); }
  Scalar& operator[](OwnerCategory c) { return counts(index(c)); }
  Scalar total() const { return counts.sum(); }
  Scalar permits() const { return counts(index(OwnerCategory::Permits)); }

  friend bool operator==(const StateVector& a, const StateVector& b) {
    return a.year == b.year && a.counts == b.counts;
  }
};

/// One-year transition probabilities, applied to the state of `year`.
template <typename Scalar = double>
struct TransitionMatrix {
  SquareMatrix<Scalar> entries = SquareMatrix<Scalar>::Identity();
  int year = 0;

  Scalar operator()(OwnerCategory from, OwnerCategory to) const {
    return entries(index(from), index(to));
  }
  Scalar& operator()(OwnerCategory from, OwnerCategory to) {
    return entries(index(from), index(to));
  }
};

using StateVectord = StateVector<double>;
using TransitionMatrixd = TransitionMatrix<double>;

inline constexpr double kRowSumTolerance = 1e-9;

enum class Rule {
  NonFinite,
  OutOfRange,
  RowSum,
  StructuralZero,
  AbsorbingRow,
};

std::string_view rule_name(Rule r);

struct Violation {
  int row = 0;
  int col = 0;  // -1 for row-level rules
  Rule rule = Rule::RowSum;
  double deviation = 0.0;

  std::string describe() const;
};

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Every invariant breach of `m`; empty iff `m` is a valid transition matrix.
template <typename Scalar>
std::vector<Violation> validate(const TransitionMatrix<Scalar>& m) {
  std::vector<Violation> out;
  const auto& e = m.entries;
  constexpr int absorbing = index(OwnerCategory::Permits);
  for (int r = 0; r < kNumCategories; ++r) {
    for (int c = 0; c < kNumCategories; ++c) {
      const double v = static_cast<double>(e(r, c));
      if (!std::isfinite(v)) {
        out.push_back({r, c, Rule::NonFinite, 0.0});
        continue;
      }
      if (r == absorbing) {
        const double want = (c == absorbing) ? 1.0 : 0.0;
        if (v != want) out.push_back({r, c, Rule::AbsorbingRow, v - want});
        continue;
      }
      if (is_structural_zero(r, c) && v != 0.0) {
        out.push_back({r, c, Rule::StructuralZero, v});
      } else if (v < 0.0) {
        out.push_back({r, c, Rule::OutOfRange, v});
      } else if (v > 1.0) {
        out.push_back({r, c, Rule::OutOfRange, v - 1.0});
      }
    }
    const double sum = static_cast<double>(e.row(r).sum());
    if (std::isfinite(sum) && std::abs(sum - 1.0) > kRowSumTolerance)
      out.push_back({r, -1, Rule::RowSum, sum - 1.0});
  }
  return out;
}

template <typename Scalar>
bool is_valid(const TransitionMatrix<Scalar>& m) {
  return validate(m).empty();
}

/// Advances `state` by one year. Throws ValidationError for an invalid matrix
/// and std::invalid_argument for a year mismatch or negative counts.
template <typename Scalar>
StateVector<Scalar> step(const StateVector<Scalar>& state,
                         const TransitionMatrix<Scalar>& matrix) {
  if (auto v = validate(matrix); !v.empty()) throw ValidationError(std::move(v));
  if (state.year != matrix.year) {
    throw std::invalid_argument("step: state year " + std::to_string(state.year) +
                                " does not match matrix year " +
                                std::to_string(matrix.year));
  }
  if ((state.counts.array() < Scalar(0)).any() || !state.counts.allFinite())
    throw std::invalid_argument("step: state counts must be finite and >= 0");

  StateVector<Scalar> next;
  next.counts.noalias() = state.counts * matrix.entries;
  // Round-off can push an exact zero a hair below; counts stay >= 0.
  next.counts = next.counts.cwiseMax(Scalar(0));
  next.year = state.year + 1;
  return next;
}

/// Permits issued between two consecutive yearly states.
template <typename Scalar>
Scalar annual_permits(const StateVector<Scalar>& prev,
                      const StateVector<Scalar>& next) {
  if (next.year != prev.year + 1) {
    throw std::invalid_argument("annual_permits: years " +
                                std::to_string(prev.year) + " and " +
                                std::to_string(next.year) +
                                " are not consecutive");
  }
  const Scalar diff = next.permits() - prev.permits();
  using std::abs;
  using std::max;
  const Scalar slack =
      Scalar(kRowSumTolerance) * max(Scalar(1), max(abs(prev.total()), abs(next.total())));
  if (diff < -slack)
    throw std::invalid_argument("annual_permits: cumulative permits decreased");
  return max(diff, Scalar(0));
}

/// Fraction of platted lots that are permitted. Lots not in the state (never
/// sold) may make the state total fall short of `platted`, never exceed it.
template <typename Scalar>
Scalar buildout_pct(const StateVector<Scalar>& state, long platted) {
  if (platted <= 0)
    throw std::invalid_argument("buildout_pct: platted must be positive");
  const Scalar p = static_cast<Scalar>(platted);
  if (state.total() > p * (Scalar(1) + Scalar(kRowSumTolerance))) {
    throw std::invalid_argument("buildout_pct: state holds more lots than platted");
  }
  return state.permits() / p;
}

// Free-parameter views of a matrix.

template <typename Scalar>
FreeVector<Scalar> free_parameters(const TransitionMatrix<Scalar>& m) {
  FreeVector<Scalar> theta;
  for (int k = 0; k < kNumFree; ++k) {
    const auto t = kFreeParameters[static_cast<std::size_t>(k)];
    theta(k) = m(t.from, t.to);
  }
  return theta;
}

/// Builds a matrix whose off-diagonals are `theta` and whose diagonals take up
/// the remainder of each row. The diagonal may come out negative when the free
/// entries of a row sum past one; callers normalize or validate.
template <typename Scalar>
TransitionMatrix<Scalar> from_free_parameters(const FreeVector<Scalar>& theta,
                                              int year) {
  TransitionMatrix<Scalar> m;
  m.entries.setZero();
  m.year = year;
  for (int k = 0; k < kNumFree; ++k) {
    const auto t = kFreeParameters[static_cast<std::size_t>(k)];
    m(t.from, t.to) = theta(k);
  }
  for (int r = 0; r < 4; ++r) m.entries(r, r) = Scalar(1) - m.entries.row(r).sum();
  m(OwnerCategory::Permits, OwnerCategory::Permits) = Scalar(1);
  return m;
}

}  // namespace mpc

#endif  // MPC_CORE_HPP
