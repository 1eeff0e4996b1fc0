#include <doctest.h>

#include "mpc/core.hpp"

#include <cmath>
#include <random>

using namespace mpc;

namespace {

StateVectord state(double f, double b, double p, double a, double r, int year = 2000) {
  StateVectord s;
  s.counts << f, b, p, a, r;
  s.year = year;
  return s;
}

TransitionMatrixd identity(int year = 2000) {
  TransitionMatrixd m;
  m.year = year;
  return m;
}

}  // namespace

TEST_CASE("free parameter layout") {
  CHECK(kFreeParameters.size() == 14);
  int per_row[5] = {};
  for (auto t : kFreeParameters) {
    CHECK(t.from != t.to);
    CHECK_FALSE(is_structural_zero(index(t.from), index(t.to)));
    ++per_row[index(t.from)];
  }
  CHECK(per_row[0] == 3);
  CHECK(per_row[1] == 4);
  CHECK(per_row[2] == 4);
  CHECK(per_row[3] == 3);
  CHECK(per_row[4] == 0);
  CHECK_FALSE(free_index(OwnerCategory::Flippers, OwnerCategory::Permits).has_value());
  CHECK_FALSE(free_index(OwnerCategory::Adjacents, OwnerCategory::Permits).has_value());
  CHECK(free_index(OwnerCategory::Builders, OwnerCategory::Permits).has_value());
}

TEST_CASE("category names round-trip") {
  for (auto c : kAllCategories) {
    CHECK(parse_category(short_name(c)) == c);
    CHECK(parse_category(long_name(c)) == c);
  }
  CHECK(parse_category("builders") == OwnerCategory::Builders);
  CHECK_THROWS_AS(parse_category("X"), std::invalid_argument);
  CHECK(transition_label({OwnerCategory::Builders, OwnerCategory::Permits}) == "B->R");
}

TEST_CASE("step on identity keeps the state") {
  const auto next = step(state(10, 20, 30, 40, 100), identity());
  CHECK(next.counts == state(10, 20, 30, 40, 100).counts);
  CHECK(next.year == 2001);
}

TEST_CASE("step with half of builders permitting") {
  auto m = identity();
  m(OwnerCategory::Builders, OwnerCategory::Builders) = 0.5;
  m(OwnerCategory::Builders, OwnerCategory::Permits) = 0.5;
  const auto prev = state(10, 20, 30, 40, 100);
  const auto next = step(prev, m);
  CHECK(next.counts == state(10, 10, 30, 40, 110).counts);
  CHECK(annual_permits(prev, next) == 10.0);
}

TEST_CASE("permits-only state is a fixed point") {
  auto m = identity();
  m.entries.row(1) << 0.1, 0.2, 0.3, 0.1, 0.3;
  m.entries.row(2) << 0.0, 0.1, 0.6, 0.0, 0.3;
  const auto next = step(state(0, 0, 0, 0, 200), m);
  CHECK(next.counts == state(0, 0, 0, 0, 200).counts);
}

TEST_CASE("step rejects bad input") {
  auto m = identity();
  m(OwnerCategory::Flippers, OwnerCategory::Permits) = 0.1;
  m(OwnerCategory::Flippers, OwnerCategory::Flippers) = 0.9;
  CHECK_THROWS_AS(step(state(1, 1, 1, 1, 1), m), ValidationError);
  CHECK_THROWS_AS(step(state(1, 1, 1, 1, 1, 1999), identity()), std::invalid_argument);
  CHECK_THROWS_AS(step(state(-1, 1, 1, 1, 1), identity()), std::invalid_argument);
}

TEST_CASE("annual permits") {
  CHECK(annual_permits(state(0, 0, 0, 0, 100, 2000), state(0, 0, 0, 0, 110, 2001)) == 10.0);
  CHECK(annual_permits(state(0, 0, 0, 0, 100, 2000), state(0, 0, 0, 0, 100, 2001)) == 0.0);
  CHECK_THROWS(annual_permits(state(0, 0, 0, 0, 100, 2000), state(0, 0, 0, 0, 100, 2002)));
  CHECK_THROWS(annual_permits(state(0, 0, 0, 0, 100, 2000), state(0, 0, 0, 0, 90, 2001)));
}

TEST_CASE("buildout") {
  CHECK(buildout_pct(state(0, 0, 0, 0, 100), 100) == 1.0);
  CHECK(buildout_pct(state(50, 50, 0, 0, 0), 100) == 0.0);
  CHECK(buildout_pct(state(0, 10, 7, 0, 83), 100) == doctest::Approx(0.83));
  CHECK_THROWS(buildout_pct(state(0, 0, 0, 0, 1), 0));
  CHECK_THROWS(buildout_pct(state(100, 0, 0, 0, 1), 100));
}

TEST_CASE("validate") {
  CHECK(validate(identity()).empty());

  auto fr = identity();
  fr(OwnerCategory::Flippers, OwnerCategory::Permits) = 0.1;
  fr(OwnerCategory::Flippers, OwnerCategory::Flippers) = 0.9;
  auto v = validate(fr);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == Rule::StructuralZero);

  auto short_row = identity();
  short_row(OwnerCategory::Prospects, OwnerCategory::Prospects) = 0.9;
  v = validate(short_row);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == Rule::RowSum);
  CHECK(v[0].row == 2);
  CHECK(std::abs(v[0].deviation) == doctest::Approx(0.1));

  auto leaky = identity();
  leaky.entries(4, 4) = 0.5;
  leaky.entries(4, 2) = 0.5;
  bool absorbing = false;
  for (const auto& x : validate(leaky)) absorbing = absorbing || x.rule == Rule::AbsorbingRow;
  CHECK(absorbing);

  auto negative = identity();
  negative.entries(1, 1) = 1.2;
  negative.entries(1, 0) = -0.2;
  bool range = false;
  for (const auto& x : validate(negative)) range = range || x.rule == Rule::OutOfRange;
  CHECK(range);
}

TEST_CASE("free parameter round trip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  FreeVector<double> theta;
  for (int k = 0; k < kNumFree; ++k) theta(k) = u(rng);
  const auto m = from_free_parameters(theta, 2010);
  CHECK(is_valid(m));
  CHECK(m.year == 2010);
  CHECK(free_parameters(m) == theta);
}

TEST_CASE("float scalar instantiation") {
  TransitionMatrix<float> m;
  StateVector<float> s;
  s.counts << 1.f, 2.f, 3.f, 4.f, 5.f;
  const auto next = step(s, m);
  CHECK(next.total() == doctest::Approx(15.f));
}
