#include "mpc/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace mpc {

void SynthSpec::check(int years) const {
  if (years < 0) throw std::invalid_argument("synth: years must be >= 0");
  long sum = 0;
  for (long c : initial) {
    if (c < 0) throw std::invalid_argument("synth: initial counts must be >= 0");
    sum += c;
  }
  if (sum != platted) {
    throw std::invalid_argument("synth: initial counts sum to " + std::to_string(sum) +
                                ", platted is " + std::to_string(platted));
  }
  if (builder_pool < 1) throw std::invalid_argument("synth: builder_pool must be >= 1");
  if (!per_year.empty() && static_cast<int>(per_year.size()) < years)
    throw std::invalid_argument("synth: fewer per-year matrices than simulated years");
  for (int y = 0; y < years; ++y) {
    if (auto v = validate(matrix_for(start_year + y)); !v.empty()) throw ValidationError(std::move(v));
  }
}

TransitionMatrixd SynthSpec::matrix_for(int year) const {
  TransitionMatrixd m;
  if (!per_year.empty()) {
    m = per_year.at(static_cast<std::size_t>(year - start_year));
  } else {
    m = matrix;
    for (const auto& [from, change] : regime_changes)
      if (year >= from) m = change;
  }
  m.year = year;
  return m;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Date random_date(std::mt19937_64& rng, int year) {
  const int month = 1 + static_cast<int>(rng() % 12);
  const int day = 1 + static_cast<int>(rng() % 28);
  return {year, month, day};
}

std::string lot_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "L%06zu", i + 1);
  return buf;
}

TransactionRecord purchase(const std::string& lot_id, OwnerCategory buyer, int seq, Date date,
                           std::mt19937_64& rng, int builder_pool) {
  TransactionRecord t;
  t.lot_id = lot_id;
  t.date = date;
  t.price = std::round(15000.0 + 60000.0 * uniform01(rng));
  t.instrument = "WARRANTY DEED";
  const std::string tag = lot_id + "-" + std::to_string(seq);
  switch (buyer) {
    case OwnerCategory::Builders: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "BLD-%03d", static_cast<int>(rng() % static_cast<unsigned>(builder_pool)));
      t.buyer_id = buf;
      t.buyer_is_contractor = true;
      t.owner_lot_count = 3;
      break;
    }
    case OwnerCategory::Flippers:
      t.buyer_id = "FLP-" + tag;
      t.owner_lot_count = 2;
      break;
    case OwnerCategory::Adjacents:
      t.buyer_id = "ADJ-" + tag;
      t.adjacent_to_owner_residence = true;
      t.owner_lot_count = 2;
      break;
    default:
      t.buyer_id = "PRS-" + tag;
      t.owner_lot_count = 1;
      break;
  }
  return t;
}

int sample_row(const TransitionMatrixd& m, int from, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = from;
  for (int c = 0; c < kNumCategories; ++c) {
    const double p = m.entries(from, c);
    if (p <= 0.0) continue;
    acc += p;
    last = c;
    if (u < acc) return c;
  }
  return last;
}

}  // namespace

SynthOutput simulate(const SynthSpec& spec, int years) {
  spec.check(years);
  SynthOutput out;
  for (int y = 0; y < years; ++y) out.true_matrices.push_back(spec.matrix_for(spec.start_year + y));

  const auto n = static_cast<std::size_t>(spec.platted);
  out.lots.resize(n);
  out.labels.resize(n);
  std::size_t lot = 0;
  for (int c = 0; c < kNumCategories; ++c) {
    for (long j = 0; j < spec.initial[static_cast<std::size_t>(c)]; ++j, ++lot) {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(lot), 0x5157u};
      std::mt19937_64 rng(seq);
      LotHistory& h = out.lots[lot];
      h.lot_id = lot_name(lot);
      auto& labels = out.labels[lot];
      auto cat = category_at(c);
      int seq_no = 0;
      if (cat == OwnerCategory::Permits) {
        // Already permitted before the window opens; bought by its builder-resident.
        h.transactions.push_back(purchase(h.lot_id, OwnerCategory::Prospects, seq_no++,
                                          random_date(rng, spec.start_year - 1), rng, spec.builder_pool));
        h.permit_year = spec.start_year - 1;
      } else {
        h.transactions.push_back(purchase(h.lot_id, cat, seq_no++, random_date(rng, spec.start_year), rng,
                                          spec.builder_pool));
      }
      labels.push_back(cat);
      for (int y = 0; y < years; ++y) {
        const int year = spec.start_year + y + 1;
        const auto next = category_at(sample_row(out.true_matrices[static_cast<std::size_t>(y)], index(cat), rng));
        if (next != cat) {
          if (next == OwnerCategory::Permits) {
            h.permit_year = year;
            h.built_year = year + 1;
          } else {
            h.transactions.push_back(
                purchase(h.lot_id, next, seq_no++, random_date(rng, year), rng, spec.builder_pool));
          }
          cat = next;
        }
        labels.push_back(cat);
      }
    }
  }

  // Tally the true trajectories.
  for (int i = 0; i <= years; ++i) {
    AnnualObservation obs;
    obs.year = spec.start_year + i;
    obs.category_counts.year = obs.year;
    int custom = 0;
    int spec_built = 0;
    for (std::size_t l = 0; l < n; ++l) {
      const auto& labels = out.labels[l];
      const int now = index(labels[static_cast<std::size_t>(i)]);
      obs.category_counts.counts(now) += 1.0;
      if (i == 0 && now != index(OwnerCategory::Permits)) obs.entries(now) += 1.0;
      if (i > 0 && now == index(OwnerCategory::Permits) &&
          labels[static_cast<std::size_t>(i - 1)] != OwnerCategory::Permits)
        obs.permits_issued += 1.0;
      // Built this year, hence permitted the year before by the owner of two years back.
      if (i >= 2 && labels[static_cast<std::size_t>(i - 1)] == OwnerCategory::Permits &&
          labels[static_cast<std::size_t>(i - 2)] != OwnerCategory::Permits) {
        const auto holder = labels[static_cast<std::size_t>(i - 2)];
        if (holder == OwnerCategory::Prospects) ++custom;
        if (holder == OwnerCategory::Builders) ++spec_built;
      }
    }
    if (custom + spec_built > 0)
      obs.custom_ratio = static_cast<double>(custom) / static_cast<double>(custom + spec_built);
    obs.residual = 0;
    out.observations.push_back(std::move(obs));
  }
  return out;
}

std::vector<StateVectord> expected_trajectory(const SynthSpec& spec, int years) {
  spec.check(years);
  std::vector<StateVectord> out;
  StateVectord x;
  x.year = spec.start_year;
  for (int c = 0; c < kNumCategories; ++c) x.counts(c) = static_cast<double>(spec.initial[static_cast<std::size_t>(c)]);
  out.push_back(x);
  for (int y = 0; y < years; ++y) {
    x = step(x, spec.matrix_for(spec.start_year + y));
    out.push_back(x);
  }
  return out;
}

}  // namespace mpc
