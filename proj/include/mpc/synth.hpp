#ifndef MPC_SYNTH_HPP
#define MPC_SYNTH_HPP

// Ground-truth market generator. Every lot walks the true transition matrices
// on its own random stream; its ownership changes are written out as
// transactions whose evidence fields (contractor flag, adjacency, lot counts)
// make the categorization rules recover the true category.

#include "mpc/core.hpp"
#include "mpc/ingestion.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace mpc {

struct SynthSpec {
  long platted = 0;
  std::array<long, kNumCategories> initial{};  // lots per category at start_year
  int start_year = 2000;
  TransitionMatrixd matrix;                      // year field ignored
  std::map<int, TransitionMatrixd> regime_changes;  // in force from the key year on
  std::vector<TransitionMatrixd> per_year;       // overrides the above when non-empty
  std::uint64_t seed = 0;
  int builder_pool = 25;

  /// Throws std::invalid_argument when counts do not sum to platted or any
  /// matrix is invalid.
  void check(int years) const;
  /// True matrix for the step starting in `year`.
  TransitionMatrixd matrix_for(int year) const;
};

struct SynthOutput {
  std::vector<LotHistory> lots;
  std::vector<AnnualObservation> observations;  // start_year .. start_year + years
  std::vector<TransitionMatrixd> true_matrices;  // one per step
  /// labels[lot][i]: true category at the end of start_year + i.
  std::vector<std::vector<OwnerCategory>> labels;
};

SynthOutput simulate(const SynthSpec& spec, int years);

/// Initial counts propagated through the true matrices: years + 1 states.
std::vector<StateVectord> expected_trajectory(const SynthSpec& spec, int years);

}  // namespace mpc

#endif  // MPC_SYNTH_HPP
