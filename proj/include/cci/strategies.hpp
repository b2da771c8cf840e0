// Multi-microphone strategies layered on the slack-variable solver:
// incremental pre-conditioning (grow the microphone set one at a time,
// carrying estimates forward as slack initializers) and the pairwise
// ensemble (solve all two-microphone sub-problems, then average the
// candidate responses per microphone).
#ifndef CCI_STRATEGIES_HPP_
#define CCI_STRATEGIES_HPP_

#include "cci/solvers.hpp"

namespace cci {

enum class Pairing { AllPairs, RandomMatching };
enum class CandidateNorm { MaxTap, UnitL1 };

struct StrategyConfig {
  SolverConfig base;
  std::uint64_t mic_order_seed = 0;  // incremental join order / matching draw
  Pairing pairing = Pairing::AllPairs;
  CandidateNorm candidate_norm = CandidateNorm::MaxTap;
  int jobs = 1;  // concurrent pair solves in the ensemble
};

// Start from a random pair, then add one microphone per step; solved
// microphones keep their previous estimates as slack initializers and every
// channel is re-optimized jointly at each step. The per-step L1 budget is
// base.epsilon scaled by the fraction of microphones present. With N = 2 this
// is exactly the plain solver.
SolverResult incremental_il1c(const ObservationSet& obs, const StrategyConfig& cfg);

// Solve each selected microphone pair independently (budget 2/N of
// base.epsilon), normalize every candidate response, and average the
// candidates of each microphone elementwise. Failed pairs are dropped; a
// microphone left with no candidate is an ensemble failure.
SolverResult ensemble_il1c(const ObservationSet& obs, const StrategyConfig& cfg);

}  // namespace cci

#endif  // CCI_STRATEGIES_HPP_
