#ifndef XMT_INVERSE_H_
#define XMT_INVERSE_H_

#include <cstdint>
#include <vector>

#include "xmt/types.h"

namespace xmt {

struct InverseParams {
  int iterations = 30;     // x
  int beam = 8;            // b
  double perturb_prob = 0.15;  // p, in (0,1)
  int kmax = 10;           // candidate depth per position
};

// Per-token replacement index: 0 = keep, j >= 1 = j-th ranked candidate.
using PerturbMask = std::vector<int>;

// Ranked candidates per hypothesis position.
using CandidateTable = std::vector<TokenSeq>;

// Lexicon candidates in file order, then embedding neighbors by
// descending cosine (ties by token), deduplicated, the token itself
// excluded, truncated to kmax. Empty when there are no candidates.
TokenSeq rank_replacements(const std::string& token, const ReplacementLexicon* lexicon,
                           const EmbeddingTable* emb, int kmax);

CandidateTable build_candidates(const TokenSeq& hyp, const ReplacementLexicon* lexicon,
                                const EmbeddingTable* emb, int kmax);

// Position-wise substitution of the sample's hypothesis. Mask entries
// beyond a position's candidate count clamp to the last candidate;
// positions without candidates are never perturbed.
TokenSeq apply_mask(const Sample& s, const PerturbMask& mask,
                    const CandidateTable& candidates);

struct InverseResult {
  double target = 0;
  TokenSeq hyp_star;
  double achieved_score = 0;
  double objective = 0;  // |target - achieved_score|
  PerturbMask mask;
  int iterations_run = 0;
  // Incumbent objective after initialization and after each iteration;
  // non-increasing by construction.
  std::vector<double> best_objective_trace;
};

// Beam search over masks minimizing |target - m(s with hyp*)|: the beam
// starts as b zero masks; each iteration mutates every beam mask
// (each position +1 with probability p, clamped), keeps the best b of
// the union (ties broken by lexicographic mask), and stops early on an
// exact hit. Returns the best mask ever seen. Deterministic given seed.
InverseResult invert(const MetricFn& m, const Sample& s, double target,
                     const InverseParams& params, const ReplacementLexicon* lexicon,
                     const EmbeddingTable* emb, std::uint64_t seed);

// One invert call per target (independent seeded runs, shared candidate
// rankings); results in target-list order.
std::vector<InverseResult> neighborhood(const MetricFn& m, const Sample& s,
                                        const std::vector<double>& targets,
                                        const InverseParams& params,
                                        const ReplacementLexicon* lexicon,
                                        const EmbeddingTable* emb, std::uint64_t seed);

}  // namespace xmt

#endif  // XMT_INVERSE_H_
