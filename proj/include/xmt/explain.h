#ifndef XMT_EXPLAIN_H_
#define XMT_EXPLAIN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "xmt/types.h"

namespace xmt {

// Per-token feature importance over one segment of a sample. Tokens are
// removed by deletion; when deletion empties the segment and the metric
// rejects the degenerate input, that evaluation scores 0.0 and a note is
// recorded here.
struct Explanation {
  Segment segment = Segment::kHyp;
  std::vector<double> relevance;
  double full_score = 0.0;
  double baseline_score = 0.0;  // segment fully removed
  std::vector<std::string> notes;
};

// Evaluates m on the sample with only the flagged tokens of `seg` kept.
// Degenerate-input errors (empty segment the metric refuses) map to 0.0;
// *degenerate is set when provided.
double score_masked(const MetricFn& m, const Sample& s, Segment seg,
                    const std::vector<char>& keep, bool* degenerate = nullptr);

// Leave-one-out: relevance_i = m(s) - m(s without token i).
Explanation erasure_explain(const MetricFn& m, const Sample& s, Segment seg);

struct LimeParams {
  int n_perturb = 1000;
  double kernel_width = 0.75;  // kernel exp(-d^2 / width^2), d = dropped fraction
  double drop_prob = 0.5;
  bool exhaustive = false;     // enumerate all 2^n masks instead of sampling
};

// Local surrogate: random keep-masks (an all-dropped draw is replaced by
// all-kept), kernel-weighted least squares on kept-indicators with
// intercept. Singular systems fall back to ridge (lambda 1e-8), noted.
// Deterministic given the seed.
Explanation lime_explain(const MetricFn& m, const Sample& s, Segment seg,
                         const LimeParams& p, std::uint64_t seed);

struct ShapleyParams {
  enum class Mode { kExact, kSampled };
  Mode mode = Mode::kExact;
  int n_perm = 2000;  // sampled mode
};

// Shapley values of the coalition game v(S) = m(s with only S kept).
// Exact mode enumerates all subsets (segment length <= 12); sampled mode
// averages marginal contributions over seeded random permutations.
Explanation shapley_explain(const MetricFn& m, const Sample& s, Segment seg,
                            const ShapleyParams& p, std::uint64_t seed);

// Error likelihood = negated relevance (errors depress the score).
std::vector<double> to_error_scores(const Explanation& e);

// RNG stream labels (second argument of derive_seed) per sampling op,
// shared by the parallel and serial implementations so both reproduce
// identical draws.
inline constexpr std::uint64_t kLimeSeedStream = 0x11;
inline constexpr std::uint64_t kShapSeedStream = 0x22;

}  // namespace xmt

#endif  // XMT_EXPLAIN_H_
