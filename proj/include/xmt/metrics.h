#ifndef XMT_METRICS_H_
#define XMT_METRICS_H_

#include <memory>
#include <string>
#include <vector>

#include "xmt/types.h"

namespace xmt {

struct BleuParams {
  int max_n = 4;
  double smoothing_epsilon = 0.01;
};

// Sentence BLEU with clipped n-gram precisions floored at
// smoothing_epsilon, uniform weights over orders 1..min(max_n, |hyp|),
// and a closest-reference-length brevity penalty (length ties favor the
// shorter reference). Clipping uses the per-reference maximum count.
double sentence_bleu(const TokenSeq& hyp, const std::vector<TokenSeq>& refs,
                     const BleuParams& p = {});

// Character n-gram F_beta averaged over orders 1..n_max. Whitespace is
// removed; characters are Unicode codepoints; orders where hyp and ref
// both have no n-grams are skipped. Multiple references: maximum score.
double chrf(const std::string& hyp, const std::vector<std::string>& refs,
            int n_max = 6, double beta = 2.0);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

// Unigram alignment in stages (exact, suffix-stem, lexicon synonym),
// F_mean = P*R / (alpha*P + (1-alpha)*R), fragmentation penalty
// gamma*(chunks/matches)^beta. A single chunk incurs no penalty, so
// identical sentences score exactly 1.
double meteor_lite(const TokenSeq& hyp, const TokenSeq& ref,
                   const MeteorParams& p = {},
                   const ReplacementLexicon* lexicon = nullptr);

// Greedy soft matching: precision = mean over hyp tokens of the best
// cosine (clamped at 0) against ref tokens, recall symmetric, score =
// harmonic mean. Pairs with an out-of-vocabulary side use the
// exact-match indicator instead of cosine.
double greedy_embed_match(const TokenSeq& hyp, const TokenSeq& ref,
                          const EmbeddingTable& emb);

struct MetricOptions {
  BleuParams bleu;
  int chrf_n = 6;
  double chrf_beta = 2.0;
  MeteorParams meteor;
  std::shared_ptr<const ReplacementLexicon> lexicon;  // meteor synonyms
  std::shared_ptr<const EmbeddingTable> embeddings;   // embed metric
};

// Builds the sample-level metric named "bleu", "chrf", "meteor" or
// "embed". chrf/meteor/embed take the maximum over references. Scoring a
// sample without references throws DataError naming the sample.
MetricFn make_metric(const std::string& name, const MetricOptions& opts = {});

enum class PseudoRefMode { kFilePseudoRef, kWbw };

// Adapts a reference-based metric to reference-free use: the sample's
// references are replaced by its pseudo_ref field (file mode) or by the
// word-by-word translation of its source (wbw mode).
MetricFn make_reference_free(const MetricFn& base, PseudoRefMode mode,
                             std::shared_ptr<const WbwDictionary> dict = nullptr);

// z-scores with population standard deviation; constant input maps to
// all zeros. Requires at least two values.
std::vector<double> zscore_scores(const std::vector<double>& scores);

// Scores every sample; parallel over samples, results in input order.
std::vector<double> score_dataset(const MetricFn& m, const std::vector<Sample>& samples);

}  // namespace xmt

#endif  // XMT_METRICS_H_
