#ifndef XMT_DISENTANGLE_H_
#define XMT_DISENTANGLE_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xmt/types.h"

namespace xmt {

// Interpretable factor scores. All are per-sample regressors for the
// metric-disentanglement regression.

// Word-overlap factor: unigram BLEU (word order deliberately ignored).
double lex_score(const TokenSeq& hyp, const TokenSeq& ref);

// Semantic factor: the human sentence score. Throws DataError when the
// sample carries none (callers exclude such samples and count them).
double sem_score(const Sample& s);

// Embedding factor: cosine of mean token embeddings (OOV tokens skipped;
// both-sides-all-OOV degrades to a sequence-equality indicator). The raw
// cosine is kept (may be negative); factors are z-scored downstream.
double emb_score(const TokenSeq& hyp, const TokenSeq& ref, const EmbeddingTable& emb);

// Length-ratio factor: |hyp| / |ref|.
double length_ratio(const TokenSeq& hyp, const TokenSeq& ref);

struct RegressorSet {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // z-scored; constant columns all-zero
  std::vector<bool> constant_flags;
};

struct FitResult {
  std::vector<double> coefficients;  // one per column
  double intercept = 0;
  double r_squared = 0;
  bool ridge_applied = false;
};

// Least squares with intercept; R^2 = 1 - SS_res / SS_tot. Rank-deficient
// designs are solved with ridge (lambda 1e-8) and flagged. Requires
// rows >= columns + 1 and non-constant y.
FitResult ols_fit(const RegressorSet& x, const std::vector<double>& y);

struct DisentangleReport {
  std::vector<std::string> factor_names;
  std::vector<double> coefficients;
  std::vector<bool> constant_factors;
  double intercept = 0;
  double r_squared = 0;
  bool ridge_applied = false;
  int excluded_samples = 0;
  // Frozen normalization parameters (mean, population std) per factor and
  // for the metric (key "metric"), so scores from a run can be reproduced later.
  std::map<std::string, std::pair<double, double>> zscore_params;
};

// Computes the chosen factors (subset of lex, sem, emb, lenr) and the
// metric over the dataset, z-scores everything, fits, and reports.
// Samples missing what a factor needs are excluded and counted.
DisentangleReport disentangle_report(const std::vector<Sample>& dataset,
                                     const MetricFn& m,
                                     const std::vector<std::string>& factors,
                                     const EmbeddingTable* emb = nullptr);

}  // namespace xmt

#endif  // XMT_DISENTANGLE_H_
