#ifndef XMT_XEVAL_H_
#define XMT_XEVAL_H_

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xmt/explain.h"
#include "xmt/types.h"

namespace xmt {

// Plausibility: agreement of per-token error scores with 0/1 gold labels.
// All four use stable (score descending, index ascending) ranking.

// Mann-Whitney AUC with midranks for ties. Throws Error when labels are
// single-class (callers count those samples as skipped).
double auc(const std::vector<double>& error_scores, const std::vector<int>& labels);

// Mean precision at the rank of each positive. Requires >= 1 positive.
double average_precision(const std::vector<double>& error_scores,
                         const std::vector<int>& labels);

// Recall at K where K = number of gold positives. Requires >= 1 positive.
double recall_at_topk(const std::vector<double>& error_scores,
                      const std::vector<int>& labels);

// 1 iff the top-ranked token is a gold positive. Requires >= 1 positive.
int accuracy_at_1(const std::vector<double>& error_scores,
                  const std::vector<int>& labels);

enum class RemovalOrder { kMoRF, kLeRF };

struct PerturbationCurve {
  RemovalOrder order = RemovalOrder::kMoRF;
  std::vector<double> scores;  // f(x^0) .. f(x^L)
};

// Area over the perturbation curve: tokens of the explained segment are
// deleted one at a time in relevance order (descending for MoRF,
// ascending for LeRF, ties by index); returns
// (1/(L+1)) * sum_k (f(x^0) - f(x^k)) and the curve itself.
std::pair<double, PerturbationCurve> aopc(const MetricFn& m, const Sample& s,
                                          const Explanation& e, int steps,
                                          RemovalOrder order);

// Trapezoidal area between the LeRF and MoRF curves over a normalized
// step axis; positive when MoRF degrades the metric faster.
double degradation_area(const MetricFn& m, const Sample& s, const Explanation& e,
                        int steps);

// 1 iff keeping only the k most relevant tokens moves the score by at
// most delta.
int posthoc_accuracy(const MetricFn& m, const Sample& s, const Explanation& e,
                     int k, double delta);

struct PlausibilityReport {
  struct Row {
    std::string id;
    double auc = 0;
    double ap = 0;
    double recall_topk = 0;
    int acc1 = 0;
  };
  std::vector<Row> rows;
  int skipped = 0;
  std::map<std::string, int> skip_reasons;
  double mean_auc = 0;
  double mean_ap = 0;
  double mean_recall_topk = 0;
  double mean_acc1 = 0;
};

using Explainer = std::function<Explanation(const MetricFn&, const Sample&, Segment)>;

// Scores explainer output against gold word labels of the chosen segment
// (hyp or src). Samples without labels or with single-class labels are
// skipped and counted; means cover evaluated samples only. Throws when no
// sample is evaluable.
PlausibilityReport plausibility_report(const std::vector<Sample>& dataset,
                                       const Explainer& explainer, const MetricFn& m,
                                       Segment seg);

}  // namespace xmt

#endif  // XMT_XEVAL_H_
