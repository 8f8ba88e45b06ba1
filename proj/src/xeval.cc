#include "xmt/xeval.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmt/parallel.h"

namespace xmt {
namespace {

void check_lengths(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw UsageError("scores and labels differ in length");
  }
  if (scores.empty()) throw UsageError("empty input");
}

int count_positives(const std::vector<int>& labels) {
  int n = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0/1");
    n += l;
  }
  return n;
}

// Indices ordered by (score descending, index ascending).
std::vector<std::size_t> ranked_indices(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return idx;
}

}  // namespace

double auc(const std::vector<double>& error_scores, const std::vector<int>& labels) {
  check_lengths(error_scores, labels);
  int n_pos = count_positives(labels);
  int n_neg = static_cast<int>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error("auc undefined: labels contain a single class");
  }

  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return error_scores[a] < error_scores[b];
  });

  // Midranks over ascending scores; rank sum of positives.
  double pos_rank_sum = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && error_scores[idx[j + 1]] == error_scores[idx[i]]) ++j;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[idx[k]] == 1) pos_rank_sum += midrank;
    }
    i = j + 1;
  }
  double u = pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(const std::vector<double>& error_scores,
                         const std::vector<int>& labels) {
  check_lengths(error_scores, labels);
  int n_pos = count_positives(labels);
  if (n_pos == 0) throw Error("average precision undefined: no positives");
  auto idx = ranked_indices(error_scores);
  double sum = 0;
  int hits = 0;
  for (std::size_t rank = 0; rank < idx.size(); ++rank) {
    if (labels[idx[rank]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / n_pos;
}

double recall_at_topk(const std::vector<double>& error_scores,
                      const std::vector<int>& labels) {
  check_lengths(error_scores, labels);
  int k = count_positives(labels);
  if (k == 0) throw Error("recall@k undefined: no positives");
  auto idx = ranked_indices(error_scores);
  int hits = 0;
  for (int rank = 0; rank < k; ++rank) {
    if (labels[idx[rank]] == 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

int accuracy_at_1(const std::vector<double>& error_scores,
                  const std::vector<int>& labels) {
  check_lengths(error_scores, labels);
  if (count_positives(labels) == 0) throw Error("accuracy@1 undefined: no positives");
  auto idx = ranked_indices(error_scores);
  return labels[idx[0]] == 1 ? 1 : 0;
}

namespace {

std::vector<std::size_t> removal_order(const Explanation& e, RemovalOrder order) {
  std::vector<std::size_t> idx(e.relevance.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return order == RemovalOrder::kMoRF ? e.relevance[a] > e.relevance[b]
                                        : e.relevance[a] < e.relevance[b];
  });
  return idx;
}

PerturbationCurve perturbation_curve(const MetricFn& m, const Sample& s,
                                     const Explanation& e, int steps,
                                     RemovalOrder order) {
  const TokenSeq& tokens = segment_tokens(s, e.segment);
  std::size_t n = tokens.size();
  if (e.relevance.size() != n) {
    throw UsageError("explanation length does not match segment length");
  }
  if (steps < 1 || steps >= static_cast<int>(n)) {
    throw UsageError("steps must satisfy 1 <= steps < segment length");
  }
  auto idx = removal_order(e, order);
  PerturbationCurve curve;
  curve.order = order;
  curve.scores.resize(steps + 1);
  parallel_for(static_cast<std::size_t>(steps) + 1, [&](std::size_t k) {
    std::vector<char> keep(n, 1);
    for (std::size_t j = 0; j < k; ++j) keep[idx[j]] = 0;
    curve.scores[k] = score_masked(m, s, e.segment, keep);
  });
  return curve;
}

}  // namespace

std::pair<double, PerturbationCurve> aopc(const MetricFn& m, const Sample& s,
                                          const Explanation& e, int steps,
                                          RemovalOrder order) {
  PerturbationCurve curve = perturbation_curve(m, s, e, steps, order);
  double f0 = curve.scores[0];
  double sum = 0;
  for (double f : curve.scores) sum += f0 - f;
  return {sum / static_cast<double>(steps + 1), std::move(curve)};
}

double degradation_area(const MetricFn& m, const Sample& s, const Explanation& e,
                        int steps) {
  PerturbationCurve morf = perturbation_curve(m, s, e, steps, RemovalOrder::kMoRF);
  PerturbationCurve lerf = perturbation_curve(m, s, e, steps, RemovalOrder::kLeRF);
  double area = 0;
  for (int k = 0; k < steps; ++k) {
    double d0 = lerf.scores[k] - morf.scores[k];
    double d1 = lerf.scores[k + 1] - morf.scores[k + 1];
    area += (d0 + d1) / 2.0;
  }
  return area / steps;
}

int posthoc_accuracy(const MetricFn& m, const Sample& s, const Explanation& e,
                     int k, double delta) {
  const TokenSeq& tokens = segment_tokens(s, e.segment);
  std::size_t n = tokens.size();
  if (e.relevance.size() != n) {
    throw UsageError("explanation length does not match segment length");
  }
  if (k < 1 || k > static_cast<int>(n)) throw UsageError("k must be in [1, length]");
  if (delta <= 0) throw UsageError("delta must be > 0");
  auto idx = removal_order(e, RemovalOrder::kMoRF);
  std::vector<char> keep(n, 0);
  for (int j = 0; j < k; ++j) keep[idx[j]] = 1;
  double kept = score_masked(m, s, e.segment, keep);
  double full = m(s);
  return std::fabs(kept - full) <= delta ? 1 : 0;
}

PlausibilityReport plausibility_report(const std::vector<Sample>& dataset,
                                       const Explainer& explainer, const MetricFn& m,
                                       Segment seg) {
  if (seg == Segment::kRef) {
    throw UsageError("plausibility needs word labels; only hyp and src carry them");
  }
  struct Slot {
    bool evaluated = false;
    std::string skip_reason;
    PlausibilityReport::Row row;
  };
  std::vector<Slot> slots(dataset.size());

  parallel_for(dataset.size(), [&](std::size_t i) {
    const Sample& s = dataset[i];
    const auto& labels_opt =
        seg == Segment::kHyp ? s.hyp_word_labels : s.src_word_labels;
    Slot& slot = slots[i];
    if (!labels_opt) {
      slot.skip_reason = "missing_labels";
      return;
    }
    const std::vector<int>& labels = *labels_opt;
    int pos = 0;
    for (int l : labels) pos += l;
    if (pos == 0 || pos == static_cast<int>(labels.size())) {
      slot.skip_reason = "single_class";
      return;
    }
    Explanation e = explainer(m, s, seg);
    if (e.relevance.size() != labels.size()) {
      throw DataError("sample '" + s.id + "': explanation length " +
                      std::to_string(e.relevance.size()) + " != label length " +
                      std::to_string(labels.size()));
    }
    std::vector<double> err = to_error_scores(e);
    slot.row.id = s.id;
    slot.row.auc = auc(err, labels);
    slot.row.ap = average_precision(err, labels);
    slot.row.recall_topk = recall_at_topk(err, labels);
    slot.row.acc1 = accuracy_at_1(err, labels);
    slot.evaluated = true;
  });

  PlausibilityReport report;
  for (const Slot& slot : slots) {
    if (slot.evaluated) {
      report.rows.push_back(slot.row);
    } else {
      ++report.skipped;
      ++report.skip_reasons[slot.skip_reason];
    }
  }
  if (report.rows.empty()) {
    throw DataError("plausibility: no evaluable samples (all skipped)");
  }
  for (const auto& row : report.rows) {
    report.mean_auc += row.auc;
    report.mean_ap += row.ap;
    report.mean_recall_topk += row.recall_topk;
    report.mean_acc1 += row.acc1;
  }
  double n = static_cast<double>(report.rows.size());
  report.mean_auc /= n;
  report.mean_ap /= n;
  report.mean_recall_topk /= n;
  report.mean_acc1 /= n;
  return report;
}

}  // namespace xmt
