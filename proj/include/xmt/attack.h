#ifndef XMT_ATTACK_H_
#define XMT_ATTACK_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xmt/types.h"

namespace xmt {

// A metric with its score range cut into k classes at quantile boundaries.
struct DiscretizedMetric {
  MetricFn base;
  int k = 0;
  std::vector<double> boundaries;  // k-1, strictly increasing
  std::vector<double> centers;     // k interval centers (outer edges = observed min/max)

  // Number of boundaries strictly below the score; monotone in score.
  int class_of(double score) const;

  // Linear interpolation between the two adjacent class centers; one-hot
  // at and beyond the outer centers. Always a valid distribution.
  std::vector<double> class_prob(double score) const;
};

struct Discretization {
  std::vector<DiscretizedMetric> metrics;
  // Samples whose class agrees across all metrics, keyed by that class.
  std::map<int, std::vector<std::string>> common_class_samples;
};

// Scores the dataset with every metric, places k-quantile boundaries
// (linear interpolation), and retains per class the samples on which all
// metrics agree. Throws DataError when a metric yields fewer than k
// distinct scores (degenerate quantiles).
Discretization discretize(const std::vector<Sample>& dataset,
                          const std::vector<MetricFn>& metrics, int k);

struct AttackConfig {
  int target_class = 0;
  int max_candidates = 50;
  double min_word_sim = 0.5;     // tau_w
  double min_sent_sim = 0.8;     // tau_s
  double max_perturb_ratio = 1.0;  // rho

  static AttackConfig fooler(int target_class);
  static AttackConfig fooler_adjusted(int target_class);  // stricter thresholds
};

struct AttackResult {
  std::string sample_id;
  bool success = false;
  TokenSeq hyp_star;
  int orig_class = 0;
  int new_class = 0;
  double orig_score = 0;
  double new_score = 0;
  int n_perturbed = 0;
  double sent_sim = 1.0;
};

// TextFooler-style greedy substitution against a discretized metric:
// tokens ranked by erasure importance of the original class probability;
// candidates (lexicon entries first, then embedding neighbors) filtered
// by word cosine >= tau_w and sentence cosine >= tau_s; first candidate
// whose argmax class probability hits target_class wins, otherwise the
// candidate maximizing the target probability is kept; stops at the
// rho*len perturbation budget. The seed only breaks exact score ties.
AttackResult greedy_attack(const DiscretizedMetric& d, const Sample& s,
                           const AttackConfig& cfg, const ReplacementLexicon* lexicon,
                           const EmbeddingTable* emb, std::uint64_t seed);

// Attacks every sample; parallel, one derived RNG stream per sample.
std::vector<AttackResult> run_campaign(const DiscretizedMetric& d,
                                       const std::vector<Sample>& samples,
                                       const AttackConfig& cfg,
                                       const ReplacementLexicon* lexicon,
                                       const EmbeddingTable* emb, std::uint64_t seed);

struct AttackStats {
  int n_total = 0;
  int n_success = 0;
  double success_rate = 0;
  // Over successful attacks only; absent when there are none.
  std::optional<double> perturbation_rate;
  std::optional<double> sentence_similarity;
};

AttackStats attack_stats(const std::vector<AttackResult>& results);

// Cosine of mean token embeddings; OOV tokens are skipped; if either side
// is entirely OOV this degrades to a sequence-equality indicator.
double sentence_similarity(const TokenSeq& a, const TokenSeq& b,
                           const EmbeddingTable* emb);

struct PerturbTemplate {
  enum class Kind { kIdentity, kDropSpan, kJumble, kNegate, kNumberSwap, kLexiconSwap };
  Kind kind = Kind::kIdentity;
  std::size_t span_start = 0;  // drop_span
  std::size_t span_len = 1;
  std::string negation_token = "not";

  static PerturbTemplate parse(const std::string& name);
  const char* name() const;
};

// Applies the template to the tokens; nullopt when inapplicable (e.g. no
// numeric token for number_swap). Jumble shuffles with the given seed.
std::optional<TokenSeq> apply_template(const PerturbTemplate& t, const TokenSeq& hyp,
                                       const ReplacementLexicon* lexicon,
                                       std::uint64_t seed);

// Checklist discrepancy s = human_delta - (m(p) - m(perturbed p)).
// Caller is responsible for putting metric and human deltas on a
// comparable (e.g. min-max normalized) scale. nullopt when the template
// does not apply to the sample.
std::optional<double> checklist_score(const MetricFn& m, const Sample& s,
                                      const PerturbTemplate& t, double human_delta,
                                      const ReplacementLexicon* lexicon = nullptr,
                                      std::uint64_t seed = 0);

struct ChecklistRun {
  struct Cell {
    std::string sample_id;
    std::string template_name;
    bool applicable = false;
    double metric_drop = 0;       // raw m(p) - m(p_hat)
    double normalized_score = 0;  // normalized human delta - normalized drop
  };
  std::vector<Cell> cells;
  std::map<std::string, double> mean_score_per_template;  // over applicable cells
  int skipped = 0;
};

// Campaign: every (sample, template) pair scored; metric drops and human
// deltas are min-max normalized over the run before differencing.
ChecklistRun run_checklist(const MetricFn& m, const std::vector<Sample>& samples,
                           const std::vector<PerturbTemplate>& templates,
                           const std::vector<double>& human_deltas,
                           const ReplacementLexicon* lexicon, std::uint64_t seed);

}  // namespace xmt

#endif  // XMT_ATTACK_H_
