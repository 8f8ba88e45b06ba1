#include "xmt/attack.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "xmt/explain.h"
#include "xmt/inverse.h"
#include "xmt/metrics.h"
#include "xmt/parallel.h"
#include "xmt/rng.h"

namespace xmt {

int DiscretizedMetric::class_of(double score) const {
  return static_cast<int>(std::lower_bound(boundaries.begin(), boundaries.end(), score) -
                          boundaries.begin());
}

std::vector<double> DiscretizedMetric::class_prob(double score) const {
  std::vector<double> p(k, 0.0);
  if (score <= centers.front()) {
    p[0] = 1.0;
    return p;
  }
  if (score >= centers.back()) {
    p[k - 1] = 1.0;
    return p;
  }
  std::size_t j = static_cast<std::size_t>(
      std::upper_bound(centers.begin(), centers.end(), score) - centers.begin() - 1);
  double pj = (centers[j + 1] - score) / (centers[j + 1] - centers[j]);
  p[j] = pj;
  p[j + 1] = 1.0 - pj;
  return p;
}

namespace {

// Quantile by linear interpolation over sorted values (inclusive scheme).
double quantile(const std::vector<double>& sorted, double q) {
  double h = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

int argmax_prob(const std::vector<double>& probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

}  // namespace

Discretization discretize(const std::vector<Sample>& dataset,
                          const std::vector<MetricFn>& metrics, int k) {
  if (k < 2) throw UsageError("discretize: k must be >= 2");
  if (dataset.empty()) throw UsageError("discretize: empty dataset");
  if (metrics.empty()) throw UsageError("discretize: no metrics");

  Discretization out;
  std::vector<std::vector<int>> classes(metrics.size());
  for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
    std::vector<double> scores = score_dataset(metrics[mi], dataset);
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i] != sorted[i - 1]) ++distinct;
    }
    if (distinct < static_cast<std::size_t>(k)) {
      throw DataError("discretize: metric '" + metrics[mi].name + "' has " +
                      std::to_string(distinct) + " distinct scores, need >= " +
                      std::to_string(k));
    }
    DiscretizedMetric d;
    d.base = metrics[mi];
    d.k = k;
    for (int j = 1; j < k; ++j) {
      d.boundaries.push_back(quantile(sorted, static_cast<double>(j) / k));
    }
    for (std::size_t j = 1; j < d.boundaries.size(); ++j) {
      if (!(d.boundaries[j] > d.boundaries[j - 1])) {
        throw DataError("discretize: metric '" + metrics[mi].name +
                        "' yields degenerate (non-increasing) quantile boundaries");
      }
    }
    d.centers.push_back((sorted.front() + d.boundaries.front()) / 2.0);
    for (std::size_t j = 1; j < d.boundaries.size(); ++j) {
      d.centers.push_back((d.boundaries[j - 1] + d.boundaries[j]) / 2.0);
    }
    d.centers.push_back((d.boundaries.back() + sorted.back()) / 2.0);

    classes[mi].reserve(dataset.size());
    for (double sc : scores) classes[mi].push_back(d.class_of(sc));
    out.metrics.push_back(std::move(d));
  }

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    int c = classes[0][i];
    bool agree = true;
    for (std::size_t mi = 1; mi < metrics.size(); ++mi) {
      if (classes[mi][i] != c) {
        agree = false;
        break;
      }
    }
    if (agree) out.common_class_samples[c].push_back(dataset[i].id);
  }
  return out;
}

AttackConfig AttackConfig::fooler(int target_class) {
  AttackConfig cfg;
  cfg.target_class = target_class;
  cfg.min_word_sim = 0.5;
  cfg.min_sent_sim = 0.8;
  cfg.max_perturb_ratio = 1.0;
  return cfg;
}

AttackConfig AttackConfig::fooler_adjusted(int target_class) {
  AttackConfig cfg;
  cfg.target_class = target_class;
  cfg.min_word_sim = 0.9;
  cfg.min_sent_sim = 0.98;
  cfg.max_perturb_ratio = 1.0;
  return cfg;
}

double sentence_similarity(const TokenSeq& a, const TokenSeq& b,
                           const EmbeddingTable* emb) {
  auto mean_vec = [emb](const TokenSeq& t, std::vector<double>* out) {
    if (!emb) return false;
    std::size_t found = 0;
    for (const auto& tok : t) {
      const std::vector<double>* v = emb->find(tok);
      if (!v) continue;
      if (out->empty()) out->assign(v->size(), 0.0);
      for (std::size_t i = 0; i < v->size(); ++i) (*out)[i] += (*v)[i];
      ++found;
    }
    if (found == 0) return false;
    for (double& x : *out) x /= static_cast<double>(found);
    return true;
  };
  std::vector<double> ma, mb;
  if (!mean_vec(a, &ma) || !mean_vec(b, &mb)) return a == b ? 1.0 : 0.0;
  return cosine(ma, mb);
}

namespace {

double word_similarity(const std::string& a, const std::string& b,
                       const EmbeddingTable* emb) {
  const std::vector<double>* va = emb ? emb->find(a) : nullptr;
  const std::vector<double>* vb = emb ? emb->find(b) : nullptr;
  if (!va || !vb) return a == b ? 1.0 : 0.0;
  return cosine(*va, *vb);
}

double safe_score(const MetricFn& m, const Sample& s, bool* ok) {
  try {
    double v = m(s);
    *ok = true;
    return v;
  } catch (const Error&) {
    *ok = false;
    return 0.0;
  }
}

}  // namespace

AttackResult greedy_attack(const DiscretizedMetric& d, const Sample& s,
                           const AttackConfig& cfg, const ReplacementLexicon* lexicon,
                           const EmbeddingTable* emb, std::uint64_t seed) {
  if (cfg.target_class < 0 || cfg.target_class >= d.k) {
    throw UsageError("attack: target_class outside [0, k)");
  }
  if (cfg.min_word_sim < 0 || cfg.min_word_sim > 1 || cfg.min_sent_sim < 0 ||
      cfg.min_sent_sim > 1) {
    throw UsageError("attack: similarity thresholds must be in [0, 1]");
  }
  if (cfg.max_perturb_ratio <= 0 || cfg.max_perturb_ratio > 1) {
    throw UsageError("attack: max_perturb_ratio must be in (0, 1]");
  }
  if (cfg.max_candidates < 1) throw UsageError("attack: max_candidates must be >= 1");

  AttackResult res;
  res.sample_id = s.id;
  res.orig_score = d.base(s);
  res.orig_class = d.class_of(res.orig_score);
  if (res.orig_class == cfg.target_class) {
    throw UsageError("attack: sample '" + s.id + "' already in target class");
  }

  std::size_t n = s.hyp.size();
  double p_full = d.class_prob(res.orig_score)[res.orig_class];
  std::vector<double> importance(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<char> keep(n, 1);
    keep[i] = 0;
    double sc = score_masked(d.base, s, Segment::kHyp, keep);
    importance[i] = p_full - d.class_prob(sc)[res.orig_class];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importance[a] > importance[b];
  });

  Rng rng(derive_seed(seed, hash_str(s.id)));
  int budget = static_cast<int>(cfg.max_perturb_ratio * static_cast<double>(n) + 1e-9);
  TokenSeq cur = s.hyp;
  Sample work = s;
  int n_pert = 0;

  for (std::size_t pos : order) {
    if (n_pert >= budget) break;
    const std::string& tok = cur[pos];
    TokenSeq cands = rank_replacements(tok, lexicon, emb, cfg.max_candidates);

    bool have_best = false;
    std::string best_cand;
    double best_pt = -1;
    for (const std::string& cand : cands) {
      if (word_similarity(tok, cand, emb) < cfg.min_word_sim) continue;
      TokenSeq tentative = cur;
      tentative[pos] = cand;
      double ssim = sentence_similarity(s.hyp, tentative, emb);
      if (ssim < cfg.min_sent_sim) continue;
      work.hyp = tentative;
      bool ok = false;
      double sc = safe_score(d.base, work, &ok);
      if (!ok) continue;
      std::vector<double> probs = d.class_prob(sc);
      if (argmax_prob(probs) == cfg.target_class) {
        res.success = true;
        res.hyp_star = std::move(tentative);
        res.new_score = sc;
        res.new_class = cfg.target_class;
        res.n_perturbed = n_pert + 1;
        res.sent_sim = ssim;
        return res;
      }
      double pt = probs[cfg.target_class];
      bool take = !have_best || pt > best_pt || (pt == best_pt && rng.bernoulli(0.5));
      if (take) {
        have_best = true;
        best_cand = cand;
        best_pt = pt;
      }
    }
    if (have_best) {
      cur[pos] = best_cand;
      ++n_pert;
    }
  }

  work.hyp = cur;
  res.hyp_star = cur;
  res.new_score = d.base(work);
  res.new_class = argmax_prob(d.class_prob(res.new_score));
  res.n_perturbed = n_pert;
  res.sent_sim = sentence_similarity(s.hyp, cur, emb);
  return res;
}

std::vector<AttackResult> run_campaign(const DiscretizedMetric& d,
                                       const std::vector<Sample>& samples,
                                       const AttackConfig& cfg,
                                       const ReplacementLexicon* lexicon,
                                       const EmbeddingTable* emb, std::uint64_t seed) {
  std::vector<AttackResult> results(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    results[i] = greedy_attack(d, samples[i], cfg, lexicon, emb,
                               derive_seed(seed, hash_str(samples[i].id), i));
  });
  return results;
}

AttackStats attack_stats(const std::vector<AttackResult>& results) {
  if (results.empty()) throw UsageError("attack_stats: no results");
  AttackStats st;
  st.n_total = static_cast<int>(results.size());
  double pert_sum = 0, sim_sum = 0;
  for (const AttackResult& r : results) {
    if (!r.success) continue;
    ++st.n_success;
    if (!r.hyp_star.empty()) {
      pert_sum += static_cast<double>(r.n_perturbed) / static_cast<double>(r.hyp_star.size());
    }
    sim_sum += r.sent_sim;
  }
  st.success_rate = static_cast<double>(st.n_success) / st.n_total;
  if (st.n_success > 0) {
    st.perturbation_rate = pert_sum / st.n_success;
    st.sentence_similarity = sim_sum / st.n_success;
  }
  return st;
}

PerturbTemplate PerturbTemplate::parse(const std::string& name) {
  PerturbTemplate t;
  if (name == "identity") t.kind = Kind::kIdentity;
  else if (name == "drop_span") t.kind = Kind::kDropSpan;
  else if (name == "jumble") t.kind = Kind::kJumble;
  else if (name == "negate") t.kind = Kind::kNegate;
  else if (name == "number_swap") t.kind = Kind::kNumberSwap;
  else if (name == "lexicon_swap") t.kind = Kind::kLexiconSwap;
  else throw UsageError("unknown perturbation template '" + name + "'");
  return t;
}

const char* PerturbTemplate::name() const {
  switch (kind) {
    case Kind::kIdentity: return "identity";
    case Kind::kDropSpan: return "drop_span";
    case Kind::kJumble: return "jumble";
    case Kind::kNegate: return "negate";
    case Kind::kNumberSwap: return "number_swap";
    case Kind::kLexiconSwap: return "lexicon_swap";
  }
  return "?";
}

std::optional<TokenSeq> apply_template(const PerturbTemplate& t, const TokenSeq& hyp,
                                       const ReplacementLexicon* lexicon,
                                       std::uint64_t seed) {
  if (hyp.empty()) return std::nullopt;
  switch (t.kind) {
    case PerturbTemplate::Kind::kIdentity:
      return hyp;
    case PerturbTemplate::Kind::kDropSpan: {
      if (t.span_len == 0 || t.span_start + t.span_len > hyp.size() ||
          t.span_len >= hyp.size()) {
        return std::nullopt;
      }
      TokenSeq out = hyp;
      out.erase(out.begin() + t.span_start, out.begin() + t.span_start + t.span_len);
      return out;
    }
    case PerturbTemplate::Kind::kJumble: {
      if (hyp.size() < 2) return std::nullopt;
      TokenSeq out = hyp;
      Rng rng(seed);
      rng.shuffle(out);
      return out;
    }
    case PerturbTemplate::Kind::kNegate: {
      auto it = std::find(hyp.begin(), hyp.end(), t.negation_token);
      TokenSeq out = hyp;
      if (it != hyp.end()) {
        if (hyp.size() == 1) return std::nullopt;  // removal would empty it
        out.erase(out.begin() + (it - hyp.begin()));
      } else {
        out.insert(out.begin() + std::min<std::size_t>(1, out.size()), t.negation_token);
      }
      return out;
    }
    case PerturbTemplate::Kind::kNumberSwap: {
      for (std::size_t i = 0; i < hyp.size(); ++i) {
        const std::string& w = hyp[i];
        const char* p = w.c_str();
        char* end = nullptr;
        errno = 0;
        long long v = std::strtoll(p, &end, 10);
        if (errno == 0 && end == p + w.size() && !w.empty() &&
            v < std::numeric_limits<long long>::max()) {
          TokenSeq out = hyp;
          out[i] = std::to_string(v + 1);
          return out;
        }
      }
      return std::nullopt;
    }
    case PerturbTemplate::Kind::kLexiconSwap: {
      if (!lexicon) return std::nullopt;
      for (std::size_t i = 0; i < hyp.size(); ++i) {
        if (const TokenSeq* cands = lexicon->find(hyp[i])) {
          TokenSeq out = hyp;
          out[i] = cands->front();
          return out;
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<double> checklist_score(const MetricFn& m, const Sample& s,
                                      const PerturbTemplate& t, double human_delta,
                                      const ReplacementLexicon* lexicon,
                                      std::uint64_t seed) {
  std::optional<TokenSeq> perturbed = apply_template(t, s.hyp, lexicon, seed);
  if (!perturbed) return std::nullopt;
  double base = m(s);
  Sample p = s;
  p.hyp = std::move(*perturbed);
  double after = m(p);
  return human_delta - (base - after);
}

ChecklistRun run_checklist(const MetricFn& m, const std::vector<Sample>& samples,
                           const std::vector<PerturbTemplate>& templates,
                           const std::vector<double>& human_deltas,
                           const ReplacementLexicon* lexicon, std::uint64_t seed) {
  if (templates.size() != human_deltas.size()) {
    throw UsageError("run_checklist: one human delta per template required");
  }
  if (templates.empty()) throw UsageError("run_checklist: no templates");
  if (samples.empty()) throw UsageError("run_checklist: no samples");

  ChecklistRun run;
  run.cells.resize(samples.size() * templates.size());
  parallel_for(samples.size(), [&](std::size_t si) {
    const Sample& s = samples[si];
    double base = m(s);
    for (std::size_t ti = 0; ti < templates.size(); ++ti) {
      ChecklistRun::Cell& cell = run.cells[si * templates.size() + ti];
      cell.sample_id = s.id;
      cell.template_name = templates[ti].name();
      std::optional<TokenSeq> perturbed =
          apply_template(templates[ti], s.hyp, lexicon, derive_seed(seed, si, ti));
      if (!perturbed) continue;
      Sample p = s;
      p.hyp = std::move(*perturbed);
      cell.applicable = true;
      cell.metric_drop = base - m(p);
    }
  });

  double dmin = 0, dmax = 0, hmin = 0, hmax = 0;
  bool first = true;
  for (std::size_t i = 0; i < run.cells.size(); ++i) {
    if (!run.cells[i].applicable) {
      ++run.skipped;
      continue;
    }
    double h = human_deltas[i % templates.size()];
    if (first) {
      dmin = dmax = run.cells[i].metric_drop;
      hmin = hmax = h;
      first = false;
    } else {
      dmin = std::min(dmin, run.cells[i].metric_drop);
      dmax = std::max(dmax, run.cells[i].metric_drop);
      hmin = std::min(hmin, h);
      hmax = std::max(hmax, h);
    }
  }
  if (first) throw DataError("run_checklist: no applicable (sample, template) pairs");

  auto normalize = [](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
  };
  std::map<std::string, std::pair<double, int>> acc;
  for (std::size_t i = 0; i < run.cells.size(); ++i) {
    ChecklistRun::Cell& cell = run.cells[i];
    if (!cell.applicable) continue;
    double h = human_deltas[i % templates.size()];
    cell.normalized_score =
        normalize(h, hmin, hmax) - normalize(cell.metric_drop, dmin, dmax);
    auto& slot = acc[cell.template_name];
    slot.first += cell.normalized_score;
    slot.second += 1;
  }
  for (const auto& [name, slot] : acc) {
    run.mean_score_per_template[name] = slot.first / slot.second;
  }
  return run;
}

}  // namespace xmt
