#include "xmt/inverse.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "xmt/rng.h"

namespace xmt {

TokenSeq rank_replacements(const std::string& token, const ReplacementLexicon* lexicon,
                           const EmbeddingTable* emb, int kmax) {
  TokenSeq out;
  if (kmax <= 0) return out;
  auto push = [&](const std::string& cand) {
    if (cand == token) return;
    if (std::find(out.begin(), out.end(), cand) != out.end()) return;
    out.push_back(cand);
  };
  if (lexicon) {
    if (const TokenSeq* cands = lexicon->find(token)) {
      for (const auto& c : *cands) {
        if (static_cast<int>(out.size()) >= kmax) break;
        push(c);
      }
    }
  }
  if (emb && static_cast<int>(out.size()) < kmax) {
    for (const auto& [cand, sim] : emb->neighbors(token, kmax)) {
      if (static_cast<int>(out.size()) >= kmax) break;
      push(cand);
    }
  }
  return out;
}

CandidateTable build_candidates(const TokenSeq& hyp, const ReplacementLexicon* lexicon,
                                const EmbeddingTable* emb, int kmax) {
  CandidateTable table(hyp.size());
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    table[i] = rank_replacements(hyp[i], lexicon, emb, kmax);
  }
  return table;
}

TokenSeq apply_mask(const Sample& s, const PerturbMask& mask,
                    const CandidateTable& candidates) {
  if (mask.size() != s.hyp.size() || candidates.size() != s.hyp.size()) {
    throw UsageError("apply_mask: mask/candidate table length must match hypothesis");
  }
  TokenSeq out = s.hyp;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] < 0) throw UsageError("apply_mask: negative mask entry");
    if (mask[i] == 0 || candidates[i].empty()) continue;
    std::size_t j = std::min<std::size_t>(mask[i], candidates[i].size());
    out[i] = candidates[i][j - 1];
  }
  return out;
}

namespace {

constexpr std::uint64_t kInverseStream = 0x33;

struct Entry {
  double objective;
  PerturbMask mask;

  bool operator<(const Entry& other) const {
    if (objective != other.objective) return objective < other.objective;
    return mask < other.mask;
  }
};

InverseResult invert_with_candidates(const MetricFn& m, const Sample& s, double target,
                                     const InverseParams& params,
                                     const CandidateTable& candidates,
                                     std::uint64_t seed) {
  std::size_t n = s.hyp.size();
  Sample work = s;
  std::map<PerturbMask, double> score_cache;
  auto evaluate = [&](const PerturbMask& mask) {
    auto it = score_cache.find(mask);
    if (it != score_cache.end()) return it->second;
    work.hyp = apply_mask(s, mask, candidates);
    double sc = m(work);
    score_cache.emplace(mask, sc);
    return sc;
  };

  PerturbMask zero(n, 0);
  double zero_score = evaluate(zero);
  Entry best{std::fabs(target - zero_score), zero};

  InverseResult res;
  res.target = target;
  res.best_objective_trace.push_back(best.objective);

  std::vector<PerturbMask> beam(params.beam, zero);
  int it = 0;
  if (best.objective > 0) {
    for (it = 1; it <= params.iterations; ++it) {
      std::vector<Entry> pool;
      pool.reserve(beam.size() * 2);
      for (const PerturbMask& mask : beam) {
        pool.push_back({std::fabs(target - evaluate(mask)), mask});
      }
      for (std::size_t bi = 0; bi < beam.size(); ++bi) {
        Rng rng(derive_seed(seed, kInverseStream + it, bi));
        PerturbMask mutated = beam[bi];
        for (std::size_t i = 0; i < n; ++i) {
          if (candidates[i].empty()) continue;
          if (rng.bernoulli(params.perturb_prob)) {
            mutated[i] = std::min<int>(mutated[i] + 1,
                                       static_cast<int>(candidates[i].size()));
          }
        }
        pool.push_back({std::fabs(target - evaluate(mutated)), std::move(mutated)});
      }
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end(),
                             [](const Entry& a, const Entry& b) { return a.mask == b.mask; }),
                 pool.end());
      if (pool.front() < best) best = pool.front();
      res.best_objective_trace.push_back(best.objective);
      beam.clear();
      for (std::size_t i = 0; i < pool.size() && i < static_cast<std::size_t>(params.beam);
           ++i) {
        beam.push_back(pool[i].mask);
      }
      if (best.objective == 0) break;
    }
  }

  res.iterations_run = std::min(it, params.iterations);
  res.mask = best.mask;
  res.hyp_star = apply_mask(s, best.mask, candidates);
  res.achieved_score = evaluate(best.mask);
  res.objective = best.objective;
  return res;
}

}  // namespace

InverseResult invert(const MetricFn& m, const Sample& s, double target,
                     const InverseParams& params, const ReplacementLexicon* lexicon,
                     const EmbeddingTable* emb, std::uint64_t seed) {
  if (params.iterations < 1) throw UsageError("invert: iterations must be >= 1");
  if (params.beam < 1) throw UsageError("invert: beam must be >= 1");
  if (params.perturb_prob <= 0 || params.perturb_prob >= 1) {
    throw UsageError("invert: perturb_prob must be in (0, 1)");
  }
  if (params.kmax < 0) throw UsageError("invert: kmax must be >= 0");
  CandidateTable candidates = build_candidates(s.hyp, lexicon, emb, params.kmax);
  return invert_with_candidates(m, s, target, params, candidates, seed);
}

std::vector<InverseResult> neighborhood(const MetricFn& m, const Sample& s,
                                        const std::vector<double>& targets,
                                        const InverseParams& params,
                                        const ReplacementLexicon* lexicon,
                                        const EmbeddingTable* emb, std::uint64_t seed) {
  if (targets.empty()) throw UsageError("neighborhood: no targets");
  if (params.iterations < 1) throw UsageError("neighborhood: iterations must be >= 1");
  if (params.beam < 1) throw UsageError("neighborhood: beam must be >= 1");
  if (params.perturb_prob <= 0 || params.perturb_prob >= 1) {
    throw UsageError("neighborhood: perturb_prob must be in (0, 1)");
  }
  CandidateTable candidates = build_candidates(s.hyp, lexicon, emb, params.kmax);
  std::vector<InverseResult> out;
  out.reserve(targets.size());
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    out.push_back(invert_with_candidates(m, s, targets[ti], params, candidates,
                                         derive_seed(seed, 0x44, ti)));
  }
  return out;
}

}  // namespace xmt
