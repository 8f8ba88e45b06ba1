#include "xmt/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "xmt/parallel.h"
#include "xmt/tokenize.h"

namespace xmt {
namespace {

// Counts n-grams as joined keys; tokens are separated by an unlikely byte.
std::map<std::string, int> ngram_counts(const TokenSeq& tokens, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double sentence_bleu(const TokenSeq& hyp, const std::vector<TokenSeq>& refs,
                     const BleuParams& p) {
  if (p.max_n < 1) throw UsageError("bleu: max_n must be >= 1");
  if (p.smoothing_epsilon <= 0) throw UsageError("bleu: smoothing_epsilon must be > 0");
  if (hyp.empty()) throw DataError("bleu: empty hypothesis");
  bool any_ref = std::any_of(refs.begin(), refs.end(),
                             [](const TokenSeq& r) { return !r.empty(); });
  if (!any_ref) throw DataError("bleu: no non-empty reference");

  int orders = std::min<int>(p.max_n, static_cast<int>(hyp.size()));
  std::vector<double> precisions;
  precisions.reserve(orders);
  for (int n = 1; n <= orders; ++n) {
    auto hyp_counts = ngram_counts(hyp, n);
    std::map<std::string, int> max_ref;
    for (const TokenSeq& ref : refs) {
      for (const auto& [key, count] : ngram_counts(ref, n)) {
        int& slot = max_ref[key];
        slot = std::max(slot, count);
      }
    }
    long long clipped = 0, total = 0;
    for (const auto& [key, count] : hyp_counts) {
      total += count;
      auto it = max_ref.find(key);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    double pn = static_cast<double>(clipped) / static_cast<double>(total);
    precisions.push_back(std::max(pn, p.smoothing_epsilon));
  }

  // Closest reference length; ties pick the shorter reference.
  long long c = static_cast<long long>(hyp.size());
  long long r = -1;
  for (const TokenSeq& ref : refs) {
    if (ref.empty()) continue;
    long long len = static_cast<long long>(ref.size());
    if (r < 0 || std::llabs(len - c) < std::llabs(r - c) ||
        (std::llabs(len - c) == std::llabs(r - c) && len < r)) {
      r = len;
    }
  }
  double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));

  // When every precision is identical, the geometric mean is that value;
  // taking it directly keeps identity and floor cases exact.
  bool all_equal = std::all_of(precisions.begin(), precisions.end(),
                               [&](double v) { return v == precisions[0]; });
  double geo;
  if (all_equal) {
    geo = precisions[0];
  } else {
    double log_sum = 0;
    for (double pn : precisions) log_sum += std::log(pn);
    geo = std::exp(log_sum / orders);
  }
  return bp * geo;
}

namespace {

std::u32string decode_no_space(const std::string& s) {
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0) len = 4, cp = b0 & 0x07u;
    else if (b0 >= 0xE0) len = 3, cp = b0 & 0x0Fu;
    else if (b0 >= 0xC0) len = 2, cp = b0 & 0x1Fu;
    std::size_t j = i + 1;
    for (; j < i + len && j < s.size(); ++j) {
      unsigned char b = static_cast<unsigned char>(s[j]);
      if ((b & 0xC0u) != 0x80u) break;
      cp = (cp << 6) | (b & 0x3Fu);
    }
    if (j != i + len) {
      cp = b0;
      j = i + 1;
    }
    i = j;
    bool space = cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
                 cp == '\v' || cp == 0x00A0 || cp == 0x1680 ||
                 (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
                 cp == 0x202F || cp == 0x205F || cp == 0x3000;
    if (!space) out.push_back(cp);
  }
  return out;
}

std::map<std::u32string, int> char_ngrams(const std::u32string& s, int n) {
  std::map<std::u32string, int> counts;
  if (static_cast<int>(s.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[s.substr(i, n)];
  return counts;
}

double chrf_single(const std::u32string& hyp, const std::u32string& ref,
                   int n_max, double beta) {
  double p_sum = 0, r_sum = 0;
  int used = 0;
  for (int n = 1; n <= n_max; ++n) {
    auto hc = char_ngrams(hyp, n);
    auto rc = char_ngrams(ref, n);
    long long hyp_total = 0, ref_total = 0, matches = 0;
    for (const auto& [k, v] : hc) hyp_total += v;
    for (const auto& [k, v] : rc) ref_total += v;
    if (hyp_total == 0 && ref_total == 0) continue;
    for (const auto& [k, v] : hc) {
      auto it = rc.find(k);
      if (it != rc.end()) matches += std::min(v, it->second);
    }
    p_sum += hyp_total > 0 ? static_cast<double>(matches) / hyp_total : 0.0;
    r_sum += ref_total > 0 ? static_cast<double>(matches) / ref_total : 0.0;
    ++used;
  }
  if (used == 0) return 0.0;
  double p = p_sum / used, r = r_sum / used;
  double b2 = beta * beta;
  double denom = b2 * p + r;
  if (denom == 0) return 0.0;
  return (1 + b2) * p * r / denom;
}

}  // namespace

double chrf(const std::string& hyp, const std::vector<std::string>& refs,
            int n_max, double beta) {
  if (n_max < 1) throw UsageError("chrf: n_max must be >= 1");
  if (beta <= 0) throw UsageError("chrf: beta must be > 0");
  if (refs.empty()) throw DataError("chrf: no reference");
  std::u32string h = decode_no_space(hyp);
  std::vector<std::u32string> rs;
  rs.reserve(refs.size());
  for (const auto& r : refs) rs.push_back(decode_no_space(r));
  if (h.empty() && std::all_of(rs.begin(), rs.end(),
                               [](const std::u32string& r) { return r.empty(); })) {
    throw DataError("chrf: hypothesis and references all empty");
  }
  double best = 0;
  for (const auto& r : rs) best = std::max(best, chrf_single(h, r, n_max, beta));
  return best;
}

namespace {

// Strips one of {ing, es, ed, s} (longest first) when at least three
// characters remain.
std::string crude_stem(const std::string& w) {
  static const char* kSuffixes[] = {"ing", "es", "ed", "s"};
  for (const char* suf : kSuffixes) {
    std::size_t n = std::char_traits<char>::length(suf);
    if (w.size() > n && w.size() - n >= 3 && w.compare(w.size() - n, n, suf) == 0) {
      return w.substr(0, w.size() - n);
    }
  }
  return w;
}

bool lexicon_synonyms(const std::string& a, const std::string& b,
                      const ReplacementLexicon* lex) {
  if (!lex) return false;
  if (const TokenSeq* c = lex->find(a)) {
    if (std::find(c->begin(), c->end(), b) != c->end()) return true;
  }
  if (const TokenSeq* c = lex->find(b)) {
    if (std::find(c->begin(), c->end(), a) != c->end()) return true;
  }
  return false;
}

}  // namespace

double meteor_lite(const TokenSeq& hyp, const TokenSeq& ref,
                   const MeteorParams& p, const ReplacementLexicon* lexicon) {
  if (hyp.empty()) throw DataError("meteor: empty hypothesis");
  if (ref.empty()) throw DataError("meteor: empty reference");

  std::vector<int> hyp_match(hyp.size(), -1);
  std::vector<char> ref_used(ref.size(), 0);
  auto run_stage = [&](auto&& matches) {
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (hyp_match[i] >= 0) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j]) continue;
        if (matches(hyp[i], ref[j])) {
          hyp_match[i] = static_cast<int>(j);
          ref_used[j] = 1;
          break;
        }
      }
    }
  };
  run_stage([](const std::string& a, const std::string& b) { return a == b; });
  run_stage([](const std::string& a, const std::string& b) {
    return crude_stem(a) == crude_stem(b);
  });
  run_stage([&](const std::string& a, const std::string& b) {
    return lexicon_synonyms(a, b, lexicon);
  });

  int m = 0;
  for (int j : hyp_match) {
    if (j >= 0) ++m;
  }
  if (m == 0) return 0.0;
  double prec = static_cast<double>(m) / hyp.size();
  double rec = static_cast<double>(m) / ref.size();
  double f_mean = prec * rec / (p.alpha * prec + (1 - p.alpha) * rec);

  int chunks = 0;
  int prev_ref = -2;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (hyp_match[i] < 0) continue;
    if (hyp_match[i] != prev_ref + 1 ||
        (i > 0 && hyp_match[i - 1] < 0)) {
      ++chunks;
    }
    prev_ref = hyp_match[i];
  }
  double penalty = chunks == 1 ? 0.0
                               : p.gamma * std::pow(static_cast<double>(chunks) / m, p.beta);
  return f_mean * (1.0 - penalty);
}

double greedy_embed_match(const TokenSeq& hyp, const TokenSeq& ref,
                          const EmbeddingTable& emb) {
  if (hyp.empty()) throw DataError("embed: empty hypothesis");
  if (ref.empty()) throw DataError("embed: empty reference");
  auto token_sim = [&](const std::string& a, const std::string& b) {
    const std::vector<double>* va = emb.find(a);
    const std::vector<double>* vb = emb.find(b);
    if (!va || !vb) return a == b ? 1.0 : 0.0;
    return std::max(0.0, cosine(*va, *vb));
  };
  auto directed = [&](const TokenSeq& from, const TokenSeq& to) {
    double sum = 0;
    for (const auto& a : from) {
      double best = 0;
      for (const auto& b : to) best = std::max(best, token_sim(a, b));
      sum += best;
    }
    return sum / from.size();
  };
  double prec = directed(hyp, ref);
  double rec = directed(ref, hyp);
  if (prec + rec == 0) return 0.0;
  return 2 * prec * rec / (prec + rec);
}

namespace {

const std::vector<TokenSeq>& require_refs(const Sample& s) {
  if (s.refs.empty() ||
      std::all_of(s.refs.begin(), s.refs.end(),
                  [](const TokenSeq& r) { return r.empty(); })) {
    throw DataError("sample '" + s.id + "' has no non-empty reference");
  }
  return s.refs;
}

}  // namespace

MetricFn make_metric(const std::string& name, const MetricOptions& opts) {
  MetricFn fn;
  fn.name = name;
  fn.needs_ref = true;
  if (name == "bleu") {
    BleuParams p = opts.bleu;
    fn.score = [p](const Sample& s) { return sentence_bleu(s.hyp, require_refs(s), p); };
  } else if (name == "chrf") {
    int n = opts.chrf_n;
    double beta = opts.chrf_beta;
    fn.score = [n, beta](const Sample& s) {
      const auto& refs = require_refs(s);
      std::vector<std::string> ref_strs;
      ref_strs.reserve(refs.size());
      for (const auto& r : refs) ref_strs.push_back(join_tokens(r));
      return chrf(join_tokens(s.hyp), ref_strs, n, beta);
    };
  } else if (name == "meteor") {
    MeteorParams p = opts.meteor;
    auto lex = opts.lexicon;
    fn.score = [p, lex](const Sample& s) {
      double best = 0;
      for (const auto& r : require_refs(s)) {
        if (r.empty()) continue;
        best = std::max(best, meteor_lite(s.hyp, r, p, lex.get()));
      }
      return best;
    };
  } else if (name == "embed") {
    auto emb = opts.embeddings;
    if (!emb) throw UsageError("embed metric requires an embedding table");
    fn.score = [emb](const Sample& s) {
      double best = 0;
      for (const auto& r : require_refs(s)) {
        if (r.empty()) continue;
        best = std::max(best, greedy_embed_match(s.hyp, r, *emb));
      }
      return best;
    };
  } else {
    throw UsageError("unknown metric '" + name + "' (expected bleu, chrf, meteor or embed)");
  }
  return fn;
}

MetricFn make_reference_free(const MetricFn& base, PseudoRefMode mode,
                             std::shared_ptr<const WbwDictionary> dict) {
  MetricFn fn;
  auto base_score = base.score;
  if (mode == PseudoRefMode::kFilePseudoRef) {
    fn.name = base.name + "-pseudo";
    fn.needs_pseudo_ref = true;
    fn.score = [base_score](const Sample& s) {
      if (!s.pseudo_ref) throw DataError("sample '" + s.id + "' has no pseudo_ref");
      Sample t = s;
      t.refs = {*s.pseudo_ref};
      return base_score(t);
    };
  } else {
    if (!dict) throw UsageError("wbw mode requires a dictionary");
    fn.name = base.name + "-wbw";
    fn.needs_src = true;
    fn.score = [base_score, dict](const Sample& s) {
      if (s.src.empty()) throw DataError("sample '" + s.id + "' has no source");
      Sample t = s;
      t.refs = {dict->translate(s.src)};
      return base_score(t);
    };
  }
  return fn;
}

std::vector<double> zscore_scores(const std::vector<double>& scores) {
  if (scores.size() < 2) throw UsageError("zscore: need at least two values");
  double mean = 0;
  for (double v : scores) mean += v;
  mean /= scores.size();
  double var = 0;
  for (double v : scores) var += (v - mean) * (v - mean);
  var /= scores.size();
  double sd = std::sqrt(var);
  std::vector<double> out(scores.size(), 0.0);
  if (sd == 0) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - mean) / sd;
  return out;
}

std::vector<double> score_dataset(const MetricFn& m, const std::vector<Sample>& samples) {
  std::vector<double> scores(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { scores[i] = m(samples[i]); });
  return scores;
}

}  // namespace xmt
