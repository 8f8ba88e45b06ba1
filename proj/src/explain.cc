#include "xmt/explain.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "xmt/parallel.h"
#include "xmt/rng.h"

namespace xmt {
namespace {

// Distinct stream labels so that ops drawing from the same master seed
// stay independent.
constexpr std::uint64_t kLimeStream = kLimeSeedStream;
constexpr std::uint64_t kShapStream = kShapSeedStream;

void note_degenerate(Explanation& e, std::size_t count) {
  if (count > 0) {
    e.notes.push_back(std::to_string(count) +
                      " degenerate evaluation(s) scored 0 (segment emptied)");
  }
}

}  // namespace

double score_masked(const MetricFn& m, const Sample& s, Segment seg,
                    const std::vector<char>& keep, bool* degenerate) {
  if (degenerate) *degenerate = false;
  Sample masked = masked_sample(s, seg, keep);
  try {
    return m(masked);
  } catch (const Error&) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
}

Explanation erasure_explain(const MetricFn& m, const Sample& s, Segment seg) {
  const TokenSeq& tokens = segment_tokens(s, seg);
  std::size_t n = tokens.size();
  if (n == 0) throw UsageError("erasure: segment is empty");

  Explanation e;
  e.segment = seg;
  e.full_score = m(s);
  bool base_degenerate = false;
  e.baseline_score = score_masked(m, s, seg, std::vector<char>(n, 0), &base_degenerate);

  e.relevance.resize(n);
  std::vector<char> flags(n, 0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<char> keep(n, 1);
    keep[i] = 0;
    bool deg = false;
    double dropped = score_masked(m, s, seg, keep, &deg);
    e.relevance[i] = e.full_score - dropped;
    flags[i] = deg;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (flags[i]) {
      e.notes.push_back("token " + std::to_string(i) +
                        ": deletion emptied the segment; scored 0");
    }
  }
  if (base_degenerate) e.notes.push_back("baseline (empty segment) scored 0");
  return e;
}

Explanation lime_explain(const MetricFn& m, const Sample& s, Segment seg,
                         const LimeParams& p, std::uint64_t seed) {
  const TokenSeq& tokens = segment_tokens(s, seg);
  std::size_t n = tokens.size();
  if (n == 0) throw UsageError("lime: segment is empty");
  if (p.kernel_width <= 0) throw UsageError("lime: kernel_width must be > 0");
  if (p.exhaustive) {
    if (n > 20) throw UsageError("lime: exhaustive mode supports at most 20 tokens");
  } else if (p.n_perturb < static_cast<int>(n)) {
    throw UsageError("lime: n_perturb must be >= segment length");
  }
  if (!p.exhaustive && (p.drop_prob <= 0 || p.drop_prob >= 1)) {
    throw UsageError("lime: drop_prob must be in (0,1)");
  }

  std::vector<std::vector<char>> masks;
  if (p.exhaustive) {
    std::size_t count = std::size_t{1} << n;
    masks.resize(count, std::vector<char>(n, 0));
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t i = 0; i < n; ++i) masks[j][i] = (j >> i) & 1u;
    }
  } else {
    masks.resize(p.n_perturb, std::vector<char>(n, 1));
    for (std::size_t j = 0; j < masks.size(); ++j) {
      Rng rng(derive_seed(seed, kLimeStream, j));
      bool any = false;
      for (std::size_t i = 0; i < n; ++i) {
        bool keep = !rng.bernoulli(p.drop_prob);
        masks[j][i] = keep;
        any = any || keep;
      }
      if (!any) std::fill(masks[j].begin(), masks[j].end(), 1);  // all-dropped -> all-kept
    }
  }

  std::size_t rows = masks.size();
  std::vector<double> ys(rows);
  std::vector<char> flags(rows, 0);
  parallel_for(rows, [&](std::size_t j) {
    bool deg = false;
    ys[j] = score_masked(m, s, seg, masks[j], &deg);
    flags[j] = deg;
  });

  Eigen::MatrixXd a(rows, n + 1);
  Eigen::VectorXd y(rows);
  for (std::size_t j = 0; j < rows; ++j) {
    std::size_t dropped = 0;
    a(j, 0) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      a(j, i + 1) = masks[j][i];
      if (!masks[j][i]) ++dropped;
    }
    double d = static_cast<double>(dropped) / static_cast<double>(n);
    double sw = std::sqrt(std::exp(-(d * d) / (p.kernel_width * p.kernel_width)));
    a.row(j) *= sw;
    y(j) = sw * ys[j];
  }

  Explanation e;
  e.segment = seg;
  e.full_score = m(s);
  bool base_degenerate = false;
  e.baseline_score = score_masked(m, s, seg, std::vector<char>(n, 0), &base_degenerate);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::VectorXd beta;
  if (qr.rank() == static_cast<Eigen::Index>(n + 1)) {
    beta = qr.solve(y);
  } else {
    Eigen::MatrixXd ata = a.transpose() * a;
    ata.diagonal().array() += 1e-8;
    beta = ata.ldlt().solve(a.transpose() * y);
    e.notes.push_back("singular design; ridge fallback (lambda 1e-8)");
  }
  e.relevance.assign(beta.data() + 1, beta.data() + 1 + n);
  note_degenerate(e, static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1)));
  return e;
}

namespace {

Explanation shapley_exact(const MetricFn& m, const Sample& s, Segment seg, std::size_t n) {
  std::size_t count = std::size_t{1} << n;
  std::vector<double> v(count);
  std::vector<char> flags(count, 0);
  parallel_for(count, [&](std::size_t mask) {
    std::vector<char> keep(n, 0);
    for (std::size_t i = 0; i < n; ++i) keep[i] = (mask >> i) & 1u;
    bool deg = false;
    v[mask] = score_masked(m, s, seg, keep, &deg);
    flags[mask] = deg;
  });

  // weight(|S|) = |S|! (n-1-|S|)! / n!
  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k) fact[k] = fact[k - 1] * k;
  std::vector<double> weight(n);
  for (std::size_t k = 0; k < n; ++k) weight[k] = fact[k] * fact[n - 1 - k] / fact[n];

  Explanation e;
  e.segment = seg;
  e.full_score = v[count - 1];
  e.baseline_score = v[0];
  e.relevance.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t bit = std::size_t{1} << i;
    double phi = 0;
    for (std::size_t mask = 0; mask < count; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(__builtin_popcountll(mask))] *
             (v[mask | bit] - v[mask]);
    }
    e.relevance[i] = phi;
  }
  note_degenerate(e, static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1)));
  return e;
}

Explanation shapley_sampled(const MetricFn& m, const Sample& s, Segment seg,
                            std::size_t n, int n_perm, std::uint64_t seed) {
  Explanation e;
  e.segment = seg;
  e.full_score = m(s);
  bool base_degenerate = false;
  e.baseline_score = score_masked(m, s, seg, std::vector<char>(n, 0), &base_degenerate);

  std::vector<double> marginals(static_cast<std::size_t>(n_perm) * n);
  std::vector<std::size_t> degenerate_counts(n_perm, 0);
  parallel_for(static_cast<std::size_t>(n_perm), [&](std::size_t t) {
    Rng rng(derive_seed(seed, kShapStream, t));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<char> keep(n, 0);
    double prev = e.baseline_score;
    for (std::size_t pos = 0; pos < n; ++pos) {
      keep[perm[pos]] = 1;
      bool deg = false;
      double cur = score_masked(m, s, seg, keep, &deg);
      if (deg) ++degenerate_counts[t];
      marginals[t * n + perm[pos]] = cur - prev;
      prev = cur;
    }
  });

  e.relevance.assign(n, 0.0);
  for (int t = 0; t < n_perm; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      e.relevance[i] += marginals[static_cast<std::size_t>(t) * n + i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) e.relevance[i] /= n_perm;

  std::size_t deg_total = 0;
  for (std::size_t c : degenerate_counts) deg_total += c;
  if (base_degenerate) ++deg_total;
  note_degenerate(e, deg_total);
  return e;
}

}  // namespace

Explanation shapley_explain(const MetricFn& m, const Sample& s, Segment seg,
                            const ShapleyParams& p, std::uint64_t seed) {
  const TokenSeq& tokens = segment_tokens(s, seg);
  std::size_t n = tokens.size();
  if (n == 0) throw UsageError("shapley: segment is empty");
  if (p.mode == ShapleyParams::Mode::kExact) {
    if (n > 12) {
      throw UsageError("shapley: exact mode supports at most 12 tokens (" +
                       std::to_string(n) + " given); use sampled mode");
    }
    return shapley_exact(m, s, seg, n);
  }
  if (p.n_perm < 1) throw UsageError("shapley: n_perm must be >= 1");
  return shapley_sampled(m, s, seg, n, p.n_perm, seed);
}

std::vector<double> to_error_scores(const Explanation& e) {
  std::vector<double> out(e.relevance.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -e.relevance[i];
  return out;
}

}  // namespace xmt
