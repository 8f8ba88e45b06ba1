#include "xmt/serial.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "xmt/rng.h"

namespace xmt::serial {
namespace {

void note_degenerate(Explanation& e, std::size_t count) {
  if (count > 0) {
    e.notes.push_back(std::to_string(count) +
                      " degenerate evaluation(s) scored 0 (segment emptied)");
  }
}

}  // namespace

std::vector<double> score_dataset(const MetricFn& m, const std::vector<Sample>& samples) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = m(samples[i]);
  return out;
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
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<char> keep(n, 1);
    keep[i] = 0;
    bool deg = false;
    double dropped = score_masked(m, s, seg, keep, &deg);
    e.relevance[i] = e.full_score - dropped;
    if (deg) {
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
      Rng rng(derive_seed(seed, kLimeSeedStream, j));
      bool any = false;
      for (std::size_t i = 0; i < n; ++i) {
        bool keep = !rng.bernoulli(p.drop_prob);
        masks[j][i] = keep;
        any = any || keep;
      }
      if (!any) std::fill(masks[j].begin(), masks[j].end(), 1);
    }
  }

  std::size_t rows = masks.size();
  std::vector<double> ys(rows);
  std::size_t degenerate = 0;
  for (std::size_t j = 0; j < rows; ++j) {
    bool deg = false;
    ys[j] = score_masked(m, s, seg, masks[j], &deg);
    if (deg) ++degenerate;
  }

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
  note_degenerate(e, degenerate);
  return e;
}

namespace {

// Independent exact formulation: phi_i averaged over subset sizes with
// 1 / (n * C(n-1, k)) weights, re-evaluating the metric per subset pair
// instead of sharing a coalition value table.
Explanation shapley_exact_reference(const MetricFn& m, const Sample& s, Segment seg,
                                    std::size_t n) {
  std::size_t count = std::size_t{1} << n;
  std::vector<double> choose(n, 1.0);  // choose[k] = C(n-1, k)
  for (std::size_t k = 1; k < n; ++k) {
    choose[k] = choose[k - 1] * static_cast<double>(n - k) / static_cast<double>(k);
  }

  Explanation e;
  e.segment = seg;
  std::size_t degenerate = 0;
  bool deg = false;
  e.full_score = score_masked(m, s, seg, std::vector<char>(n, 1), &deg);
  if (deg) ++degenerate;
  e.baseline_score = score_masked(m, s, seg, std::vector<char>(n, 0), &deg);
  if (deg) ++degenerate;

  e.relevance.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t bit = std::size_t{1} << i;
    double phi = 0;
    for (std::size_t mask = 0; mask < count; ++mask) {
      if (mask & bit) continue;
      std::vector<char> without(n, 0);
      std::vector<char> with(n, 0);
      for (std::size_t j = 0; j < n; ++j) without[j] = (mask >> j) & 1u;
      with = without;
      with[i] = 1;
      bool deg_a = false;
      bool deg_b = false;
      double va = score_masked(m, s, seg, without, &deg_a);
      double vb = score_masked(m, s, seg, with, &deg_b);
      if (deg_a) ++degenerate;
      if (deg_b) ++degenerate;
      std::size_t k = static_cast<std::size_t>(__builtin_popcountll(mask));
      phi += (vb - va) / (static_cast<double>(n) * choose[k]);
    }
    e.relevance[i] = phi;
  }
  note_degenerate(e, degenerate);
  return e;
}

Explanation shapley_sampled_reference(const MetricFn& m, const Sample& s, Segment seg,
                                      std::size_t n, int n_perm, std::uint64_t seed) {
  Explanation e;
  e.segment = seg;
  e.full_score = m(s);
  bool base_degenerate = false;
  e.baseline_score = score_masked(m, s, seg, std::vector<char>(n, 0), &base_degenerate);

  std::vector<double> marginals(static_cast<std::size_t>(n_perm) * n);
  std::size_t degenerate = 0;
  for (std::size_t t = 0; t < static_cast<std::size_t>(n_perm); ++t) {
    Rng rng(derive_seed(seed, kShapSeedStream, t));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<char> keep(n, 0);
    double prev = e.baseline_score;
    for (std::size_t pos = 0; pos < n; ++pos) {
      keep[perm[pos]] = 1;
      bool deg = false;
      double cur = score_masked(m, s, seg, keep, &deg);
      if (deg) ++degenerate;
      marginals[t * n + perm[pos]] = cur - prev;
      prev = cur;
    }
  }

  e.relevance.assign(n, 0.0);
  for (int t = 0; t < n_perm; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      e.relevance[i] += marginals[static_cast<std::size_t>(t) * n + i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) e.relevance[i] /= n_perm;
  if (base_degenerate) ++degenerate;
  note_degenerate(e, degenerate);
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
    return shapley_exact_reference(m, s, seg, n);
  }
  if (p.n_perm < 1) throw UsageError("shapley: n_perm must be >= 1");
  return shapley_sampled_reference(m, s, seg, n, p.n_perm, seed);
}

}  // namespace xmt::serial
