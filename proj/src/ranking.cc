#include "xmt/ranking.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xmt {

WinMatrix win_matrix(const ScoreTable& t) {
  std::size_t n = t.systems.size();
  if (n < 2) throw UsageError("win_matrix: need at least two systems");
  if (t.instances.empty()) throw UsageError("win_matrix: need at least one instance");
  if (t.values.size() != n) throw UsageError("win_matrix: ragged score table");
  for (const auto& row : t.values) {
    if (row.size() != t.instances.size()) throw UsageError("win_matrix: ragged score table");
  }
  WinMatrix w;
  w.systems = t.systems;
  w.w.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t i = 0; i < t.instances.size(); ++i) {
        double va = t.values[a][i], vb = t.values[b][i];
        if (va > vb) {
          w.w[a][b] += 1.0;
        } else if (vb > va) {
          w.w[b][a] += 1.0;
        } else {
          w.w[a][b] += 0.5;
          w.w[b][a] += 0.5;
        }
      }
    }
  }
  return w;
}

std::vector<double> bt_fit(const WinMatrix& w, const BtOptions& opts) {
  std::size_t n = w.systems.size();
  if (n < 2) throw UsageError("bt_fit: need at least two systems");
  if (w.w.size() != n) throw UsageError("bt_fit: matrix size mismatch");
  if (opts.prior < 0) throw UsageError("bt_fit: prior must be >= 0");

  std::vector<std::vector<double>> ww(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) ww[a][b] = w.w[a][b] + opts.prior;
    }
  }

  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    for (std::size_t a = 0; a < n; ++a) {
      double num = 0, denom = 0;
      for (std::size_t b = 0; b < n; ++b) {
        if (b == a) continue;
        num += ww[a][b];
        denom += (ww[a][b] + ww[b][a]) / (pi[a] + pi[b]);
      }
      next[a] = denom > 0 ? num / denom : pi[a];
    }
    double sum = std::accumulate(next.begin(), next.end(), 0.0);
    if (sum <= 0) throw BtNonConvergence("bt_fit: degenerate iterate", pi);
    for (double& v : next) v /= sum;
    double delta = 0;
    for (std::size_t a = 0; a < n; ++a) delta = std::max(delta, std::fabs(next[a] - pi[a]));
    pi = next;
    if (delta < opts.tol) return pi;
  }
  throw BtNonConvergence("bt_fit: no convergence within " +
                             std::to_string(opts.max_iter) + " iterations",
                         pi);
}

namespace {

std::vector<std::string> order_desc(const std::vector<std::string>& systems,
                                    const std::vector<double>& stat) {
  std::vector<std::size_t> idx(systems.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (stat[a] != stat[b]) return stat[a] > stat[b];
    return systems[a] < systems[b];
  });
  std::vector<std::string> out;
  out.reserve(systems.size());
  for (std::size_t i : idx) out.push_back(systems[i]);
  return out;
}

}  // namespace

std::vector<std::string> rank_by_mean(const ScoreTable& t) {
  if (t.systems.empty()) throw UsageError("rank_by_mean: no systems");
  std::vector<double> means(t.systems.size(), 0.0);
  for (std::size_t a = 0; a < t.systems.size(); ++a) {
    if (t.values[a].empty()) throw UsageError("rank_by_mean: empty score row");
    means[a] = std::accumulate(t.values[a].begin(), t.values[a].end(), 0.0) /
               static_cast<double>(t.values[a].size());
  }
  return order_desc(t.systems, means);
}

std::vector<std::string> rank_by_bt(const ScoreTable& t, const BtOptions& opts) {
  if (t.systems.size() == 1) return t.systems;
  return order_desc(t.systems, bt_fit(win_matrix(t), opts));
}

double ranking_disagreement(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw UsageError("ranking_disagreement: size mismatch");
  std::size_t n = a.size();
  std::vector<std::string> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) throw UsageError("ranking_disagreement: rankings cover different systems");
  if (std::adjacent_find(sa.begin(), sa.end()) != sa.end()) {
    throw UsageError("ranking_disagreement: duplicate system name");
  }
  if (n < 2) return 0.0;

  auto pos_of = [](const std::vector<std::string>& r) {
    std::vector<std::pair<std::string, std::size_t>> pos;
    pos.reserve(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) pos.emplace_back(r[i], i);
    std::sort(pos.begin(), pos.end());
    return pos;
  };
  auto pa = pos_of(a), pb = pos_of(b);
  std::size_t discordant = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++total;
      bool less_a = pa[i].second < pa[j].second;
      bool less_b = pb[i].second < pb[j].second;
      if (less_a != less_b) ++discordant;
    }
  }
  return static_cast<double>(discordant) / static_cast<double>(total);
}

double sign_test(double wins, double losses) {
  if (wins < 0 || losses < 0) throw UsageError("sign_test: negative counts");
  double w = std::round(wins), l = std::round(losses);
  if (std::fabs(w - wins) > 1e-9 || std::fabs(l - losses) > 1e-9) {
    throw UsageError("sign_test: wins/losses must be whole numbers (exclude ties first)");
  }
  double n = w + l;
  if (n <= 0) throw UsageError("sign_test: zero trials");
  double k = std::min(w, l);

  double tail = 0;
  if (n <= 60) {
    // Exact doubles: C(n,i) and 2^-n are representable for n <= 60.
    double pow2 = std::pow(2.0, -n);
    double binom = 1.0;
    for (double i = 0; i <= k; ++i) {
      if (i > 0) binom = binom * (n - i + 1) / i;
      tail += binom * pow2;
    }
  } else {
    for (double i = 0; i <= k; ++i) {
      tail += std::exp(std::lgamma(n + 1) - std::lgamma(i + 1) - std::lgamma(n - i + 1) -
                       n * std::log(2.0));
    }
  }
  return std::min(1.0, 2.0 * tail);
}

}  // namespace xmt
