#ifndef XMT_RANKING_H_
#define XMT_RANKING_H_

#include <string>
#include <vector>

#include "xmt/types.h"

namespace xmt {

// Rectangular per-instance scores for competing systems.
struct ScoreTable {
  std::vector<std::string> systems;
  std::vector<std::string> instances;
  std::vector<std::vector<double>> values;  // [system][instance]
};

struct WinMatrix {
  std::vector<std::string> systems;
  std::vector<std::vector<double>> w;  // w[a][b] = wins of a over b, ties 0.5 each
};

WinMatrix win_matrix(const ScoreTable& t);

struct BtOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  double prior = 0.1;  // pseudo-wins added to every off-diagonal cell
};

class BtNonConvergence : public Error {
 public:
  BtNonConvergence(const std::string& what, std::vector<double> last)
      : Error(what), last_iterate(std::move(last)) {}
  std::vector<double> last_iterate;
};

// Bradley-Terry strengths via the MM iteration
// pi_a <- sum_b w_ab / sum_b (w_ab + w_ba) / (pi_a + pi_b),
// normalized each sweep, until the max change drops below tol. Positive,
// sum to 1. Throws BtNonConvergence (carrying the last iterate) when
// max_iter is exceeded.
std::vector<double> bt_fit(const WinMatrix& w, const BtOptions& opts = {});

// Descending rankings; ties broken by system name.
std::vector<std::string> rank_by_mean(const ScoreTable& t);
std::vector<std::string> rank_by_bt(const ScoreTable& t, const BtOptions& opts = {});

// Fraction of system pairs the two rankings order differently.
double ranking_disagreement(const std::vector<std::string>& a,
                            const std::vector<std::string>& b);

// Two-sided exact binomial test of wins vs losses under p = 1/2. Ties
// must be excluded beforehand; wins/losses must be whole numbers.
double sign_test(double wins, double losses);

}  // namespace xmt

#endif  // XMT_RANKING_H_
