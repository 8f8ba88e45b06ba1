#include "xmt/explain.h"

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "xmt/rng.h"
#include "xmt/serial.h"

using namespace xmt;

namespace {

// Synthetic coalition game over tokens "t0".."t<n-1>": value of the kept
// set = base + sum of per-token weights + sum of pairwise interactions.
// Total and defined on the empty set, so masked scores are exact.
struct Game {
  double base = 0;
  std::vector<double> w;
  std::vector<std::vector<double>> u;  // symmetric, zero diagonal

  std::size_t size() const { return w.size(); }
};

Game make_game(std::size_t n, double base = 0) {
  Game g;
  g.base = base;
  g.w.assign(n, 0.0);
  g.u.assign(n, std::vector<double>(n, 0.0));
  return g;
}

Game random_game(Rng& rng, std::size_t n, double w_scale, double u_scale) {
  Game g = make_game(n, rng.next_double());
  for (std::size_t i = 0; i < n; ++i) g.w[i] = (2 * rng.next_double() - 1) * w_scale;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      g.u[i][j] = g.u[j][i] = (2 * rng.next_double() - 1) * u_scale;
    }
  }
  return g;
}

Sample game_sample(std::size_t n) {
  TokenSeq hyp;
  for (std::size_t i = 0; i < n; ++i) hyp.push_back("t" + std::to_string(i));
  return testutil::sample("game", std::move(hyp));
}

MetricFn game_metric(const Game& g) {
  MetricFn m;
  m.name = "game";
  m.score = [g](const Sample& s) {
    std::vector<std::size_t> kept;
    kept.reserve(s.hyp.size());
    for (const auto& tok : s.hyp) kept.push_back(std::stoul(tok.substr(1)));
    double v = g.base;
    for (std::size_t a = 0; a < kept.size(); ++a) {
      v += g.w[kept[a]];
      for (std::size_t b = a + 1; b < kept.size(); ++b) v += g.u[kept[a]][kept[b]];
    }
    return v;
  };
  return m;
}

// phi_i = w_i + 1/2 sum_{j != i} u_ij for additive-plus-pairwise games.
std::vector<double> shapley_closed_form(const Game& g) {
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double inter = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (j != i) inter += g.u[i][j];
    }
    phi[i] = g.w[i] + inter / 2.0;
  }
  return phi;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("score_masked maps degenerate evaluations to zero and flags them") {
  MetricFn strict = testutil::unigram_precision_metric();
  Sample s = testutil::sample("s", {"a", "b"}, {{"a", "b"}});
  bool degenerate = false;
  CHECK(score_masked(strict, s, Segment::kHyp, {1, 0}, &degenerate) == 1.0);
  CHECK_FALSE(degenerate);
  CHECK(score_masked(strict, s, Segment::kHyp, {0, 0}, &degenerate) == 0.0);
  CHECK(degenerate);
  CHECK(score_masked(strict, s, Segment::kHyp, {0, 0}) == 0.0);  // flag optional
}

TEST_CASE("erasure_explain computes leave-one-out differences") {
  MetricFn m = testutil::table_metric({{"good", 1.0}, {"bad", 0.0}});
  Sample s = testutil::sample("s", {"good", "bad"});
  Explanation e = erasure_explain(m, s, Segment::kHyp);
  REQUIRE(e.relevance.size() == 2);
  CHECK(e.full_score == doctest::Approx(0.5));
  CHECK(e.baseline_score == 0.0);
  CHECK(e.relevance[0] == doctest::Approx(0.5));   // removing "good" drops to 0
  CHECK(e.relevance[1] == doctest::Approx(-0.5));  // removing "bad" lifts to 1
  CHECK(e.notes.empty());
  CHECK(e.segment == Segment::kHyp);
}

TEST_CASE("erasure_explain notes degenerate single-token removals") {
  MetricFn strict = testutil::unigram_precision_metric();
  Sample s = testutil::sample("s", {"a"}, {{"a"}});
  Explanation e = erasure_explain(strict, s, Segment::kHyp);
  REQUIRE(e.relevance.size() == 1);
  CHECK(e.relevance[0] == doctest::Approx(1.0));  // full 1, emptied hyp scored 0
  CHECK_FALSE(e.notes.empty());
}

TEST_CASE("erasure_explain on the source segment") {
  MetricFn m;
  m.name = "src_len";
  m.score = [](const Sample& s) { return static_cast<double>(s.src.size()); };
  Sample s = testutil::sample("s", {"h"});
  s.src = {"x", "y", "z"};
  Explanation e = erasure_explain(m, s, Segment::kSrc);
  CHECK(e.segment == Segment::kSrc);
  CHECK(e.relevance == std::vector<double>{1, 1, 1});
}

TEST_CASE("to_error_scores negates relevance") {
  Explanation e;
  e.relevance = {0.5, -0.25, 0.0};
  CHECK(to_error_scores(e) == std::vector<double>{-0.5, 0.25, -0.0});
}

TEST_CASE("lime_explain recovers additive contributions with full enumeration") {
  Rng rng(101);
  LimeParams p;
  p.exhaustive = true;
  for (std::size_t n : {1u, 2u, 5u, 10u}) {
    Game g = random_game(rng, n, 1.0, 0.0);  // purely additive
    Explanation e = lime_explain(game_metric(g), game_sample(n), Segment::kHyp, p, 1);
    CHECK(max_abs_diff(e.relevance, g.w) < 1e-6);
  }
}

TEST_CASE("lime_explain is deterministic in the seed") {
  Rng rng(55);
  Game g = random_game(rng, 6, 1.0, 0.3);
  MetricFn m = game_metric(g);
  Sample s = game_sample(6);
  LimeParams p;
  p.n_perturb = 64;
  Explanation a = lime_explain(m, s, Segment::kHyp, p, 42);
  Explanation b = lime_explain(m, s, Segment::kHyp, p, 42);
  CHECK(a.relevance == b.relevance);
  Explanation c = lime_explain(m, s, Segment::kHyp, p, 43);
  CHECK(a.relevance != c.relevance);
}

TEST_CASE("lime_explain falls back to ridge on rank-deficient designs") {
  Game g = make_game(3);
  g.w = {0.1, 0.2, 0.3};
  LimeParams p;
  p.n_perturb = 3;  // fewer rows than coefficients forces the fallback
  Explanation e = lime_explain(game_metric(g), game_sample(3), Segment::kHyp, p, 9);
  bool noted = false;
  for (const auto& note : e.notes) {
    if (note.find("ridge") != std::string::npos) noted = true;
  }
  CHECK(noted);
}

TEST_CASE("lime_explain validates its parameters") {
  MetricFn m = testutil::table_metric({});
  Sample s = testutil::sample("s", {"a", "b"});
  Sample empty = testutil::sample("e", {});
  LimeParams p;
  CHECK_THROWS_AS(lime_explain(m, empty, Segment::kHyp, p, 1), UsageError);
  p.kernel_width = 0;
  CHECK_THROWS_AS(lime_explain(m, s, Segment::kHyp, p, 1), UsageError);
  p = LimeParams{};
  p.n_perturb = 1;
  CHECK_THROWS_AS(lime_explain(m, s, Segment::kHyp, p, 1), UsageError);
  p = LimeParams{};
  p.drop_prob = 1.0;
  CHECK_THROWS_AS(lime_explain(m, s, Segment::kHyp, p, 1), UsageError);
  p = LimeParams{};
  p.exhaustive = true;
  Sample wide = game_sample(21);
  CHECK_THROWS_AS(lime_explain(m, wide, Segment::kHyp, p, 1), UsageError);
}

TEST_CASE("shapley exact matches the closed form on random games") {
  Rng rng(202);
  ShapleyParams exact;
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 2 + rng.next_index(7);
    Game g = random_game(rng, n, 0.5, 0.2);
    Explanation e =
        shapley_explain(game_metric(g), game_sample(n), Segment::kHyp, exact, 1);
    CHECK(max_abs_diff(e.relevance, shapley_closed_form(g)) < 1e-9);
  }
}

TEST_CASE("shapley exact satisfies efficiency, dummy and symmetry") {
  Game g = make_game(5, 0.25);
  g.w = {0.4, 0.1, 0.1, 0.0, -0.2};
  g.u[1][4] = g.u[4][1] = 0.3;
  g.u[1][2] = g.u[2][1] = -0.1;
  // Tokens 1 and 2 play symmetric roles once u[1][2] is shared; make their
  // remaining interactions match.
  g.u[2][4] = g.u[4][2] = 0.3;
  // Token 3 is a dummy: zero weight, zero interactions.
  MetricFn m = game_metric(g);
  Sample s = game_sample(5);
  Explanation e = shapley_explain(m, s, Segment::kHyp, ShapleyParams{}, 1);

  double total = 0;
  for (double r : e.relevance) total += r;
  CHECK(total == doctest::Approx(e.full_score - e.baseline_score).epsilon(1e-9));
  CHECK(e.baseline_score == doctest::Approx(g.base));
  CHECK(std::fabs(e.relevance[3]) < 1e-12);
  CHECK(e.relevance[1] == doctest::Approx(e.relevance[2]).epsilon(1e-12));
}

TEST_CASE("shapley values are additive across games") {
  Rng rng(303);
  std::size_t n = 6;
  Game g1 = random_game(rng, n, 0.5, 0.2);
  Game g2 = random_game(rng, n, 0.5, 0.2);
  Game sum = make_game(n, g1.base + g2.base);
  for (std::size_t i = 0; i < n; ++i) {
    sum.w[i] = g1.w[i] + g2.w[i];
    for (std::size_t j = 0; j < n; ++j) sum.u[i][j] = g1.u[i][j] + g2.u[i][j];
  }
  Sample s = game_sample(n);
  ShapleyParams exact;
  Explanation e1 = shapley_explain(game_metric(g1), s, Segment::kHyp, exact, 1);
  Explanation e2 = shapley_explain(game_metric(g2), s, Segment::kHyp, exact, 1);
  Explanation es = shapley_explain(game_metric(sum), s, Segment::kHyp, exact, 1);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(es.relevance[i] == doctest::Approx(e1.relevance[i] + e2.relevance[i]).epsilon(1e-9));
  }
}

TEST_CASE("shapley sampled approximates exact values and is seed-deterministic") {
  Rng rng(404);
  Game g = random_game(rng, 6, 0.2, 0.05);
  MetricFn m = game_metric(g);
  Sample s = game_sample(6);
  ShapleyParams sampled;
  sampled.mode = ShapleyParams::Mode::kSampled;
  sampled.n_perm = 2000;
  Explanation approx = shapley_explain(m, s, Segment::kHyp, sampled, 7);
  Explanation exact = shapley_explain(m, s, Segment::kHyp, ShapleyParams{}, 7);
  CHECK(max_abs_diff(approx.relevance, exact.relevance) < 0.05);

  Explanation again = shapley_explain(m, s, Segment::kHyp, sampled, 7);
  CHECK(approx.relevance == again.relevance);
}

TEST_CASE("shapley guards: segment size, mode limits, permutation count") {
  MetricFn m = testutil::table_metric({});
  Sample empty = testutil::sample("e", {});
  CHECK_THROWS_AS(shapley_explain(m, empty, Segment::kHyp, ShapleyParams{}, 1), UsageError);

  Sample wide = game_sample(13);
  CHECK_THROWS_WITH_AS(shapley_explain(m, wide, Segment::kHyp, ShapleyParams{}, 1),
                       doctest::Contains("sampled"), UsageError);

  ShapleyParams sampled;
  sampled.mode = ShapleyParams::Mode::kSampled;
  sampled.n_perm = 0;
  CHECK_THROWS_AS(shapley_explain(m, game_sample(3), Segment::kHyp, sampled, 1),
                  UsageError);
  sampled.n_perm = 50;
  Explanation e = shapley_explain(m, wide, Segment::kHyp, sampled, 1);
  CHECK(e.relevance.size() == 13);  // sampled mode has no size cap
}

TEST_CASE("serial reference implementations match the parallel kernels") {
  Rng rng(505);
  Game g = random_game(rng, 7, 0.5, 0.2);
  MetricFn m = game_metric(g);
  Sample s = game_sample(7);

  Explanation pe = erasure_explain(m, s, Segment::kHyp);
  Explanation se = serial::erasure_explain(m, s, Segment::kHyp);
  CHECK(pe.relevance == se.relevance);
  CHECK(pe.full_score == se.full_score);
  CHECK(pe.baseline_score == se.baseline_score);
  CHECK(pe.notes == se.notes);

  LimeParams lp;
  lp.n_perturb = 128;
  CHECK(lime_explain(m, s, Segment::kHyp, lp, 99).relevance ==
        serial::lime_explain(m, s, Segment::kHyp, lp, 99).relevance);
  lp.exhaustive = true;
  CHECK(lime_explain(m, s, Segment::kHyp, lp, 99).relevance ==
        serial::lime_explain(m, s, Segment::kHyp, lp, 99).relevance);

  ShapleyParams sp;
  sp.mode = ShapleyParams::Mode::kSampled;
  sp.n_perm = 400;
  CHECK(shapley_explain(m, s, Segment::kHyp, sp, 31).relevance ==
        serial::shapley_explain(m, s, Segment::kHyp, sp, 31).relevance);

  // The serial exact formula is structurally different; equality is
  // within floating-point tolerance rather than bitwise.
  ShapleyParams exact;
  CHECK(max_abs_diff(shapley_explain(m, s, Segment::kHyp, exact, 1).relevance,
                     serial::shapley_explain(m, s, Segment::kHyp, exact, 1).relevance) <
        1e-12);
}
