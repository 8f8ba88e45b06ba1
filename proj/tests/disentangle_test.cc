#include "xmt/disentangle.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "xmt/rng.h"
#include "xmt/types.h"

using namespace xmt;

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

// Samples whose first reference has 4 unique tokens and whose hypothesis
// contains `k` of them plus unique filler, for controlled lex/lenr factors.
Sample overlap_sample(int i, int k, int len) {
  TokenSeq ref, hyp;
  for (int j = 0; j < 4; ++j) ref.push_back("r" + std::to_string(i) + "_" + std::to_string(j));
  for (int j = 0; j < k; ++j) hyp.push_back(ref[j]);
  for (int j = k; j < len; ++j) hyp.push_back("j" + std::to_string(i) + "_" + std::to_string(j));
  return testutil::sample("s" + std::to_string(i), hyp, {ref});
}

}  // namespace

TEST_CASE("factor scores: lexical overlap, human score, embedding, length ratio") {
  CHECK(lex_score({"a", "b"}, {"a", "c"}) == doctest::Approx(0.5));
  CHECK(lex_score({"a", "b"}, {"a", "b"}) == 1.0);
  CHECK(lex_score({"b", "a"}, {"a", "b"}) == 1.0);  // word order ignored
  // Zero unigram overlap bottoms out at the smoothed precision floor.
  CHECK(lex_score({"x", "y"}, {"a", "b"}) == doctest::Approx(0.01));

  Sample with = testutil::sample("w", {"a"});
  with.human_score = 0.75;
  CHECK(sem_score(with) == 0.75);
  Sample without = testutil::sample("wo", {"a"});
  CHECK_THROWS_WITH_AS(sem_score(without), doctest::Contains("wo"), DataError);

  EmbeddingTable emb(2);
  emb.insert("a", {1, 0});
  emb.insert("b", {0, 1});
  emb.insert("d", {-1, 0});
  CHECK(emb_score({"a"}, {"a"}, emb) == doctest::Approx(1.0));
  CHECK(emb_score({"a"}, {"b"}, emb) == doctest::Approx(0.0));
  CHECK(emb_score({"a"}, {"d"}, emb) == doctest::Approx(-1.0));  // raw cosine kept
  CHECK(emb_score({"a", "b"}, {"b", "a"}, emb) == doctest::Approx(1.0));
  CHECK(emb_score({"oov"}, {"oov"}, emb) == 1.0);  // equality fallback
  CHECK(emb_score({"oov"}, {"other"}, emb) == 0.0);

  CHECK(length_ratio({"a", "b"}, {"a"}) == 2.0);
  CHECK(length_ratio({"a"}, {"a", "b"}) == 0.5);
  CHECK_THROWS_AS(length_ratio({"a"}, {}), DataError);
}

TEST_CASE("ols_fit recovers exact linear coefficients") {
  RegressorSet x;
  x.names = {"x1", "x2"};
  x.columns = {{0.0, 1.0, 2.0, 3.0, 4.0, 0.5}, {1.0, -1.0, 0.5, 2.0, 0.0, 1.5}};
  std::vector<double> y;
  for (std::size_t i = 0; i < 6; ++i) {
    y.push_back(2.0 + 3.0 * x.columns[0][i] - 1.5 * x.columns[1][i]);
  }
  FitResult fit = ols_fit(x, y);
  CHECK_FALSE(fit.ridge_applied);
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-9));
  REQUIRE(fit.coefficients.size() == 2);
  CHECK(fit.coefficients[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit.coefficients[1] == doctest::Approx(-1.5).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ols_fit flags rank-deficient designs and validates input") {
  RegressorSet dup;
  dup.names = {"x1", "x1_again"};
  dup.columns = {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}};
  std::vector<double> y{0, 1, 2, 3, 4};
  FitResult fit = ols_fit(dup, y);
  CHECK(fit.ridge_applied);
  CHECK(fit.coefficients[0] + fit.coefficients[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-6));

  RegressorSet x;
  x.names = {"x1", "x2"};
  x.columns = {{0, 1}, {1, 0}};
  CHECK_THROWS_WITH_AS(ols_fit(x, {0, 1}), doctest::Contains("rows"), UsageError);
  RegressorSet one;
  one.names = {"x1"};
  one.columns = {{0, 1, 2}};
  CHECK_THROWS_WITH_AS(ols_fit(one, {5, 5, 5}), doctest::Contains("zero variance"),
                       DataError);
  RegressorSet none;
  CHECK_THROWS_AS(ols_fit(none, {0, 1, 2}), UsageError);
  RegressorSet bad;
  bad.names = {"x1"};
  bad.columns = {{0, 1}};
  CHECK_THROWS_AS(ols_fit(bad, {0, 1, 2}), UsageError);
}

TEST_CASE("disentangle_report recovers an exactly linear metric") {
  std::vector<Sample> dataset;
  for (int i = 0; i < 24; ++i) {
    dataset.push_back(overlap_sample(i, 1 + i % 3, 3 + i % 4));
  }
  const double a0 = 0.2, a_lex = 0.7, a_lenr = -0.3;
  MetricFn m;
  m.name = "linear";
  m.score = [=](const Sample& s) {
    return a0 + a_lex * lex_score(s.hyp, s.refs.front()) +
           a_lenr * length_ratio(s.hyp, s.refs.front());
  };

  DisentangleReport rep = disentangle_report(dataset, m, {"lex", "lenr"});
  CHECK_FALSE(rep.ridge_applied);
  CHECK(rep.excluded_samples == 0);
  CHECK(rep.r_squared >= 1.0 - 1e-9);
  CHECK(std::fabs(rep.intercept) <= 1e-9);

  // Expected z-scored coefficients: beta_c = a_c * sd(factor_c) / sd(y).
  std::vector<double> f_lex, f_lenr, y;
  for (const Sample& s : dataset) {
    f_lex.push_back(lex_score(s.hyp, s.refs.front()));
    f_lenr.push_back(length_ratio(s.hyp, s.refs.front()));
    y.push_back(m(s));
  }
  auto [lex_mean, lex_sd] = mean_sd(f_lex);
  auto [lenr_mean, lenr_sd] = mean_sd(f_lenr);
  auto [y_mean, y_sd] = mean_sd(y);
  REQUIRE(rep.coefficients.size() == 2);
  CHECK(std::fabs(rep.coefficients[0] - a_lex * lex_sd / y_sd) <= 1e-9);
  CHECK(std::fabs(rep.coefficients[1] - a_lenr * lenr_sd / y_sd) <= 1e-9);

  CHECK(rep.factor_names == std::vector<std::string>{"lex", "lenr"});
  CHECK(rep.zscore_params.at("lex").first == doctest::Approx(lex_mean).epsilon(1e-12));
  CHECK(rep.zscore_params.at("lex").second == doctest::Approx(lex_sd).epsilon(1e-12));
  CHECK(rep.zscore_params.at("lenr").second == doctest::Approx(lenr_sd).epsilon(1e-12));
  CHECK(rep.zscore_params.at("metric").first == doctest::Approx(y_mean).epsilon(1e-12));
  CHECK(rep.zscore_params.at("metric").second == doctest::Approx(y_sd).epsilon(1e-12));
}

TEST_CASE("adding a factor never lowers the fit quality") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Sample> dataset;
    std::map<std::string, double> noise;
    int n = 14 + static_cast<int>(rng.next_index(8));
    for (int i = 0; i < n; ++i) {
      int len = 2 + static_cast<int>(rng.next_index(6));
      int k = 1 + static_cast<int>(rng.next_index(std::min(4, len)));
      dataset.push_back(overlap_sample(i, k, len));
      noise[dataset.back().id] = 0.05 * rng.next_double();
    }
    MetricFn m;
    m.name = "noisy_linear";
    m.score = [noise](const Sample& s) {
      return 0.5 * lex_score(s.hyp, s.refs.front()) +
             0.2 * length_ratio(s.hyp, s.refs.front()) + noise.at(s.id);
    };
    DisentangleReport small = disentangle_report(dataset, m, {"lex"});
    DisentangleReport large = disentangle_report(dataset, m, {"lex", "lenr"});
    REQUIRE_FALSE(small.ridge_applied);
    REQUIRE_FALSE(large.ridge_applied);
    CHECK(large.r_squared >= small.r_squared - 1e-9);
    CHECK(small.r_squared <= 1.0 + 1e-12);
  }
}

TEST_CASE("disentangle_report excludes unusable samples and counts them") {
  std::vector<Sample> dataset;
  for (int i = 0; i < 8; ++i) {
    Sample s = overlap_sample(i, 1 + i % 3, 3 + i % 3);
    s.human_score = 0.1 * i;
    dataset.push_back(s);
  }
  dataset.push_back(testutil::sample("nohuman", {"a"}, {{"a"}}));      // no human score
  Sample noref = testutil::sample("noref", {"a"});
  noref.human_score = 0.4;
  dataset.push_back(noref);                                            // no reference

  MetricFn m;
  m.name = "human_echo";
  m.score = [](const Sample& s) { return s.human_score.value_or(0.25); };
  DisentangleReport rep = disentangle_report(dataset, m, {"sem", "lenr"});
  CHECK(rep.excluded_samples == 2);
  CHECK(rep.r_squared >= 1.0 - 1e-9);  // metric equals the sem factor exactly

  // A pseudo-reference anchors reference-side factors when refs are absent.
  std::vector<Sample> pseudo;
  for (int i = 0; i < 6; ++i) {
    Sample s = testutil::sample("p" + std::to_string(i),
                                TokenSeq(static_cast<std::size_t>(i + 1), "w"));
    s.pseudo_ref = TokenSeq{"w", "w"};
    pseudo.push_back(s);
  }
  MetricFn len_m;
  len_m.name = "len";
  len_m.score = [](const Sample& s) { return static_cast<double>(s.hyp.size()); };
  DisentangleReport prep = disentangle_report(pseudo, len_m, {"lenr"});
  CHECK(prep.excluded_samples == 0);
  CHECK(prep.r_squared >= 1.0 - 1e-9);  // hyp length / 2 is linear in hyp length
}

TEST_CASE("disentangle_report zeroes constant factors and flags the ridge") {
  std::vector<Sample> dataset;
  for (int i = 0; i < 8; ++i) {
    // Same hyp/ref length everywhere: the length-ratio column is constant.
    dataset.push_back(overlap_sample(i, 1 + i % 3, 4));
  }
  MetricFn m;
  m.name = "lexical";
  m.score = [](const Sample& s) { return lex_score(s.hyp, s.refs.front()); };
  DisentangleReport rep = disentangle_report(dataset, m, {"lex", "lenr"});
  REQUIRE(rep.constant_factors.size() == 2);
  CHECK_FALSE(rep.constant_factors[0]);
  CHECK(rep.constant_factors[1]);
  CHECK(rep.ridge_applied);  // all-zero column makes the design rank-deficient
  CHECK(std::fabs(rep.coefficients[1]) <= 1e-6);
  CHECK(rep.zscore_params.at("lenr").second == 0.0);
}

TEST_CASE("disentangle_report validates factors, dataset and metric variance") {
  std::vector<Sample> dataset{overlap_sample(0, 1, 3), overlap_sample(1, 2, 4),
                              overlap_sample(2, 3, 5)};
  MetricFn m = testutil::table_metric({}, 0.5);  // constant 0.5 everywhere

  CHECK_THROWS_WITH_AS(disentangle_report(dataset, m, {"typo"}),
                       doctest::Contains("unknown factor"), UsageError);
  CHECK_THROWS_WITH_AS(disentangle_report(dataset, m, {"emb"}),
                       doctest::Contains("embedding"), UsageError);
  CHECK_THROWS_AS(disentangle_report(dataset, m, {}), UsageError);
  CHECK_THROWS_WITH_AS(disentangle_report({}, m, {"lex"}),
                       doctest::Contains("empty dataset"), DataError);
  CHECK_THROWS_WITH_AS(disentangle_report(dataset, m, {"sem"}),
                       doctest::Contains("every sample was excluded"), DataError);
  CHECK_THROWS_WITH_AS(disentangle_report(dataset, m, {"lex"}),
                       doctest::Contains("zero variance"), DataError);
}

TEST_CASE("embedding factor feeds the regression") {
  EmbeddingTable emb(2);
  emb.insert("a", {1, 0});
  emb.insert("b", {std::sqrt(0.5), std::sqrt(0.5)});
  emb.insert("c", {0, 1});
  std::vector<Sample> dataset;
  const char* toks[] = {"a", "b", "c"};
  int idx = 0;
  for (const char* h : toks) {
    for (const char* r : toks) {
      dataset.push_back(testutil::sample("e" + std::to_string(idx++), {h}, {{r}}));
    }
  }
  MetricFn m;
  m.name = "emb_echo";
  m.score = [&emb](const Sample& s) { return emb_score(s.hyp, s.refs.front(), emb); };
  DisentangleReport rep = disentangle_report(dataset, m, {"emb"}, &emb);
  CHECK(rep.r_squared >= 1.0 - 1e-9);
  CHECK(rep.coefficients[0] == doctest::Approx(1.0).epsilon(1e-9));
}
