#include "xmt/metrics.h"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "xmt/rng.h"
#include "xmt/serial.h"

using namespace xmt;

namespace {

TokenSeq toks(std::initializer_list<const char*> words) {
  TokenSeq out;
  for (const char* w : words) out.emplace_back(w);
  return out;
}

TokenSeq random_tokens(Rng& rng, const std::vector<std::string>& vocab,
                       std::size_t min_len, std::size_t max_len) {
  std::size_t len = min_len + rng.next_index(max_len - min_len + 1);
  TokenSeq out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) out.push_back(vocab[rng.next_index(vocab.size())]);
  return out;
}

EmbeddingTable small_table() {
  EmbeddingTable t(2);
  t.insert("a", {1, 0});
  t.insert("b", {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)});
  t.insert("c", {0, 1});
  t.insert("d", {-1, 0});
  return t;
}

}  // namespace

TEST_CASE("sentence_bleu hand values") {
  CHECK(sentence_bleu(toks({"the", "cat"}), {toks({"the", "cat"})}) == 1.0);

  BleuParams uni;
  uni.max_n = 1;
  TokenSeq hyp(7, "the");
  TokenSeq ref = toks({"the", "cat", "is", "on", "the", "mat"});
  CHECK(sentence_bleu(hyp, {ref}, uni) == doctest::Approx(2.0 / 7.0).epsilon(1e-9));

  BleuParams bi;
  bi.max_n = 2;
  CHECK(sentence_bleu(toks({"x", "y"}), {toks({"a", "b"})}, bi) == 0.01);
}

TEST_CASE("sentence_bleu uses orders up to the hypothesis length") {
  BleuParams four;  // default max_n 4 on a 1-token hypothesis
  CHECK(sentence_bleu(toks({"a"}), {toks({"a"})}, four) == 1.0);
  CHECK(sentence_bleu(toks({"a"}), {toks({"b"})}, four) == 0.01);
}

TEST_CASE("sentence_bleu clips against per-reference maxima") {
  BleuParams uni;
  uni.max_n = 1;
  // "a" clipped at 2 (first ref), "b" clipped at 2 (second ref): p1 = 1.
  CHECK(sentence_bleu(toks({"a", "a", "b"}),
                      {toks({"a", "a"}), toks({"b", "b"})}, uni) == 1.0);
}

TEST_CASE("sentence_bleu brevity penalty picks the closest reference, ties to shorter") {
  BleuParams uni;
  uni.max_n = 1;
  // c = 3; refs of length 2 and 4 tie; the shorter one gives BP = 1.
  double tied = sentence_bleu(toks({"a", "b", "c"}),
                              {toks({"a", "b"}), toks({"a", "b", "c", "d"})}, uni);
  CHECK(tied == 1.0);
  // Only the length-4 reference: BP = exp(1 - 4/3) < 1.
  double penalized =
      sentence_bleu(toks({"a", "b", "c"}), {toks({"a", "b", "c", "d"})}, uni);
  CHECK(penalized == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("sentence_bleu degenerate inputs") {
  CHECK_THROWS_AS(sentence_bleu({}, {toks({"a"})}), DataError);
  CHECK_THROWS_AS(sentence_bleu(toks({"a"}), {}), DataError);
  CHECK_THROWS_AS(sentence_bleu(toks({"a"}), {TokenSeq{}}), DataError);
  BleuParams bad;
  bad.max_n = 0;
  CHECK_THROWS_AS(sentence_bleu(toks({"a"}), {toks({"a"})}, bad), UsageError);
}

TEST_CASE("sentence_bleu properties: hypothesis as reference, unigram permutation") {
  Rng rng(11);
  std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  BleuParams uni;
  uni.max_n = 1;
  for (int trial = 0; trial < 100; ++trial) {
    TokenSeq hyp = random_tokens(rng, vocab, 1, 8);
    TokenSeq ref = random_tokens(rng, vocab, 1, 8);
    CHECK(sentence_bleu(hyp, {ref, hyp}) == 1.0);

    TokenSeq shuffled = hyp;
    rng.shuffle(shuffled);
    CHECK(sentence_bleu(hyp, {ref}, uni) == sentence_bleu(shuffled, {ref}, uni));
  }
}

TEST_CASE("chrf hand values") {
  CHECK(chrf("identical", {"identical"}) == 1.0);
  CHECK(chrf("a b", {"ab"}) == 1.0);  // whitespace removed before matching
  CHECK(chrf("aaa", {"bbb"}) == 0.0);
  CHECK(chrf("ab", {"abc"}, 1) == doctest::Approx(5.0 / 7.0).epsilon(1e-9));
  // Orders 1 and 2: P = 1, R = (2/3 + 1/2)/2 = 7/12, F2 = 7/11.
  CHECK(chrf("ab", {"abc"}, 2) == doctest::Approx(7.0 / 11.0).epsilon(1e-9));
}

TEST_CASE("chrf works on codepoints, not bytes") {
  // Order-2 codepoint bigrams are disjoint; byte bigrams would overlap.
  CHECK(chrf("éa", {"aé"}, 2) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(chrf("é", {"é"}) == 1.0);
}

TEST_CASE("chrf skips orders with no n-grams on either side") {
  CHECK(chrf("a", {"a"}, 6) == 1.0);  // orders 2..6 vacuous
  CHECK(chrf("", {"x"}) == 0.0);
  CHECK(chrf("zz", {"zz", "ab"}) == 1.0);  // max over references
  CHECK_THROWS_AS(chrf("", {""}), DataError);
  CHECK_THROWS_AS(chrf("a", std::vector<std::string>{}), DataError);
  CHECK_THROWS_AS(chrf("a", {"a"}, 0), UsageError);
  CHECK_THROWS_AS(chrf("a", {"a"}, 6, 0.0), UsageError);
}

TEST_CASE("chrf is symmetric at beta=1") {
  Rng rng(5);
  const char* words[] = {"cat", "dog", "house", "tree", "xy"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string a, b;
    for (int i = 0; i < 3; ++i) {
      a += words[rng.next_index(5)];
      b += words[rng.next_index(5)];
      a += ' ';
      b += ' ';
    }
    CHECK(chrf(a, {b}, 6, 1.0) == doctest::Approx(chrf(b, {a}, 6, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("meteor_lite hand values") {
  CHECK(meteor_lite(toks({"a", "b"}), toks({"a", "b"})) == 1.0);
  CHECK(meteor_lite(toks({"b", "a"}), toks({"a", "b"})) == doctest::Approx(0.5));
  CHECK(meteor_lite(toks({"a", "b", "c"}), toks({"a", "c", "b"})) == doctest::Approx(0.5));
  CHECK(meteor_lite(toks({"x", "y"}), toks({"a", "b"})) == 0.0);
  // One chunk, partial recall: P = 1, R = 2/3, F = (2/3)/(0.9 + (2/3)/10).
  CHECK(meteor_lite(toks({"a", "b"}), toks({"a", "b", "c"})) ==
        doctest::Approx(20.0 / 29.0).epsilon(1e-12));
}

TEST_CASE("meteor_lite staged matching: stems and lexicon synonyms") {
  CHECK(meteor_lite(toks({"boxes"}), toks({"box"})) == 1.0);
  CHECK(meteor_lite(toks({"walking"}), toks({"walked"})) == 1.0);
  CHECK(meteor_lite(toks({"us"}), toks({"used"})) == 0.0);  // remainder too short

  ReplacementLexicon lex;
  lex.entries["big"] = {"large", "huge"};
  lex.order.push_back("big");
  CHECK(meteor_lite(toks({"big"}), toks({"large"})) == 0.0);
  CHECK(meteor_lite(toks({"big"}), toks({"large"}), {}, &lex) == 1.0);
  CHECK(meteor_lite(toks({"large"}), toks({"big"}), {}, &lex) == 1.0);  // symmetric lookup

  CHECK_THROWS_AS(meteor_lite({}, toks({"a"})), DataError);
  CHECK_THROWS_AS(meteor_lite(toks({"a"}), {}), DataError);
}

TEST_CASE("greedy_embed_match hand values") {
  EmbeddingTable t = small_table();
  CHECK(greedy_embed_match(toks({"a", "c"}), toks({"a", "c"}), t) == 1.0);
  CHECK(greedy_embed_match(toks({"a"}), toks({"c"}), t) == 0.0);
  CHECK(greedy_embed_match(toks({"a"}), toks({"b"}), t) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  // Negative cosine clamps to zero.
  CHECK(greedy_embed_match(toks({"a"}), toks({"d"}), t) == 0.0);
  // P = 1, R = (1 + 0)/2 -> harmonic 2/3.
  CHECK(greedy_embed_match(toks({"a"}), toks({"a", "c"}), t) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("greedy_embed_match treats out-of-vocabulary pairs as exact match") {
  EmbeddingTable t = small_table();
  CHECK(greedy_embed_match(toks({"zzz"}), toks({"zzz"}), t) == 1.0);
  CHECK(greedy_embed_match(toks({"zzz"}), toks({"yyy"}), t) == 0.0);
  CHECK(greedy_embed_match(toks({"zzz"}), toks({"a"}), t) == 0.0);
}

TEST_CASE("greedy_embed_match is symmetric") {
  EmbeddingTable t = small_table();
  Rng rng(3);
  std::vector<std::string> vocab{"a", "b", "c", "d", "oov1", "oov2"};
  for (int trial = 0; trial < 50; ++trial) {
    TokenSeq x = random_tokens(rng, vocab, 1, 5);
    TokenSeq y = random_tokens(rng, vocab, 1, 5);
    CHECK(greedy_embed_match(x, y, t) == doctest::Approx(greedy_embed_match(y, x, t)));
  }
}

TEST_CASE("all metrics stay within [0, 1] and are deterministic") {
  Rng rng(17);
  std::vector<std::string> vocab{"a", "b", "c", "d", "walking", "boxes", "zzz"};
  EmbeddingTable t = small_table();
  auto lex = std::make_shared<ReplacementLexicon>();
  lex->entries["a"] = {"b"};
  lex->order.push_back("a");

  MetricOptions opts;
  opts.embeddings = std::make_shared<EmbeddingTable>(t);
  opts.lexicon = lex;
  std::vector<MetricFn> metrics{make_metric("bleu", opts), make_metric("chrf", opts),
                                make_metric("meteor", opts), make_metric("embed", opts)};

  for (int trial = 0; trial < 100; ++trial) {
    Sample s = testutil::sample("f" + std::to_string(trial),
                                random_tokens(rng, vocab, 1, 7),
                                {random_tokens(rng, vocab, 1, 7)});
    for (const MetricFn& m : metrics) {
      double v1 = m(s);
      double v2 = m(s);
      CHECK(v1 == v2);
      CHECK(v1 >= 0.0);
      CHECK(v1 <= 1.0);
    }
  }
}

TEST_CASE("make_metric validates names and reference presence") {
  CHECK_THROWS_WITH_AS(make_metric("comet"), doctest::Contains("unknown metric"),
                       UsageError);
  CHECK_THROWS_AS(make_metric("embed"), UsageError);  // needs embeddings

  MetricFn bleu = make_metric("bleu");
  Sample no_ref = testutil::sample("s7", {"a"});
  CHECK_THROWS_WITH_AS(bleu(no_ref), doctest::Contains("s7"), DataError);
  Sample empty_ref = testutil::sample("s8", {"a"}, {TokenSeq{}});
  CHECK_THROWS_AS(bleu(empty_ref), DataError);

  // meteor/embed skip empty references and take the max over the rest.
  MetricOptions opts;
  opts.embeddings = std::make_shared<EmbeddingTable>(small_table());
  Sample mixed = testutil::sample("s9", {"a"}, {TokenSeq{}, toks({"a"})});
  CHECK(make_metric("meteor")(mixed) == 1.0);
  CHECK(make_metric("embed", opts)(mixed) == 1.0);
}

TEST_CASE("make_reference_free adapts metrics to pseudo-references") {
  MetricFn bleu = make_metric("bleu");

  Sample s = testutil::sample("p1", {"the", "dog"}, {toks({"unrelated", "words"})});
  s.pseudo_ref = toks({"the", "dog"});
  MetricFn file_mode = make_reference_free(bleu, PseudoRefMode::kFilePseudoRef);
  CHECK(file_mode.needs_pseudo_ref);
  CHECK(file_mode(s) == 1.0);
  CHECK(bleu(s) < 1.0);  // original references untouched

  Sample missing = testutil::sample("p2", {"x"}, {toks({"x"})});
  CHECK_THROWS_WITH_AS(file_mode(missing), doctest::Contains("p2"), DataError);

  auto dict = std::make_shared<WbwDictionary>();
  dict->entries = {{"der", "the"}, {"hund", "dog"}};
  MetricFn wbw = make_reference_free(bleu, PseudoRefMode::kWbw, dict);
  Sample w = testutil::sample("p3", {"the", "dog"});
  w.src = toks({"der", "hund"});
  CHECK(wbw(w) == 1.0);

  // "katze" is not in the dictionary and passes through verbatim.
  Sample pass_through = testutil::sample("p4", {"the", "katze"});
  pass_through.src = toks({"der", "katze"});
  CHECK(wbw(pass_through) == 1.0);
  Sample translated_side = testutil::sample("p5", {"the", "cat"});
  translated_side.src = toks({"der", "katze"});
  CHECK(wbw(translated_side) < 1.0);

  Sample no_src = testutil::sample("p7", {"x"});
  CHECK_THROWS_WITH_AS(wbw(no_src), doctest::Contains("p7"), DataError);
  CHECK_THROWS_AS(make_reference_free(bleu, PseudoRefMode::kWbw, nullptr), UsageError);
}

TEST_CASE("zscore_scores hand values and idempotence") {
  auto z = zscore_scores({1, 2, 3});
  REQUIRE(z.size() == 3);
  CHECK(z[0] == doctest::Approx(-1.224744871).epsilon(1e-9));
  CHECK(z[1] == doctest::Approx(0.0));
  CHECK(z[2] == doctest::Approx(1.224744871).epsilon(1e-9));

  auto constant = zscore_scores({5, 5, 5});
  CHECK(constant == std::vector<double>{0, 0, 0});

  auto again = zscore_scores(z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(again[i] == doctest::Approx(z[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(zscore_scores({1}), UsageError);
}

TEST_CASE("score_dataset preserves input order and matches the serial loop") {
  Rng rng(23);
  std::vector<std::string> vocab{"a", "b", "c", "d"};
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) {
    samples.push_back(testutil::sample("s" + std::to_string(i),
                                       random_tokens(rng, vocab, 1, 6),
                                       {random_tokens(rng, vocab, 1, 6)}));
  }
  MetricFn bleu = make_metric("bleu");
  std::vector<double> par = score_dataset(bleu, samples);
  std::vector<double> ser = xmt::serial::score_dataset(bleu, samples);
  REQUIRE(par.size() == samples.size());
  CHECK(par == ser);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(par[i] == bleu(samples[i]));
  }
}
