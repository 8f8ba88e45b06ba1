#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xmt/explain.h"
#include "xmt/metrics.h"
#include "xmt/rng.h"
#include "xmt/serial.h"
#include "xmt/types.h"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& body) {
  auto t0 = Clock::now();
  body();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

const char* kVocab[] = {"the",  "a",     "cat",  "dog",   "sat",   "ran",  "on",
                        "under", "mat",  "table", "red",  "blue",  "house", "tree",
                        "quickly", "slowly", "and", "but", "river", "stone"};
constexpr std::size_t kVocabSize = sizeof(kVocab) / sizeof(kVocab[0]);

xmt::TokenSeq random_sentence(xmt::Rng& rng, int len) {
  xmt::TokenSeq out;
  out.reserve(len);
  for (int i = 0; i < len; ++i) {
    out.push_back(kVocab[rng.next_index(kVocabSize)]);
  }
  return out;
}

std::vector<xmt::Sample> make_samples(int n, int tokens, xmt::Rng& rng) {
  std::vector<xmt::Sample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    xmt::Sample s;
    s.id = std::to_string(i + 1);
    s.hyp = random_sentence(rng, tokens);
    xmt::TokenSeq ref = s.hyp;
    for (auto& tok : ref) {
      if (rng.bernoulli(0.25)) tok = kVocab[rng.next_index(kVocabSize)];
    }
    s.refs.push_back(std::move(ref));
    out.push_back(std::move(s));
  }
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  if (a.size() != b.size()) d = std::numeric_limits<double>::infinity();
  return d;
}

void report(const char* kernel, double par_ms, double ser_ms, double diff) {
  std::printf("%-16s %12.2f %12.2f %9.2fx %13.3g\n", kernel, par_ms, ser_ms,
              par_ms > 0 ? ser_ms / par_ms : 0.0, diff);
}

}  // namespace

int main(int argc, char** argv) {
  int n_samples = 200;
  int n_tokens = 12;
  int lime_samples = 500;
  int n_perms = 200;
  int exact_tokens = 10;
  int threads = 0;

  CLI::App app{"Parallel vs serial reference benchmark"};
  app.add_option("--samples", n_samples, "Dataset size for score_dataset");
  app.add_option("--tokens", n_tokens, "Hypothesis length for the explainers");
  app.add_option("--lime", lime_samples, "LIME perturbation count");
  app.add_option("--perms", n_perms, "Sampled Shapley permutations");
  app.add_option("--exact-tokens", exact_tokens, "Length for exact Shapley (<= 12)");
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");
  CLI11_PARSE(app, argc, argv);

  if (threads > 0) omp_set_num_threads(threads);
  std::printf("threads: %d\n", omp_get_max_threads());

  xmt::Rng rng(42);
  std::vector<xmt::Sample> dataset = make_samples(n_samples, n_tokens, rng);
  xmt::MetricFn bleu = xmt::make_metric("bleu");
  const xmt::Sample& probe = dataset.front();
  constexpr std::uint64_t kSeed = 7;

  std::printf("%-16s %12s %12s %10s %13s\n", "kernel", "parallel_ms", "serial_ms",
              "speedup", "max_abs_diff");

  {
    std::vector<double> par, ser;
    double pt = time_ms([&] { par = xmt::score_dataset(bleu, dataset); });
    double st = time_ms([&] { ser = xmt::serial::score_dataset(bleu, dataset); });
    report("score_dataset", pt, st, max_abs_diff(par, ser));
  }
  {
    xmt::Explanation par, ser;
    double pt = time_ms([&] { par = xmt::erasure_explain(bleu, probe, xmt::Segment::kHyp); });
    double st =
        time_ms([&] { ser = xmt::serial::erasure_explain(bleu, probe, xmt::Segment::kHyp); });
    report("erasure", pt, st, max_abs_diff(par.relevance, ser.relevance));
  }
  {
    xmt::LimeParams p;
    p.n_perturb = lime_samples;
    xmt::Explanation par, ser;
    double pt =
        time_ms([&] { par = xmt::lime_explain(bleu, probe, xmt::Segment::kHyp, p, kSeed); });
    double st = time_ms(
        [&] { ser = xmt::serial::lime_explain(bleu, probe, xmt::Segment::kHyp, p, kSeed); });
    report("lime", pt, st, max_abs_diff(par.relevance, ser.relevance));
  }
  {
    xmt::ShapleyParams p;
    p.mode = xmt::ShapleyParams::Mode::kSampled;
    p.n_perm = n_perms;
    xmt::Explanation par, ser;
    double pt =
        time_ms([&] { par = xmt::shapley_explain(bleu, probe, xmt::Segment::kHyp, p, kSeed); });
    double st = time_ms(
        [&] { ser = xmt::serial::shapley_explain(bleu, probe, xmt::Segment::kHyp, p, kSeed); });
    report("shapley_sampled", pt, st, max_abs_diff(par.relevance, ser.relevance));
  }
  {
    xmt::Sample shorter = probe;
    if (static_cast<int>(shorter.hyp.size()) > exact_tokens) {
      shorter.hyp.resize(exact_tokens);
    }
    xmt::ShapleyParams p;
    p.mode = xmt::ShapleyParams::Mode::kExact;
    xmt::Explanation par, ser;
    double pt =
        time_ms([&] { par = xmt::shapley_explain(bleu, shorter, xmt::Segment::kHyp, p, kSeed); });
    double st = time_ms(
        [&] { ser = xmt::serial::shapley_explain(bleu, shorter, xmt::Segment::kHyp, p, kSeed); });
    report("shapley_exact", pt, st, max_abs_diff(par.relevance, ser.relevance));
  }

  std::printf(
      "serial references recompute the same derived RNG streams; sampled kernels must "
      "match bitwise, exact Shapley within float tolerance.\n");
  return 0;
}
