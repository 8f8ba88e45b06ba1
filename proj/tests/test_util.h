#ifndef XMT_TESTS_TEST_UTIL_H_
#define XMT_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xmt/types.h"

namespace testutil {

// Unique scratch directory, removed recursively on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int i = 0; i < 1000; ++i) {
      auto cand = base / ("xmt_test_" + std::to_string(rd()) + "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(cand, ec)) {
        path_ = cand;
        return;
      }
    }
    throw std::runtime_error("cannot create scratch directory");
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }

  std::string file(const std::string& name, const std::string& content) const {
    auto p = path_ / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline xmt::Sample sample(std::string id, xmt::TokenSeq hyp,
                          std::vector<xmt::TokenSeq> refs = {}) {
  xmt::Sample s;
  s.id = std::move(id);
  s.hyp = std::move(hyp);
  s.refs = std::move(refs);
  return s;
}

// Mean of a per-token value lookup over the hypothesis; unknown tokens
// contribute `fallback`, an empty hypothesis scores 0. Never throws, so
// masked evaluations stay exact.
inline xmt::MetricFn table_metric(std::map<std::string, double> table,
                                  double fallback = 0.5) {
  xmt::MetricFn m;
  m.name = "table";
  m.score = [table = std::move(table), fallback](const xmt::Sample& s) {
    if (s.hyp.empty()) return 0.0;
    double sum = 0;
    for (const auto& tok : s.hyp) {
      auto it = table.find(tok);
      sum += it == table.end() ? fallback : it->second;
    }
    return sum / static_cast<double>(s.hyp.size());
  };
  return m;
}

// Fraction of (distinct) reference tokens present in the hypothesis;
// empty hypothesis scores 0.
inline xmt::MetricFn ref_overlap_metric() {
  xmt::MetricFn m;
  m.name = "ref_overlap";
  m.needs_ref = true;
  m.score = [](const xmt::Sample& s) {
    if (s.refs.empty() || s.refs.front().empty()) {
      throw xmt::DataError("sample '" + s.id + "' has no reference");
    }
    const xmt::TokenSeq& ref = s.refs.front();
    double hit = 0;
    for (const auto& r : ref) {
      if (std::find(s.hyp.begin(), s.hyp.end(), r) != s.hyp.end()) ++hit;
    }
    return hit / static_cast<double>(ref.size());
  };
  return m;
}

// Fraction of hypothesis tokens present in the reference; empty
// hypothesis rejected as degenerate.
inline xmt::MetricFn unigram_precision_metric() {
  xmt::MetricFn m;
  m.name = "unigram_precision";
  m.needs_ref = true;
  m.score = [](const xmt::Sample& s) {
    if (s.hyp.empty()) throw xmt::DataError("empty hypothesis");
    if (s.refs.empty()) throw xmt::DataError("sample '" + s.id + "' has no reference");
    const xmt::TokenSeq& ref = s.refs.front();
    double hit = 0;
    for (const auto& h : s.hyp) {
      if (std::find(ref.begin(), ref.end(), h) != ref.end()) ++hit;
    }
    return hit / static_cast<double>(s.hyp.size());
  };
  return m;
}

}  // namespace testutil

#endif  // XMT_TESTS_TEST_UTIL_H_
