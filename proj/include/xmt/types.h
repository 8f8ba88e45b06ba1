#ifndef XMT_TYPES_H_
#define XMT_TYPES_H_

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace xmt {

using TokenSeq = std::vector<std::string>;

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (files, samples, tables).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

// Invalid parameters or unsupported option combinations.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

// One evaluation instance: a source sentence, a system hypothesis, zero or
// more references, and optional gold annotations.
struct Sample {
  std::string id;
  TokenSeq src;
  TokenSeq hyp;
  std::vector<TokenSeq> refs;
  std::optional<TokenSeq> pseudo_ref;
  std::optional<std::vector<int>> hyp_word_labels;  // 1 = erroneous word
  std::optional<std::vector<int>> src_word_labels;  // 1 = mistranslated word
  std::optional<double> human_score;
};

// Which token sequence of a sample an operation acts on.
enum class Segment { kHyp, kSrc, kRef };

const char* segment_name(Segment seg);
Segment parse_segment(const std::string& name);

// Returns the tokens selected by `seg`. kRef means the first reference;
// throws DataError when the sample has no reference.
const TokenSeq& segment_tokens(const Sample& s, Segment seg);

// Returns a copy of `s` with the selected segment replaced.
Sample with_segment(const Sample& s, Segment seg, TokenSeq tokens);

// Returns a copy of `s` keeping only tokens of the selected segment whose
// keep flag is nonzero. `keep.size()` must match the segment length.
Sample masked_sample(const Sample& s, Segment seg, const std::vector<char>& keep);

// Word vectors indexed by token. Tokens are kept in sorted order so that
// nearest-neighbor queries are deterministic.
class EmbeddingTable {
 public:
  EmbeddingTable() : dim_(0) {}
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  // Throws DataError on dimension mismatch or duplicate token.
  void insert(const std::string& token, std::vector<double> vec);

  // Returns nullptr for out-of-vocabulary tokens.
  const std::vector<double>* find(const std::string& token) const;

  // Top-k in-vocabulary tokens by cosine similarity to `token`, excluding
  // the token itself. Ties broken by token string. Empty when `token` is
  // out of vocabulary.
  std::vector<std::pair<std::string, double>> neighbors(const std::string& token,
                                                        std::size_t k) const;

  const std::map<std::string, std::vector<double>>& entries() const { return vectors_; }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> vectors_;
};

// Cosine similarity; 0 when either vector has zero norm.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Hand-curated replacement candidates per token, in file order.
struct ReplacementLexicon {
  std::map<std::string, TokenSeq> entries;
  std::vector<std::string> order;  // tokens in file order

  const TokenSeq* find(const std::string& token) const {
    auto it = entries.find(token);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Word-by-word translation dictionary (source language -> target language).
struct WbwDictionary {
  std::map<std::string, std::string> entries;

  // Unknown tokens pass through unchanged.
  TokenSeq translate(const TokenSeq& src) const {
    TokenSeq out;
    out.reserve(src.size());
    for (const auto& tok : src) {
      auto it = entries.find(tok);
      out.push_back(it == entries.end() ? tok : it->second);
    }
    return out;
  }
};

// A named sentence-level metric over samples. Higher scores mean better
// hypotheses. `needs_*` flags describe which sample fields are read.
struct MetricFn {
  std::string name;
  bool needs_ref = false;
  bool needs_src = false;
  bool needs_pseudo_ref = false;
  std::function<double(const Sample&)> score;

  double operator()(const Sample& s) const { return score(s); }
};

}  // namespace xmt

#endif  // XMT_TYPES_H_
