#include "xmt/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace xmt {

const char* segment_name(Segment seg) {
  switch (seg) {
    case Segment::kHyp: return "hyp";
    case Segment::kSrc: return "src";
    case Segment::kRef: return "ref";
  }
  return "?";
}

Segment parse_segment(const std::string& name) {
  if (name == "hyp") return Segment::kHyp;
  if (name == "src") return Segment::kSrc;
  if (name == "ref") return Segment::kRef;
  throw UsageError("unknown segment '" + name + "' (expected hyp, src or ref)");
}

const TokenSeq& segment_tokens(const Sample& s, Segment seg) {
  switch (seg) {
    case Segment::kHyp: return s.hyp;
    case Segment::kSrc: return s.src;
    case Segment::kRef:
      if (s.refs.empty()) {
        throw DataError("sample '" + s.id + "' has no reference");
      }
      return s.refs.front();
  }
  throw UsageError("invalid segment");
}

Sample with_segment(const Sample& s, Segment seg, TokenSeq tokens) {
  Sample out = s;
  switch (seg) {
    case Segment::kHyp: out.hyp = std::move(tokens); break;
    case Segment::kSrc: out.src = std::move(tokens); break;
    case Segment::kRef:
      if (out.refs.empty()) {
        throw DataError("sample '" + s.id + "' has no reference");
      }
      out.refs.front() = std::move(tokens);
      break;
  }
  return out;
}

Sample masked_sample(const Sample& s, Segment seg, const std::vector<char>& keep) {
  const TokenSeq& tokens = segment_tokens(s, seg);
  if (keep.size() != tokens.size()) {
    throw UsageError("mask length " + std::to_string(keep.size()) +
                     " does not match segment length " + std::to_string(tokens.size()));
  }
  TokenSeq kept;
  kept.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (keep[i]) kept.push_back(tokens[i]);
  }
  return with_segment(s, seg, std::move(kept));
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void EmbeddingTable::insert(const std::string& token, std::vector<double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_) {
    throw DataError("embedding for '" + token + "' has dimension " +
                    std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
  }
  auto [it, inserted] = vectors_.emplace(token, std::move(vec));
  (void)it;
  if (!inserted) throw DataError("duplicate embedding token '" + token + "'");
}

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
  auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::string, double>> EmbeddingTable::neighbors(
    const std::string& token, std::size_t k) const {
  std::vector<std::pair<std::string, double>> out;
  const std::vector<double>* v = find(token);
  if (!v || k == 0) return out;
  out.reserve(vectors_.size());
  for (const auto& [tok, vec] : vectors_) {
    if (tok == token) continue;
    out.emplace_back(tok, cosine(*v, vec));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

namespace {

using json = nlohmann::json;

[[noreturn]] void line_error(const std::string& path, std::size_t line_no,
                             const std::string& msg) {
  throw DataError(path + ":" + std::to_string(line_no) + ": " + msg);
}

TokenSeq tokenize_field(const json& v, const TokenizeConfig& cfg,
                        const std::string& path, std::size_t line_no,
                        const char* field) {
  if (!v.is_string()) {
    line_error(path, line_no, std::string("field '") + field + "' must be a string");
  }
  return tokenize(v.get<std::string>(), cfg);
}

std::vector<int> label_field(const json& v, const std::string& path,
                             std::size_t line_no, const char* field) {
  if (!v.is_array()) {
    line_error(path, line_no, std::string("field '") + field + "' must be an array");
  }
  std::vector<int> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number_integer() || (e.get<int>() != 0 && e.get<int>() != 1)) {
      line_error(path, line_no, std::string("field '") + field + "' must contain 0/1");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

std::vector<Sample> load_dataset(const std::string& path,
                                 std::optional<TokenizeConfig> cfg) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<std::pair<std::size_t, json>> objects;
  bool has_labels = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    json obj = json::parse(lines[i], nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      line_error(path, i + 1, "malformed JSON object");
    }
    if (obj.contains("hyp_word_labels") || obj.contains("src_word_labels")) {
      has_labels = true;
    }
    objects.emplace_back(i + 1, std::move(obj));
  }

  TokenizeConfig tok = cfg.value_or(TokenizeConfig{false, !has_labels});
  std::vector<Sample> samples;
  samples.reserve(objects.size());
  for (auto& [line_no, obj] : objects) {
    Sample s;
    if (obj.contains("id")) {
      if (!obj["id"].is_string()) line_error(path, line_no, "field 'id' must be a string");
      s.id = obj["id"].get<std::string>();
    } else {
      s.id = std::to_string(line_no);
    }
    if (!obj.contains("hyp")) line_error(path, line_no, "missing required field 'hyp'");
    s.hyp = tokenize_field(obj["hyp"], tok, path, line_no, "hyp");
    if (obj.contains("src")) s.src = tokenize_field(obj["src"], tok, path, line_no, "src");
    if (obj.contains("ref")) {
      if (!obj["ref"].is_array()) {
        line_error(path, line_no, "field 'ref' must be an array of strings");
      }
      for (const auto& r : obj["ref"]) {
        s.refs.push_back(tokenize_field(r, tok, path, line_no, "ref"));
      }
    }
    if (s.refs.empty() && s.src.empty()) {
      line_error(path, line_no, "sample '" + s.id + "' needs 'ref' or 'src'");
    }
    if (obj.contains("pseudo_ref")) {
      s.pseudo_ref = tokenize_field(obj["pseudo_ref"], tok, path, line_no, "pseudo_ref");
    }
    if (obj.contains("hyp_word_labels")) {
      s.hyp_word_labels = label_field(obj["hyp_word_labels"], path, line_no, "hyp_word_labels");
      if (s.hyp_word_labels->size() != s.hyp.size()) {
        line_error(path, line_no,
                   "sample '" + s.id + "': hyp_word_labels length " +
                       std::to_string(s.hyp_word_labels->size()) + " != " +
                       std::to_string(s.hyp.size()) + " hyp tokens");
      }
    }
    if (obj.contains("src_word_labels")) {
      s.src_word_labels = label_field(obj["src_word_labels"], path, line_no, "src_word_labels");
      if (s.src_word_labels->size() != s.src.size()) {
        line_error(path, line_no,
                   "sample '" + s.id + "': src_word_labels length " +
                       std::to_string(s.src_word_labels->size()) + " != " +
                       std::to_string(s.src.size()) + " src tokens");
      }
    }
    if (obj.contains("human_score")) {
      if (!obj["human_score"].is_number()) {
        line_error(path, line_no, "field 'human_score' must be a number");
      }
      s.human_score = obj["human_score"].get<double>();
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string dataset_to_jsonl(const std::vector<Sample>& samples) {
  std::string out;
  for (const Sample& s : samples) {
    nlohmann::ordered_json obj;
    obj["id"] = s.id;
    if (!s.src.empty()) obj["src"] = join_tokens(s.src);
    obj["hyp"] = join_tokens(s.hyp);
    if (!s.refs.empty()) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& r : s.refs) arr.push_back(join_tokens(r));
      obj["ref"] = arr;
    }
    if (s.pseudo_ref) obj["pseudo_ref"] = join_tokens(*s.pseudo_ref);
    if (s.hyp_word_labels) obj["hyp_word_labels"] = *s.hyp_word_labels;
    if (s.src_word_labels) obj["src_word_labels"] = *s.src_word_labels;
    if (s.human_score) obj["human_score"] = *s.human_score;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

namespace {

bool parse_double(const std::string& s, double* out) {
  const char* p = s.c_str();
  char* end = nullptr;
  *out = std::strtod(p, &end);
  return end == p + s.size() && !s.empty();
}

bool is_uint(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string f;
  while (in >> f) fields.push_back(f);
  return fields;
}

}  // namespace

EmbeddingTable load_embeddings(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  std::size_t start = 0;
  std::size_t declared_count = 0, declared_dim = 0;
  bool has_header = false;
  while (start < lines.size() && is_blank(lines[start])) ++start;
  if (start < lines.size()) {
    auto fields = split_ws(lines[start]);
    if (fields.size() == 2 && is_uint(fields[0]) && is_uint(fields[1])) {
      has_header = true;
      declared_count = std::stoul(fields[0]);
      declared_dim = std::stoul(fields[1]);
      ++start;
    }
  }
  EmbeddingTable table(has_header ? declared_dim : 0);
  for (std::size_t i = start; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    auto fields = split_ws(lines[i]);
    if (fields.size() < 2) line_error(path, i + 1, "expected 'token v1 ... vD'");
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v;
      if (!parse_double(fields[j], &v)) {
        line_error(path, i + 1, "non-numeric component '" + fields[j] + "'");
      }
      vec.push_back(v);
    }
    try {
      table.insert(fields[0], std::move(vec));
    } catch (const DataError& e) {
      line_error(path, i + 1, e.what());
    }
  }
  if (table.size() == 0) throw DataError(path + ": no embeddings");
  if (has_header && table.size() != declared_count) {
    throw DataError(path + ": header declares " + std::to_string(declared_count) +
                    " vectors, found " + std::to_string(table.size()));
  }
  return table;
}

ReplacementLexicon load_lexicon(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  ReplacementLexicon lex;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    std::size_t tab = lines[i].find('\t');
    if (tab == std::string::npos) line_error(path, i + 1, "expected 'token<TAB>cand1,cand2,...'");
    std::string token = lines[i].substr(0, tab);
    std::string rest = lines[i].substr(tab + 1);
    if (token.empty()) line_error(path, i + 1, "empty token");
    if (lex.entries.count(token)) line_error(path, i + 1, "duplicate token '" + token + "'");
    TokenSeq cands;
    std::istringstream in(rest);
    std::string cand;
    while (std::getline(in, cand, ',')) {
      if (cand.empty()) line_error(path, i + 1, "empty candidate for '" + token + "'");
      if (cand == token) line_error(path, i + 1, "candidate equals token '" + token + "'");
      if (std::find(cands.begin(), cands.end(), cand) != cands.end()) {
        line_error(path, i + 1, "duplicate candidate '" + cand + "'");
      }
      cands.push_back(cand);
    }
    if (cands.empty()) line_error(path, i + 1, "no candidates for '" + token + "'");
    lex.entries.emplace(token, std::move(cands));
    lex.order.push_back(token);
  }
  return lex;
}

WbwDictionary load_wbw(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  WbwDictionary dict;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    std::size_t tab = lines[i].find('\t');
    if (tab == std::string::npos) line_error(path, i + 1, "expected 'src<TAB>tgt'");
    std::string src = lines[i].substr(0, tab);
    std::string tgt = lines[i].substr(tab + 1);
    if (src.empty() || tgt.empty()) line_error(path, i + 1, "empty field");
    if (!dict.entries.emplace(src, tgt).second) {
      line_error(path, i + 1, "duplicate source token '" + src + "'");
    }
  }
  return dict;
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b, bool coarse) {
  if (a.size() != b.size()) throw UsageError("kappa: label sequences differ in length");
  if (a.empty()) throw UsageError("kappa: empty input");
  auto map_label = [coarse](int v) {
    if (v < 0 || v > 2) throw DataError("kappa: label " + std::to_string(v) + " outside {0,1,2}");
    return coarse && v == 2 ? 1 : v;
  };
  double n = static_cast<double>(a.size());
  double agree = 0;
  double count_a[3] = {0, 0, 0}, count_b[3] = {0, 0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    int la = map_label(a[i]), lb = map_label(b[i]);
    if (la == lb) ++agree;
    ++count_a[la];
    ++count_b[lb];
  }
  double po = agree / n;
  double pe = 0;
  for (int c = 0; c < 3; ++c) pe += (count_a[c] / n) * (count_b[c] / n);
  if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

}  // namespace xmt
