#ifndef XMT_CORPUS_H_
#define XMT_CORPUS_H_

#include <optional>
#include <string>
#include <vector>

#include "xmt/tokenize.h"
#include "xmt/types.h"

namespace xmt {

// Loads a JSONL dataset (one object per line; fields id, src, hyp,
// ref (array), pseudo_ref, hyp_word_labels, src_word_labels, human_score;
// unknown keys ignored). When cfg is not given, punctuation splitting is
// disabled iff any line carries word labels, so that labels align with
// whitespace tokens. Throws DataError naming the line/sample on malformed
// JSON, wrong field types, or label/token length mismatches.
std::vector<Sample> load_dataset(const std::string& path,
                                 std::optional<TokenizeConfig> cfg = std::nullopt);

// Re-serializes samples to the JSONL format accepted by load_dataset;
// loading the result yields identical samples.
std::string dataset_to_jsonl(const std::vector<Sample>& samples);

// Loads word2vec-style text embeddings: optional "V D" header line, then
// lines "token v1 ... vD". The dimension is inferred from the first vector
// when no header is present.
EmbeddingTable load_embeddings(const std::string& path);

// Loads a TSV replacement lexicon: token<TAB>cand1,cand2,...
// Candidate lists must be duplicate-free and never contain the key.
ReplacementLexicon load_lexicon(const std::string& path);

// Loads a TSV word-by-word dictionary: src_token<TAB>tgt_token.
WbwDictionary load_wbw(const std::string& path);

// Cohen's kappa over labels in {0,1,2}. Coarse mode first collapses
// {1,2} -> 1 (agreement on "changed" vs "unchanged"). When expected
// agreement is 1 the result is 1.0 for identical sequences, else 0.0.
double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b,
                   bool coarse = false);

}  // namespace xmt

#endif  // XMT_CORPUS_H_
