#ifndef XMT_TOKENIZE_H_
#define XMT_TOKENIZE_H_

#include <string>

#include "xmt/types.h"

namespace xmt {

struct TokenizeConfig {
  bool lowercase = false;
  bool split_punct = true;
};

// Splits UTF-8 text on Unicode whitespace. With split_punct, single leading
// and trailing ASCII punctuation characters become tokens of their own
// ("My cat is old." -> My,cat,is,old,.). Idempotent on its own output;
// empty text yields an empty sequence.
TokenSeq tokenize(const std::string& text, const TokenizeConfig& cfg = {});

// Joins tokens with single spaces; tokenize(join_tokens(t)) == t for any
// tokenize output t.
std::string join_tokens(const TokenSeq& tokens);

}  // namespace xmt

#endif  // XMT_TOKENIZE_H_
