#include "xmt/tokenize.h"

#include <string>

#include "doctest.h"
#include "xmt/rng.h"

using xmt::TokenSeq;
using xmt::tokenize;
using xmt::TokenizeConfig;

TEST_CASE("tokenize splits on whitespace and peels edge punctuation") {
  CHECK(tokenize("My cat is old.") == TokenSeq{"My", "cat", "is", "old", "."});
  CHECK(tokenize("\"quoted\"") == TokenSeq{"\"", "quoted", "\""});
  CHECK(tokenize("a.!") == TokenSeq{"a", ".", "!"});
  CHECK(tokenize("don't stop") == TokenSeq{"don't", "stop"});
  CHECK(tokenize("  spaced\tout \n lines ") == TokenSeq{"spaced", "out", "lines"});
}

TEST_CASE("tokenize leaves interior punctuation and bare marks intact") {
  CHECK(tokenize("...") == TokenSeq{".", ".", "."});
  CHECK(tokenize("?") == TokenSeq{"?"});
  CHECK(tokenize("3.14") == TokenSeq{"3.14"});
}

TEST_CASE("tokenize without punctuation splitting keeps whitespace tokens") {
  TokenizeConfig cfg;
  cfg.split_punct = false;
  CHECK(tokenize("My cat is old.", cfg) == TokenSeq{"My", "cat", "is", "old."});
}

TEST_CASE("tokenize lowercase option maps ASCII only") {
  TokenizeConfig cfg;
  cfg.lowercase = true;
  cfg.split_punct = false;
  CHECK(tokenize("Der Hund LÄUFT", cfg) == TokenSeq{"der", "hund", "lÄuft"});
}

TEST_CASE("tokenize handles unicode whitespace and multibyte words") {
  CHECK(tokenize("café naïve") == TokenSeq{"café", "naïve"});
  CHECK(tokenize("a b") == TokenSeq{"a", "b"});        // no-break space
  CHECK(tokenize("a b　c") == TokenSeq{"a", "b", "c"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t\n").empty());
}

TEST_CASE("tokenize is idempotent on its own output") {
  xmt::Rng rng(7);
  const std::string pieces[] = {"word", "x.", "(y)", "z!", "1,000", "a-b", "q's", "..."};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    for (int i = 0; i < 6; ++i) {
      if (i) text += ' ';
      text += pieces[rng.next_index(8)];
    }
    TokenSeq once = tokenize(text);
    TokenSeq twice = tokenize(xmt::join_tokens(once));
    CHECK(once == twice);
  }
}

TEST_CASE("join_tokens round-trips tokenizer output") {
  TokenSeq t = tokenize("He said: \"go home now\".");
  CHECK(tokenize(xmt::join_tokens(t)) == t);
  CHECK(xmt::join_tokens({}) == "");
  CHECK(xmt::join_tokens({"one"}) == "one");
}
