#include "xmt/tokenize.h"

#include <cstdint>

namespace xmt {
namespace {

// Decodes the UTF-8 codepoint starting at s[i]; advances i past it.
// Malformed bytes are passed through as single-byte codepoints.
std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  std::uint32_t cp = b0;
  if (b0 >= 0xF0) {
    len = 4;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xE0) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if (b0 >= 0xC0) {
    len = 2;
    cp = b0 & 0x1Fu;
  }
  if (len == 1) {
    ++i;
    return cp;
  }
  std::size_t j = i + 1;
  for (; j < i + len && j < s.size(); ++j) {
    unsigned char b = static_cast<unsigned char>(s[j]);
    if ((b & 0xC0u) != 0x80u) break;
    cp = (cp << 6) | (b & 0x3Fu);
  }
  if (j != i + len) {  // truncated sequence: emit the lead byte as-is
    ++i;
    return b0;
  }
  i = j;
  return cp;
}

bool is_space_cp(std::uint32_t cp) {
  switch (cp) {
    case ' ': case '\t': case '\n': case '\r': case '\f': case '\v':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(std::uint32_t cp) {
  return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
         (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
}

std::size_t count_codepoints(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0u) != 0x80u) ++n;
  }
  return n;
}

// Splits leading/trailing single ASCII punctuation characters off `word`
// while more than one codepoint remains.
void split_punct_word(std::string word, TokenSeq& out) {
  TokenSeq leading;
  while (count_codepoints(word) > 1 &&
         is_ascii_punct(static_cast<unsigned char>(word.front()))) {
    leading.push_back(word.substr(0, 1));
    word.erase(0, 1);
  }
  TokenSeq trailing;
  while (count_codepoints(word) > 1 &&
         is_ascii_punct(static_cast<unsigned char>(word.back()))) {
    trailing.push_back(word.substr(word.size() - 1));
    word.pop_back();
  }
  for (auto& t : leading) out.push_back(std::move(t));
  out.push_back(std::move(word));
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) {
    out.push_back(std::move(*it));
  }
}

}  // namespace

TokenSeq tokenize(const std::string& text, const TokenizeConfig& cfg) {
  TokenSeq out;
  std::string word;
  std::size_t i = 0;
  auto flush = [&] {
    if (word.empty()) return;
    if (cfg.split_punct) {
      split_punct_word(std::move(word), out);
    } else {
      out.push_back(std::move(word));
    }
    word.clear();
  };
  while (i < text.size()) {
    std::size_t start = i;
    std::uint32_t cp = decode_utf8(text, i);
    if (is_space_cp(cp)) {
      flush();
      continue;
    }
    if (cfg.lowercase && cp >= 'A' && cp <= 'Z') {
      word.push_back(static_cast<char>(cp - 'A' + 'a'));
    } else {
      word.append(text, start, i - start);
    }
  }
  flush();
  return out;
}

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace xmt
