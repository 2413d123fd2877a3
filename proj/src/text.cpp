#include "cqkit/text.hpp"

#include <algorithm>
#include <unordered_set>

namespace cqkit {

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence starting at `i`, advancing `i`. Malformed,
// overlong and surrogate sequences yield kInvalid and consume one byte.
char32_t decode_utf8(std::string_view s, std::size_t &i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + len > s.size()) {
    ++i;
    return kInvalid;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return kInvalid;
  }
  i += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string &out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Whitespace, control characters, punctuation and symbols all split tokens.
bool is_separator(char32_t cp) {
  if (cp == kInvalid)
    return true;
  if (cp < 0x80) {
    const bool alnum = in(cp, '0', '9') || in(cp, 'a', 'z') || in(cp, 'A', 'Z');
    return !alnum;
  }
  if (in(cp, 0x80, 0xBF))
    return cp != 0xAA && cp != 0xB5 && cp != 0xBA;
  if (cp == 0xD7 || cp == 0xF7)
    return true;
  return cp == 0x1680 || in(cp, 0x2000, 0x206F) || in(cp, 0x20A0, 0x20CF) ||
         in(cp, 0x2190, 0x2BFF) || in(cp, 0x2E00, 0x2E7F) ||
         in(cp, 0x3000, 0x3004) || in(cp, 0x3008, 0x3020) || cp == 0x3030 ||
         in(cp, 0xFE10, 0xFE1F) || in(cp, 0xFE30, 0xFE6F) || cp == 0xFEFF ||
         in(cp, 0xFF01, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) ||
         in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65) ||
         in(cp, 0x1F000, 0x1FAFF);
}

// Simple one-to-one lowercase mapping for Latin, Greek and Cyrillic.
char32_t to_lower(char32_t cp) {
  if (in(cp, 'A', 'Z'))
    return cp + 0x20;
  if (cp < 0xC0)
    return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7)
    return cp + 0x20;
  if (cp == 0x130)
    return 'i';
  if ((in(cp, 0x100, 0x137) || in(cp, 0x14A, 0x177)) && cp % 2 == 0)
    return cp + 1;
  if ((in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) && cp % 2 == 1)
    return cp + 1;
  if (cp == 0x178)
    return 0xFF;
  if (cp == 0x386)
    return 0x3AC;
  if (in(cp, 0x388, 0x38A))
    return cp + 0x25;
  if (cp == 0x38C)
    return 0x3CC;
  if (in(cp, 0x38E, 0x38F))
    return cp + 0x3F;
  if (in(cp, 0x391, 0x3A9) && cp != 0x3A2)
    return cp + 0x20;
  if (in(cp, 0x400, 0x40F))
    return cp + 0x50;
  if (in(cp, 0x410, 0x42F))
    return cp + 0x20;
  return cp;
}

const std::unordered_set<std::string_view> &stopword_set() {
  static const std::unordered_set<std::string_view> set = [] {
    auto words = stopword_list();
    return std::unordered_set<std::string_view>(words.begin(), words.end());
  }();
  return set;
}

} // namespace

bool is_stopword(std::string_view token) {
  return stopword_set().contains(token);
}

TokenList normalize(std::string_view text, bool drop_stopwords) {
  TokenList tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty())
      return;
    if (!drop_stopwords || !is_stopword(current))
      tokens.push_back(std::move(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    if (is_separator(cp))
      flush();
    else
      encode_utf8(to_lower(cp), current);
  }
  flush();
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i)
      out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string normalized_key(std::string_view text) {
  return join_tokens(normalize(text, false));
}

bool contains_sequence(std::span<const std::string> haystack,
                       std::span<const std::string> needle) {
  if (needle.empty() || needle.size() > haystack.size())
    return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

} // namespace cqkit
