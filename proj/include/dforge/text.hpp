#pragma once

// UTF-8 scanning, Arabic orthographic normalization and the surface
// tokenizer shared by the funnel, the lexicon matcher and the metrics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dforge {

namespace utf8 {

/// Decodes the code point starting at `pos` and advances `pos` past it.
/// Malformed sequences yield nullopt and advance by exactly one byte so the
/// caller can copy the raw byte through untouched.
inline std::optional<char32_t> next(std::string_view s, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    ++pos;
    return std::nullopt;
  }
  if (pos + len > s.size()) {
    ++pos;
    return std::nullopt;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto cont = static_cast<unsigned char>(s[pos + k]);
    if ((cont & 0xC0) != 0x80) {
      ++pos;
      return std::nullopt;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  // Overlong forms and surrogates are treated as malformed.
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return std::nullopt;
  }
  pos += len;
  return cp;
}

inline void append(std::string& out, char32_t cp) {
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

/// Code points of `s`; malformed bytes become U+FFFD.
inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) out.push_back(next(s, pos).value_or(char32_t{0xFFFD}));
  return out;
}

}  // namespace utf8

inline bool is_space(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x060C: case 0x060D: case 0x061B: case 0x061E: case 0x061F: case 0x06D4:
    case 0xFD3E: case 0xFD3F:
      return true;
    default:
      return (cp >= 0x066A && cp <= 0x066D) || (cp >= 0x2010 && cp <= 0x2027) ||
             (cp >= 0x2030 && cp <= 0x205E) || (cp >= 0x3001 && cp <= 0x3003);
  }
}

/// Tashkeel, superscript alef and Quranic annotation marks.
inline bool is_arabic_diacritic(char32_t cp) {
  return (cp >= 0x0610 && cp <= 0x061A) || (cp >= 0x064B && cp <= 0x065F) || cp == 0x0670 ||
         (cp >= 0x06D6 && cp <= 0x06DC) || (cp >= 0x06DF && cp <= 0x06E4) || cp == 0x06E7 ||
         cp == 0x06E8 || (cp >= 0x06EA && cp <= 0x06ED);
}

inline constexpr char32_t kTatweel = 0x0640;
inline constexpr char32_t kAlef = 0x0627;

/// Strips diacritics and tatweel, folds hamzated/madda alef (أ إ آ) to bare
/// alef, collapses whitespace runs to one ASCII space and trims. Ta marbuta
/// and ya are left alone. Idempotent.
inline std::string normalize_arabic(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const auto cp = utf8::next(text, pos);
    if (!cp) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.append(text.substr(start, pos - start));
      continue;
    }
    if (is_space(*cp)) {
      pending_space = true;
      continue;
    }
    if (is_arabic_diacritic(*cp) || *cp == kTatweel) continue;
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    if (*cp == 0x0623 || *cp == 0x0625 || *cp == 0x0622) {
      utf8::append(out, kAlef);
    } else {
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

/// One surface token: the byte range of its core (punctuation stripped) in
/// the source text.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
};

/// Splits on whitespace, strips leading and trailing punctuation from each
/// piece and drops pieces that become empty. No clitic segmentation.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    bool in_piece = false;
    bool have_core = false;
    std::size_t core_begin = 0, core_end = 0;
    while (pos < text.size()) {
      const std::size_t at = pos;
      const auto cp = utf8::next(text, pos);
      if (cp && is_space(*cp)) {
        if (in_piece) break;
        continue;
      }
      in_piece = true;
      if (!cp || !is_punctuation(*cp)) {
        if (!have_core) core_begin = at;
        have_core = true;
        core_end = pos;
      }
    }
    if (have_core) {
      tokens.push_back(Token{core_begin, core_end,
                             std::string(text.substr(core_begin, core_end - core_begin))});
    }
  }
  return tokens;
}

/// Token texts only.
inline std::vector<std::string> token_strings(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\n' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' || s[e - 1] == '\r'))
    --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace dforge
