#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fcm {

inline constexpr std::uint32_t kReplacementChar = 0xFFFD;

struct DecodedChar {
  std::uint32_t cp;
  int length;  // bytes consumed, always >= 1
};

// Decodes the UTF-8 sequence starting at s[i]. Invalid or truncated sequences
// decode to U+FFFD and consume one byte, so malformed input degrades to
// separators instead of derailing the scan.
inline DecodedChar decode_utf8_at(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  int len;
  std::uint32_t cp;
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
    return {kReplacementChar, 1};
  }
  if (i + static_cast<std::size_t>(len) > s.size()) return {kReplacementChar, 1};
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((b & 0xC0) != 0x80) return {kReplacementChar, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong encodings and values outside the Unicode range.
  static constexpr std::uint32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
    return {kReplacementChar, 1};
  return {cp, len};
}

inline std::vector<std::uint32_t> decode_utf8(std::string_view s) {
  std::vector<std::uint32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto d = decode_utf8_at(s, i);
    out.push_back(d.cp);
    i += static_cast<std::size_t>(d.length);
  }
  return out;
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
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

// Case folding covers ASCII and the Latin-1 supplement; other scripts pass
// through unchanged.
inline std::uint32_t to_lower_cp(std::uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

// Token characters: ASCII alphanumerics, Latin-1 letters, and any code point
// above U+00FF that is not in a common punctuation block. This keeps accented
// and non-Latin words intact without pulling in a full Unicode table.
inline bool is_word_char(std::uint32_t cp) {
  if (cp < 0x80)
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z');
  if (cp < 0xC0) return false;  // Latin-1 punctuation and signs
  if (cp <= 0xFF) return cp != 0xD7 && cp != 0xF7;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;  // compatibility forms
  if (cp >= 0xFF01 && cp <= 0xFF0F) return false;  // fullwidth punctuation
  if (cp == kReplacementChar) return false;
  return true;
}

}  // namespace fcm
