#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "averimatec/core/errors.hpp"

namespace averimatec::text {

// ---------------------------------------------------------------------------
// UTF-8
// ---------------------------------------------------------------------------

struct CodePoint {
  char32_t value;
  std::size_t length;  // bytes consumed, always >= 1
};

/// Decodes one code point at `pos`. Malformed sequences yield U+FFFD and consume one byte.
inline CodePoint decode_utf8(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};
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
    return {0xFFFD, 1};
  }
  if (pos + len > s.size()) return {0xFFFD, 1};
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

inline void append_utf8(std::string& out, char32_t cp) {
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

/// Unicode White_Space property.
constexpr bool is_unicode_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

constexpr bool is_ascii_space(char32_t c) { return (c >= 0x09 && c <= 0x0D) || c == 0x20; }

/// Letters and digits. Outside ASCII, everything that is not whitespace, a control
/// character, or in a common punctuation/symbol block counts as alphanumeric.
constexpr bool is_word_char(char32_t c) {
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }
  if (is_unicode_space(c) || c < 0xA0) return false;
  if (c <= 0xBF || c == 0xD7 || c == 0xF7) return false;     // Latin-1 punctuation/symbols
  if (c >= 0x2000 && c <= 0x2BFF) return false;              // punctuation, arrows, symbols
  if (c >= 0x3000 && c <= 0x303F) return false;              // CJK punctuation
  if (c >= 0xFE30 && c <= 0xFE4F) return false;              // CJK compatibility forms
  if (c >= 0xFF00 && c <= 0xFF0F) return false;              // fullwidth punctuation
  if (c == 0xFFFD) return false;
  if (c >= 0x1F000 && c <= 0x1FAFF) return false;            // emoji and pictographs
  return true;
}

/// ASCII, Latin-1, Greek and basic Cyrillic lowercase mapping.
constexpr char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

// ---------------------------------------------------------------------------
// Whitespace tokens (evidence length caps)
// ---------------------------------------------------------------------------

struct TokenSpan {
  std::size_t begin;
  std::size_t end;  // exclusive byte offset
};

enum class WhitespaceRule { Unicode, Ascii };

/// Token boundaries for the evidence-length tokenizer: maximal runs of non-whitespace.
inline std::vector<TokenSpan> whitespace_spans(std::string_view s,
                                               WhitespaceRule rule = WhitespaceRule::Unicode) {
  std::vector<TokenSpan> spans;
  std::size_t pos = 0;
  constexpr auto kNone = std::string_view::npos;
  std::size_t start = kNone;
  while (pos < s.size()) {
    auto cp = decode_utf8(s, pos);
    bool space = rule == WhitespaceRule::Unicode ? is_unicode_space(cp.value)
                                                 : is_ascii_space(cp.value);
    if (space) {
      if (start != kNone) spans.push_back({start, pos});
      start = kNone;
    } else if (start == kNone) {
      start = pos;
    }
    pos += cp.length;
  }
  if (start != kNone) spans.push_back({start, s.size()});
  return spans;
}

inline std::size_t count_tokens(std::string_view s,
                                WhitespaceRule rule = WhitespaceRule::Unicode) {
  return whitespace_spans(s, rule).size();
}

// ---------------------------------------------------------------------------
// Word tokens (retrieval)
// ---------------------------------------------------------------------------

/// Lowercased maximal runs of word characters; no stemming, no stopwords.
inline std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto cp = decode_utf8(s, pos);
    pos += cp.length;
    if (is_word_char(cp.value)) {
      append_utf8(current, to_lower(cp.value));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string trim(std::string_view s) {
  auto is_sp = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_sp(s[b])) ++b;
  while (e > b && is_sp(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c); });
  return out;
}

/// Collapses all whitespace runs to a single space and trims.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  for (auto span : whitespace_spans(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(s.substr(span.begin, span.end - span.begin));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Image placeholders: exactly \[IMG_[1-9][0-9]*\], case-sensitive
// ---------------------------------------------------------------------------

struct Placeholder {
  std::size_t pos;     // byte offset of '['
  std::size_t length;  // bytes including brackets
  std::size_t index;   // k in [IMG_k]; saturates on overflow
};

inline std::vector<Placeholder> find_placeholders(std::string_view s) {
  constexpr std::string_view kOpen = "[IMG_";
  std::vector<Placeholder> out;
  std::size_t pos = 0;
  while ((pos = s.find(kOpen, pos)) != std::string_view::npos) {
    std::size_t i = pos + kOpen.size();
    if (i < s.size() && s[i] >= '1' && s[i] <= '9') {
      std::size_t k = 0;
      bool overflow = false;
      while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
        if (k > (SIZE_MAX - 9) / 10) overflow = true;
        if (!overflow) k = k * 10 + static_cast<std::size_t>(s[i] - '0');
        ++i;
      }
      if (i < s.size() && s[i] == ']') {
        out.push_back({pos, i + 1 - pos, overflow ? SIZE_MAX : k});
        pos = i + 1;
        continue;
      }
    }
    pos += 1;
  }
  return out;
}

inline std::string placeholder(std::size_t k) { return "[IMG_" + std::to_string(k) + "]"; }

// ---------------------------------------------------------------------------
// Base64 and digests (OpenSSL)
// ---------------------------------------------------------------------------

inline std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

/// Strict RFC 4648 decoding (whitespace ignored). Returns nullopt on malformed input.
inline std::optional<std::string> base64_decode(std::string_view encoded) {
  std::string clean;
  clean.reserve(encoded.size());
  for (char c : encoded) {
    if (c == '\n' || c == '\r' || c == ' ' || c == '\t') continue;
    clean.push_back(c);
  }
  if (clean.size() % 4 != 0) return std::nullopt;
  if (clean.empty()) return std::string{};
  std::string out(clean.size() / 4 * 3, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(clean.data()),
                          static_cast<int>(clean.size()));
  if (n < 0) return std::nullopt;
  std::size_t pad = 0;
  if (clean.back() == '=') ++pad;
  if (clean.size() >= 2 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// URLs
// ---------------------------------------------------------------------------

/// Dedup key: drops the fragment and any trailing slashes.
inline std::string normalize_url(std::string_view url) {
  if (auto hash = url.find('#'); hash != std::string_view::npos) url = url.substr(0, hash);
  while (!url.empty() && url.back() == '/') url.remove_suffix(1);
  return std::string(url);
}

/// Lowercased host without port or userinfo; empty if the URL has no authority.
inline std::string url_host(std::string_view url) {
  auto scheme = url.find("://");
  if (scheme == std::string_view::npos) return {};
  auto rest = url.substr(scheme + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) rest = rest.substr(at + 1);
  if (auto colon = rest.rfind(':'); colon != std::string_view::npos) rest = rest.substr(0, colon);
  return ascii_lower(rest);
}

}  // namespace averimatec::text
