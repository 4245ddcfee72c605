#pragma once

#include <zlib.h>

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "averimatec/core/text.hpp"

namespace averimatec::store::pdf {

namespace detail {

inline std::optional<std::string> inflate_bytes(std::string_view in) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) return std::nullopt;
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  char buf[16384];
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) break;
    out.append(buf, sizeof buf - zs.avail_out);
  }
  inflateEnd(&zs);
  if (rc != Z_STREAM_END && out.empty()) return std::nullopt;
  return out;
}

inline std::optional<std::string> ascii85_decode(std::string_view in) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    char c = in[i];
    if (c == '~') break;  // "~>" terminator
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') continue;  // whitespace
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((tuple >> s) & 0xFF));
      tuple = 0;
      count = 0;
    }
  }
  if (count == 1) return std::nullopt;
  if (count > 0) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) out.push_back(static_cast<char>((tuple >> (24 - 8 * k)) & 0xFF));
  }
  return out;
}

/// Applies the stream's filter chain. nullopt for filters that do not carry text.
inline std::optional<std::string> decode_stream(std::string_view dict, std::string_view data) {
  std::vector<std::string> filters;
  if (auto f = dict.find("/Filter"); f != std::string_view::npos) {
    auto rest = dict.substr(f + 7);
    while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
    auto read_name = [&](std::size_t p) {
      auto e = rest.find_first_of(" /]\n\r>[", p + 1);
      return std::string(rest.substr(p + 1, e == std::string_view::npos ? rest.npos : e - p - 1));
    };
    if (!rest.empty() && rest.front() == '[') {
      auto close = rest.find(']');
      for (std::size_t p = 0; (p = rest.find('/', p)) != std::string_view::npos && p < close; ++p) {
        filters.push_back(read_name(p));
      }
    } else if (!rest.empty() && rest.front() == '/') {
      filters.push_back(read_name(0));
    }
  }
  std::string current(data);
  for (const auto& name : filters) {
    std::optional<std::string> next;
    if (name == "FlateDecode" || name == "Fl") next = inflate_bytes(current);
    else if (name == "ASCII85Decode" || name == "A85") next = ascii85_decode(current);
    else return std::nullopt;
    if (!next) return std::nullopt;
    current = std::move(*next);
  }
  return current;
}

/// Single-byte font strings are read as Latin-1.
inline void append_latin1(std::string& out, std::string_view bytes) {
  for (unsigned char c : bytes) text::append_utf8(out, c);
}

inline std::string read_literal(std::string_view s, std::size_t& i) {
  std::string out;
  int depth = 1;
  ++i;  // '('
  while (i < s.size()) {
    char c = s[i++];
    if (c == '\\' && i < s.size()) {
      char e = s[i++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case '\r':
          if (i < s.size() && s[i] == '\n') ++i;
          break;
        case '\n': break;
        default:
          if (e >= '0' && e <= '7') {
            int v = e - '0';
            for (int k = 0; k < 2 && i < s.size() && s[i] >= '0' && s[i] <= '7'; ++k) v = v * 8 + (s[i++] - '0');
            out.push_back(static_cast<char>(v));
          } else {
            out.push_back(e);
          }
      }
    } else if (c == '(') {
      ++depth;
      out.push_back(c);
    } else if (c == ')') {
      if (--depth == 0) break;
      out.push_back(c);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline std::string read_hex(std::string_view s, std::size_t& i) {
  std::string out;
  ++i;  // '<'
  int hi = -1;
  while (i < s.size() && s[i] != '>') {
    char c = s[i++];
    int v = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : (c >= 'A' && c <= 'F') ? c - 'A' + 10 : -1;
    if (v < 0) continue;
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<char>(hi * 16 + v));
      hi = -1;
    }
  }
  if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
  ++i;
  return out;
}

/// Text-showing operators of one content stream.
inline std::string content_text(std::string_view s) {
  std::string out;
  std::vector<std::string> strings;  // operands collected since the last operator
  std::vector<double> numbers;
  bool in_array = false;
  std::vector<std::string> array_parts;
  auto newline = [&] {
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  };
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '%') {
      while (i < s.size() && s[i] != '\n' && s[i] != '\r') ++i;
    } else if (c == '(') {
      auto lit = read_literal(s, i);
      (in_array ? array_parts : strings).push_back(std::move(lit));
    } else if (c == '<' && i + 1 < s.size() && s[i + 1] != '<') {
      auto hex = read_hex(s, i);
      (in_array ? array_parts : strings).push_back(std::move(hex));
    } else if (c == '[') {
      in_array = true;
      array_parts.clear();
      ++i;
    } else if (c == ']') {
      in_array = false;
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '\'' || c == '"' || c == '*') {
      std::size_t b = i;
      while (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '*' || s[i] == '\'' || s[i] == '"')) ++i;
      auto op = s.substr(b, i - b);
      if (in_array) {
        continue;
      }
      if (op == "Tj") {
        for (auto& str : strings) append_latin1(out, str);
      } else if (op == "'" || op == "\"") {
        newline();
        for (auto& str : strings) append_latin1(out, str);
      } else if (op == "TJ") {
        for (auto& str : array_parts) append_latin1(out, str);
        array_parts.clear();
      } else if (op == "T*" || op == "ET") {
        newline();
      } else if ((op == "Td" || op == "TD") && numbers.size() >= 2 && numbers.back() != 0.0) {
        newline();
      }
      strings.clear();
      numbers.clear();
    } else if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t b = i;
      ++i;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      double v = std::strtod(std::string(s.substr(b, i - b)).c_str(), nullptr);
      if (in_array) {
        // Kerning adjustment; a large negative gap reads as a word space.
        if (v < -200.0) array_parts.emplace_back(" ");
      } else {
        numbers.push_back(v);
      }
    } else if (c == '/') {
      ++i;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '/' && s[i] != '[' && s[i] != '(' && s[i] != '<') ++i;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace detail

/// Text of a PDF document, read from the text operators of its content streams.
/// Supports uncompressed, Flate and ASCII85 streams with single-byte fonts; image and
/// font streams are skipped. Lines are separated by newlines.
inline std::string extract_text(std::string_view pdf) {
  std::string out;
  std::size_t pos = 0;
  while ((pos = pdf.find("stream", pos)) != std::string_view::npos) {
    if (pos >= 3 && pdf.substr(pos - 3, 3) == "end") {
      pos += 6;
      continue;
    }
    auto dict_start = pdf.rfind("<<", pos);
    auto obj_start = pdf.rfind(" obj", pos);
    std::string_view dict = dict_start == std::string_view::npos ? std::string_view{}
                                                                 : pdf.substr(dict_start, pos - dict_start);
    if (obj_start != std::string_view::npos && dict_start != std::string_view::npos && obj_start > dict_start) dict = {};
    std::size_t data_start = pos + 6;
    if (data_start < pdf.size() && pdf[data_start] == '\r') ++data_start;
    if (data_start < pdf.size() && pdf[data_start] == '\n') ++data_start;
    auto data_end = pdf.find("endstream", data_start);
    if (data_end == std::string_view::npos) break;
    pos = data_end + 9;
    if (dict.find("/Subtype") != std::string_view::npos || dict.find("/Length1") != std::string_view::npos ||
        dict.find("/Type /XObject") != std::string_view::npos || dict.find("/Type/XObject") != std::string_view::npos) {
      continue;  // images, forms, embedded fonts
    }
    auto decoded = detail::decode_stream(dict, pdf.substr(data_start, data_end - data_start));
    if (!decoded) continue;
    if (decoded->find("BT") == std::string::npos) continue;
    auto page = detail::content_text(*decoded);
    if (page.empty()) continue;
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
    out += page;
  }
  // Normalize: collapse whitespace within lines, drop empty lines.
  std::string result;
  std::size_t start = 0;
  while (start < out.size()) {
    auto end = out.find('\n', start);
    if (end == std::string::npos) end = out.size();
    auto line = text::collapse_whitespace(std::string_view(out).substr(start, end - start));
    if (!line.empty()) {
      if (!result.empty()) result.push_back('\n');
      result += line;
    }
    start = end + 1;
  }
  return result;
}

inline bool is_pdf(std::string_view content_type, std::string_view body) {
  return content_type.find("pdf") != std::string_view::npos || body.substr(0, 5) == "%PDF-";
}

}  // namespace averimatec::store::pdf
