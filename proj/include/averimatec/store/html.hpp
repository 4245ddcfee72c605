#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "averimatec/core/text.hpp"

namespace averimatec::store::html {

namespace detail {

inline bool ieq(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

template <std::size_t N>
bool one_of(std::string_view tag, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), tag) != set.end();
}

inline constexpr std::array<std::string_view, 14> kVoid = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source", "track", "wbr"};

// Content never shown as text.
inline constexpr std::array<std::string_view, 9> kRaw = {
    "script", "style", "noscript", "template", "svg", "head", "iframe", "object", "canvas"};

// Page chrome rather than content.
inline constexpr std::array<std::string_view, 7> kChrome = {
    "nav", "header", "footer", "aside", "form", "button", "select"};

inline constexpr std::array<std::string_view, 24> kBlock = {
    "p",  "div", "h1", "h2",      "h3",      "h4",    "h5",         "h6",
    "li", "ul",  "ol", "br",      "tr",      "table", "section",    "article",
    "main", "blockquote", "pre", "figcaption", "dd", "dt", "hr", "td"};

// class/id fragments that mark boilerplate containers.
inline constexpr std::array<std::string_view, 12> kChromeMarkers = {
    "cookie", "consent", "navbar", "nav-", "menu", "footer", "sidebar", "banner",
    "newsletter", "share", "breadcrumb", "advert"};

inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    auto name = s.substr(i + 1, semi - i - 1);
    char32_t cp = 0;
    if (!name.empty() && name[0] == '#') {
      std::uint32_t v = 0;
      bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
      bool ok = name.size() > (hex ? 2u : 1u);
      for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
        char c = name[k];
        int d = (c >= '0' && c <= '9') ? c - '0'
                : (hex && c >= 'a' && c <= 'f') ? c - 'a' + 10
                : (hex && c >= 'A' && c <= 'F') ? c - 'A' + 10
                                                : -1;
        if (d < 0 || v > 0x10FFFF) ok = false;
        else v = v * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
      }
      if (ok && v > 0 && v <= 0x10FFFF) cp = v;
    } else {
      static constexpr std::pair<std::string_view, char32_t> kNamed[] = {
          {"amp", '&'},      {"lt", '<'},        {"gt", '>'},        {"quot", '"'},
          {"apos", '\''},    {"nbsp", 0xA0},     {"mdash", 0x2014},  {"ndash", 0x2013},
          {"hellip", 0x2026}, {"rsquo", 0x2019}, {"lsquo", 0x2018},  {"ldquo", 0x201C},
          {"rdquo", 0x201D}, {"copy", 0xA9},     {"eacute", 0xE9},   {"euro", 0x20AC}};
      for (auto [n, c] : kNamed) {
        if (name == n) cp = c;
      }
    }
    if (cp == 0) {
      out.push_back('&');
      continue;
    }
    text::append_utf8(out, cp == 0xA0 ? U' ' : cp);
    i = semi;
  }
  return out;
}

struct Tag {
  std::string name;  // lowercase
  bool closing = false;
  bool self_closing = false;
  std::string attributes;  // raw, lowercase
};

/// Parses the tag starting at s[pos] == '<'. Returns the position after '>'.
inline std::size_t parse_tag(std::string_view s, std::size_t pos, Tag& tag) {
  auto end = s.find('>', pos);
  if (end == std::string_view::npos) end = s.size();
  auto inner = s.substr(pos + 1, end - pos - 1);
  tag = {};
  std::size_t i = 0;
  if (i < inner.size() && inner[i] == '/') {
    tag.closing = true;
    ++i;
  }
  while (i < inner.size() && (std::isalnum(static_cast<unsigned char>(inner[i])) || inner[i] == '-')) {
    tag.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(inner[i]))));
    ++i;
  }
  if (!inner.empty() && inner.back() == '/') tag.self_closing = true;
  tag.attributes = text::ascii_lower(inner.substr(i));
  return std::min(end + 1, s.size());
}

inline bool has_chrome_marker(const std::string& attributes) {
  for (auto attr : {std::string_view("class="), std::string_view("id="), std::string_view("role=")}) {
    auto p = attributes.find(attr);
    if (p == std::string::npos) continue;
    auto value = std::string_view(attributes).substr(p + attr.size());
    if (!value.empty() && (value[0] == '"' || value[0] == '\'')) {
      auto close = value.find(value[0], 1);
      value = value.substr(1, close == std::string_view::npos ? value.npos : close - 1);
    } else {
      value = value.substr(0, value.find_first_of(" \t\n/"));
    }
    if (attr == "role=" && value.find("navigation") != std::string_view::npos) return true;
    for (auto m : kChromeMarkers) {
      if (value.find(m) != std::string_view::npos) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Main text of an HTML page: scripts, styles, and page chrome (navigation, headers,
/// footers, cookie notices, sidebars) are dropped. If the page has <article> or <main>
/// content only that is kept. Paragraphs are separated by newlines.
inline std::string extract_main_text(std::string_view html) {
  using namespace detail;
  struct Open {
    std::string name;
    bool skip;
    bool content;
  };
  std::vector<Open> stack;
  struct Block {
    std::string text;
    bool in_content;
  };
  std::vector<Block> blocks(1, Block{"", false});
  auto skipping = [&] { return !stack.empty() && stack.back().skip; };
  auto in_content = [&] { return !stack.empty() && stack.back().content; };
  auto new_block = [&] {
    if (!blocks.back().text.empty()) blocks.push_back({"", in_content()});
    else blocks.back().in_content = in_content();
  };

  std::size_t pos = 0;
  while (pos < html.size()) {
    if (html[pos] != '<') {
      auto next = html.find('<', pos);
      if (next == std::string_view::npos) next = html.size();
      if (!skipping()) {
        blocks.back().text += decode_entities(html.substr(pos, next - pos));
        blocks.back().in_content = in_content();
      }
      pos = next;
      continue;
    }
    if (html.substr(pos, 4) == "<!--") {
      auto end = html.find("-->", pos + 4);
      pos = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    if (pos + 1 < html.size() && (html[pos + 1] == '!' || html[pos + 1] == '?')) {
      auto end = html.find('>', pos);
      pos = end == std::string_view::npos ? html.size() : end + 1;
      continue;
    }
    if (pos + 1 >= html.size() || !(std::isalpha(static_cast<unsigned char>(html[pos + 1])) || html[pos + 1] == '/')) {
      if (!skipping()) blocks.back().text.push_back('<');
      ++pos;
      continue;
    }
    Tag tag;
    pos = parse_tag(html, pos, tag);
    if (tag.name.empty()) continue;

    if (one_of(tag.name, kRaw) && !tag.closing && !tag.self_closing) {
      // Raw text elements: jump to the matching close tag.
      std::string close = "</" + tag.name;
      std::size_t p = pos;
      while (true) {
        p = html.find("</", p);
        if (p == std::string_view::npos) break;
        if (ieq(html.substr(p, close.size()), close)) break;
        p += 2;
      }
      if (p == std::string_view::npos) {
        pos = html.size();
      } else {
        auto end = html.find('>', p);
        pos = end == std::string_view::npos ? html.size() : end + 1;
      }
      continue;
    }

    if (one_of(tag.name, kBlock)) new_block();
    if (tag.closing) {
      auto it = std::find_if(stack.rbegin(), stack.rend(), [&](const Open& o) { return o.name == tag.name; });
      if (it != stack.rend()) stack.erase(std::prev(it.base()), stack.end());
      if (one_of(tag.name, kBlock)) new_block();
      continue;
    }
    if (one_of(tag.name, kVoid) || tag.self_closing) continue;
    const bool parent_skip = skipping();
    const bool parent_content = in_content();
    Open open{tag.name, parent_skip || one_of(tag.name, kChrome) || has_chrome_marker(tag.attributes),
              parent_content || tag.name == "article" || tag.name == "main" ||
                  tag.attributes.find("role=\"main\"") != std::string::npos};
    stack.push_back(std::move(open));
  }

  bool any_content = std::any_of(blocks.begin(), blocks.end(), [](const Block& b) {
    return b.in_content && !text::collapse_whitespace(b.text).empty();
  });
  std::string out;
  for (const auto& b : blocks) {
    if (any_content && !b.in_content) continue;
    auto line = text::collapse_whitespace(b.text);
    if (line.empty()) continue;
    if (!out.empty()) out.push_back('\n');
    out += line;
  }
  return out;
}

/// Heuristic for pages that only render behind authentication.
inline bool looks_like_login_wall(std::string_view html) {
  auto lower = text::ascii_lower(html);
  return lower.find("type=\"password\"") != std::string::npos ||
         lower.find("type='password'") != std::string::npos;
}

}  // namespace averimatec::store::html
