#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "averimatec/core/date.hpp"
#include "averimatec/core/text.hpp"
#include "averimatec/store/clients.hpp"
#include "averimatec/store/html.hpp"
#include "averimatec/store/pdf.hpp"
#include "averimatec/store/types.hpp"

namespace averimatec::store {

/// Hosts (and optional path prefixes) of fact-checking publishers. Subdomains match.
class Blocklist {
 public:
  Blocklist() = default;
  explicit Blocklist(std::vector<std::string> entries) {
    for (auto& e : entries) add(std::move(e));
  }

  /// Shipped default: major fact-checking outlets.
  static Blocklist defaults() {
    return Blocklist({"snopes.com", "politifact.com", "factcheck.org", "fullfact.org", "africacheck.org",
                      "factly.in", "boomlive.in", "altnews.in", "leadstories.com", "checkyourfact.com",
                      "healthfeedback.org", "climatefeedback.org", "sciencefeedback.co", "misbar.com",
                      "newschecker.in", "vishvasnews.com", "newsmobile.in", "thequint.com/news/webqoof",
                      "factcheck.afp.com", "reuters.com/fact-check", "apnews.com/hub/ap-fact-check",
                      "usatoday.com/story/news/factcheck", "aap.com.au/factcheck", "verafiles.org",
                      "rappler.com/newsbreak/fact-check", "maldita.es", "newtral.es", "correctiv.org",
                      "dpa-factchecking.com", "logicallyfacts.com", "truthorfiction.com",
                      "washingtonpost.com/politics/fact-checker"});
  }

  /// Loads one entry per line; blank lines and '#' comments are ignored.
  static Blocklist parse(std::string_view contents) {
    Blocklist b;
    std::size_t start = 0;
    while (start <= contents.size()) {
      auto end = std::min(contents.find('\n', start), contents.size());
      auto line = text::trim(contents.substr(start, end - start));
      if (!line.empty() && line[0] != '#') b.add(line);
      start = end + 1;
    }
    return b;
  }

  void add(std::string entry) {
    entry = text::ascii_lower(text::trim(entry));
    if (entry.rfind("http://", 0) == 0) entry = entry.substr(7);
    if (entry.rfind("https://", 0) == 0) entry = entry.substr(8);
    if (entry.rfind("www.", 0) == 0) entry = entry.substr(4);
    auto slash = entry.find('/');
    Rule r{entry.substr(0, slash), slash == std::string::npos ? "" : entry.substr(slash)};
    while (!r.path.empty() && r.path.back() == '/') r.path.pop_back();
    rules_.push_back(std::move(r));
  }

  bool blocks(std::string_view url) const {
    auto host = text::url_host(url);
    if (host.rfind("www.", 0) == 0) host = host.substr(4);
    std::string path;
    if (auto scheme = url.find("://"); scheme != std::string_view::npos) {
      auto rest = url.substr(scheme + 3);
      if (auto slash = rest.find('/'); slash != std::string_view::npos) path = text::ascii_lower(rest.substr(slash));
    }
    for (const auto& r : rules_) {
      bool host_match = host == r.host ||
                        (host.size() > r.host.size() && host.ends_with(r.host) &&
                         host[host.size() - r.host.size() - 1] == '.');
      if (!host_match) continue;
      if (r.path.empty() || path == r.path || path.rfind(r.path + "/", 0) == 0) return true;
    }
    return false;
  }

  bool empty() const { return rules_.empty(); }

 private:
  struct Rule {
    std::string host;
    std::string path;
  };
  std::vector<Rule> rules_;
};

struct SearchPolicy {
  Blocklist blocklist = Blocklist::defaults();
  RetryPolicy retry;
  std::size_t page_size = 10;
};

struct CollectFailure {
  std::string what;
  std::string reason;
};

struct SearchResult {
  std::vector<std::string> urls;
  std::vector<std::optional<Date>> dates;  // parallel to urls
  std::vector<CollectFailure> failures;
};

/// First-page text search for one query: results dated on/after `before` and
/// blocklisted URLs are dropped. Client errors are retried, then recorded.
inline SearchResult search_text(const QuerySpec& q, const Date& before, SearchClient& client,
                                const SearchPolicy& policy = {}) {
  SearchResult out;
  std::vector<SearchHit> hits;
  try {
    hits = with_retry(policy.retry, [&] { return client.search(q.query_text, before); });
  } catch (const AdapterError& e) {
    out.failures.push_back({"search:" + q.query_text, e.what()});
    return out;
  }
  if (hits.size() > policy.page_size) hits.resize(policy.page_size);
  for (auto& h : hits) {
    if (h.date && !(*h.date < before)) continue;
    if (policy.blocklist.blocks(h.url)) continue;
    out.urls.push_back(std::move(h.url));
    out.dates.push_back(h.date);
  }
  return out;
}

struct RisPolicy {
  /// Drop pages whose publication date cannot be extracted instead of flagging them.
  bool strict = false;
  RetryPolicy retry;
};

struct RisPage {
  std::string url;
  std::optional<Date> date;
  bool undated = false;
};

struct RisResult {
  std::vector<RisPage> pages;
  std::vector<CollectFailure> failures;

  std::vector<std::string> urls() const {
    std::vector<std::string> out;
    for (const auto& p : pages) out.push_back(p.url);
    return out;
  }
};

/// Reverse image search for one claim image. Only pages published before the claim
/// date are kept; undatable pages are kept and flagged (dropped in strict mode).
inline RisResult reverse_image_search(const Base64Image& image, const Date& claim_date,
                                      ReverseImageSearchClient& ris, DateExtractor& dater,
                                      const RisPolicy& policy = {}) {
  RisResult out;
  std::vector<std::string> pages;
  try {
    pages = with_retry(policy.retry, [&] { return ris.find_pages(image); });
  } catch (const AdapterError& e) {
    out.failures.push_back({"ris:" + image_digest(image), e.what()});
    return out;
  }
  for (auto& url : pages) {
    std::optional<Date> date;
    try {
      date = dater.publication_date(url);
    } catch (const AdapterError& e) {
      out.failures.push_back({"date:" + url, e.what()});
    }
    if (date) {
      if (*date < claim_date) out.pages.push_back({std::move(url), date, false});
    } else if (!policy.strict) {
      out.pages.push_back({std::move(url), std::nullopt, true});
    }
  }
  return out;
}

struct ScrapeResult {
  std::string text;
  std::string failure;  // empty on success

  bool ok() const { return failure.empty(); }
};

/// Main text of a URL. HTML and PDF are dispatched on content type (or PDF magic);
/// plain text is returned as-is. Failures yield empty text with a reason.
inline ScrapeResult scrape(const std::string& url, FetchClient& fetcher) {
  FetchResponse r;
  try {
    r = fetcher.fetch(url);
  } catch (const AdapterError& e) {
    return {"", std::string("fetch failed: ") + e.what()};
  }
  if (r.status == 401 || r.status == 403 || r.status == 451) {
    return {"", "access denied (HTTP " + std::to_string(r.status) + ")"};
  }
  if (r.status < 200 || r.status >= 300) return {"", "HTTP " + std::to_string(r.status)};
  if (pdf::is_pdf(r.content_type, r.body)) {
    auto body = pdf::extract_text(r.body);
    if (body.empty()) return {"", "no extractable text in PDF"};
    return {std::move(body), ""};
  }
  if (r.content_type.find("text/plain") != std::string::npos) return {text::trim(r.body), ""};
  auto body = html::extract_main_text(r.body);
  if (body.empty()) {
    return {"", html::looks_like_login_wall(r.body) ? "login wall" : "no main text"};
  }
  return {std::move(body), ""};
}

struct ImageCollection {
  std::vector<KnowledgeStoreEntry> entries;
  std::vector<CollectFailure> failures;
};

/// Image evidence: for every query, the top `cap` image URLs dated before `before` are
/// downloaded. A URL already collected for an earlier query is stored once.
inline ImageCollection collect_images(const std::vector<QuerySpec>& queries, ImageSearchClient& client,
                                      FetchClient& fetcher, std::size_t cap, const Date& before,
                                      const SearchPolicy& policy = {}) {
  ImageCollection out;
  std::set<std::string> seen;
  if (cap == 0) return out;
  for (const auto& q : queries) {
    std::vector<SearchHit> hits;
    try {
      hits = with_retry(policy.retry, [&] { return client.search_images(q.query_text, before); });
    } catch (const AdapterError& e) {
      out.failures.push_back({"image_search:" + q.query_text, e.what()});
      continue;
    }
    std::size_t taken = 0;
    for (const auto& h : hits) {
      if (taken == cap) break;
      if (h.date && !(*h.date < before)) continue;
      if (policy.blocklist.blocks(h.url)) continue;
      ++taken;
      if (!seen.insert(text::normalize_url(h.url)).second) continue;
      FetchResponse r;
      try {
        r = fetcher.fetch(h.url);
      } catch (const AdapterError& e) {
        out.failures.push_back({"image:" + h.url, e.what()});
        continue;
      }
      if (r.status != 200 || r.body.empty()) {
        out.failures.push_back({"image:" + h.url, "HTTP " + std::to_string(r.status)});
        continue;
      }
      KnowledgeStoreEntry e;
      e.url = h.url;
      e.channel = Channel::GoogleSearchImage;
      e.publication_date = h.date;
      e.claim_id = q.claim_id;
      e.media = Base64Image{text::base64_encode(r.body)};
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace averimatec::store
