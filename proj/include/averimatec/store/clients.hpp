#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "averimatec/core/date.hpp"
#include "averimatec/core/errors.hpp"
#include "averimatec/core/io.hpp"
#include "averimatec/core/model.hpp"

namespace averimatec::store {

// ---------------------------------------------------------------------------
// External service interfaces. Every method throws AdapterError on failure.
// ---------------------------------------------------------------------------

struct SearchHit {
  std::string url;
  std::optional<Date> date;

  bool operator==(const SearchHit&) const = default;
};

/// Web search returning the first results page, restricted to pages before `before`.
class SearchClient {
 public:
  virtual ~SearchClient() = default;
  virtual std::vector<SearchHit> search(const std::string& query, const Date& before) = 0;
};

/// Web search restricted to direct image resources.
class ImageSearchClient {
 public:
  virtual ~ImageSearchClient() = default;
  virtual std::vector<SearchHit> search_images(const std::string& query, const Date& before) = 0;
};

/// Pages containing the same or visually similar images.
class ReverseImageSearchClient {
 public:
  virtual ~ReverseImageSearchClient() = default;
  virtual std::vector<std::string> find_pages(const Base64Image& image) = 0;
};

struct FetchResponse {
  int status = 0;
  std::string content_type;
  std::string body;
};

class FetchClient {
 public:
  virtual ~FetchClient() = default;
  virtual FetchResponse fetch(const std::string& url) = 0;
};

/// Publication date of a web page; nullopt when it cannot be determined.
class DateExtractor {
 public:
  virtual ~DateExtractor() = default;
  virtual std::optional<Date> publication_date(const std::string& url) = 0;
};

// ---------------------------------------------------------------------------
// Retry and rate limiting
// ---------------------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{2000};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

/// Runs `fn`, retrying AdapterError with exponential backoff. Rethrows the last error.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const AdapterError&) {
      if (attempt >= policy.max_attempts) throw;
      if (policy.sleep) policy.sleep(delay);
      delay = std::min(policy.max_backoff,
                       std::chrono::milliseconds(static_cast<long long>(delay.count() * policy.multiplier)));
    }
  }
}

/// Enforces a minimum interval between requests to the same host.
class HostRateLimiter {
 public:
  explicit HostRateLimiter(std::chrono::milliseconds min_interval = std::chrono::milliseconds{0})
      : interval_(min_interval) {}

  void acquire(const std::string& host) {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      auto now = std::chrono::steady_clock::now();
      auto& next = next_[host];
      slot = std::max(now, next);
      next = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mu_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_;
};

// ---------------------------------------------------------------------------
// Record/replay fixtures
//
// {
//   "search":       { "<query>": [ {"url": "...", "date": "YYYY-MM-DD"|null}, ... ] },
//   "image_search": { "<query>": [ ... same as search ... ] },
//   "ris":          { "<sha256 of image bytes>": [ "<page url>", ... ] },
//   "fetch":        { "<url>": {"status": 200, "content_type": "...",
//                               "body": "..." | "body_base64": "..."} },
//   "dates":        { "<url>": "YYYY-MM-DD" | null },
//   "fail":         [ "search:<query>", "ris:<digest>", "fetch:<url>", ... ],
//   "fail_times":   { "search:<query>": 2, ... }
// }
//
// Unknown keys replay as empty results (fetch: HTTP 404). Keys listed under "fail"
// always throw AdapterError; keys under "fail_times" throw for their first n calls.
// ---------------------------------------------------------------------------

inline std::string image_digest(const Base64Image& image) {
  auto bytes = image.decode();
  return text::sha256_hex(bytes ? *bytes : image.data);
}

class FixtureServices final : public SearchClient,
                              public ImageSearchClient,
                              public ReverseImageSearchClient,
                              public FetchClient,
                              public DateExtractor {
 public:
  FixtureServices() : data_(json::object()) {}
  explicit FixtureServices(json data) : data_(std::move(data)) {}

  static FixtureServices load(const fs::path& path) { return FixtureServices(json::parse(read_file(path))); }

  const json& data() const { return data_; }

  std::vector<SearchHit> search(const std::string& query, const Date&) override {
    check_fail("search:" + query);
    return hits("search", query);
  }

  std::vector<SearchHit> search_images(const std::string& query, const Date&) override {
    check_fail("image_search:" + query);
    return hits("image_search", query);
  }

  std::vector<std::string> find_pages(const Base64Image& image) override {
    auto digest = image_digest(image);
    check_fail("ris:" + digest);
    ++calls_;
    auto section = data_.find("ris");
    if (section == data_.end() || !section->contains(digest)) return {};
    return section->at(digest).get<std::vector<std::string>>();
  }

  FetchResponse fetch(const std::string& url) override {
    check_fail("fetch:" + url);
    ++calls_;
    auto section = data_.find("fetch");
    if (section == data_.end() || !section->contains(url)) return {404, "text/plain", ""};
    const auto& r = section->at(url);
    FetchResponse out;
    out.status = r.value("status", 200);
    out.content_type = r.value("content_type", std::string("text/html"));
    if (r.contains("body_base64")) {
      auto decoded = text::base64_decode(r.at("body_base64").get<std::string>());
      if (!decoded) throw AdapterError("fixture body_base64 for " + url + " is not base64");
      out.body = std::move(*decoded);
    } else {
      out.body = r.value("body", std::string{});
    }
    return out;
  }

  std::optional<Date> publication_date(const std::string& url) override {
    check_fail("date:" + url);
    ++calls_;
    auto section = data_.find("dates");
    if (section == data_.end() || !section->contains(url) || section->at(url).is_null()) {
      return std::nullopt;
    }
    return Date::try_parse(section->at(url).get<std::string>());
  }

  /// Number of replayed calls, across all interfaces.
  std::size_t calls() const { return calls_; }

 private:
  void check_fail(const std::string& key) {
    if (auto fail = data_.find("fail"); fail != data_.end()) {
      for (const auto& k : *fail) {
        if (k.get<std::string>() == key) {
          ++calls_;
          throw AdapterError("injected failure for " + key);
        }
      }
    }
    if (auto times = data_.find("fail_times"); times != data_.end() && times->contains(key)) {
      std::lock_guard lock(mu_);
      if (failures_[key] < times->at(key).get<int>()) {
        ++failures_[key];
        ++calls_;
        throw AdapterError("injected transient failure for " + key);
      }
    }
  }

  std::vector<SearchHit> hits(const char* section_name, const std::string& query) {
    ++calls_;
    std::vector<SearchHit> out;
    auto section = data_.find(section_name);
    if (section == data_.end() || !section->contains(query)) return out;
    for (const auto& h : section->at(query)) {
      SearchHit hit{h.at("url").get<std::string>(), std::nullopt};
      if (auto d = h.find("date"); d != h.end() && d->is_string()) hit.date = Date::try_parse(d->get<std::string>());
      out.push_back(std::move(hit));
    }
    return out;
  }

  json data_;
  std::atomic<std::size_t> calls_{0};
  std::mutex mu_;
  std::map<std::string, int> failures_;
};

/// Wraps live clients and writes every response into fixture JSON for later replay.
class FixtureRecorder final : public SearchClient,
                              public ImageSearchClient,
                              public ReverseImageSearchClient,
                              public FetchClient,
                              public DateExtractor {
 public:
  FixtureRecorder(SearchClient* search, ImageSearchClient* images, ReverseImageSearchClient* ris,
                  FetchClient* fetcher, DateExtractor* dater)
      : search_(search), images_(images), ris_(ris), fetcher_(fetcher), dater_(dater) {}

  std::vector<SearchHit> search(const std::string& query, const Date& before) override {
    auto hits = require(search_, "search").search(query, before);
    record_hits("search", query, hits);
    return hits;
  }

  std::vector<SearchHit> search_images(const std::string& query, const Date& before) override {
    auto hits = require(images_, "image search").search_images(query, before);
    record_hits("image_search", query, hits);
    return hits;
  }

  std::vector<std::string> find_pages(const Base64Image& image) override {
    auto pages = require(ris_, "reverse image search").find_pages(image);
    std::lock_guard lock(mu_);
    data_["ris"][image_digest(image)] = pages;
    return pages;
  }

  FetchResponse fetch(const std::string& url) override {
    auto r = require(fetcher_, "fetch").fetch(url);
    std::lock_guard lock(mu_);
    data_["fetch"][url] = json{{"status", r.status},
                               {"content_type", r.content_type},
                               {"body_base64", text::base64_encode(r.body)}};
    return r;
  }

  std::optional<Date> publication_date(const std::string& url) override {
    auto d = require(dater_, "date extraction").publication_date(url);
    std::lock_guard lock(mu_);
    data_["dates"][url] = d ? json(d->str()) : json(nullptr);
    return d;
  }

  json fixture() const {
    std::lock_guard lock(mu_);
    return data_;
  }

 private:
  template <typename T>
  static T& require(T* client, const char* what) {
    if (!client) throw AdapterError(std::string("no ") + what + " client configured");
    return *client;
  }

  void record_hits(const char* section, const std::string& query, const std::vector<SearchHit>& hits) {
    json arr = json::array();
    for (const auto& h : hits) {
      arr.push_back({{"url", h.url}, {"date", h.date ? json(h.date->str()) : json(nullptr)}});
    }
    std::lock_guard lock(mu_);
    data_[section][query] = std::move(arr);
  }

  SearchClient* search_;
  ImageSearchClient* images_;
  ReverseImageSearchClient* ris_;
  FetchClient* fetcher_;
  DateExtractor* dater_;
  mutable std::mutex mu_;
  json data_ = json::object();
};

}  // namespace averimatec::store
