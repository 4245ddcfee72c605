#pragma once

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "averimatec/pipeline/adapter.hpp"
#include "averimatec/retrieval/dense.hpp"
#include "averimatec/scoring/judge.hpp"
#include "averimatec/store/clients.hpp"

namespace averimatec::net {

namespace detail {
inline std::atomic<std::size_t> g_requests{0};
}  // namespace detail

/// Outgoing HTTP requests made by this process so far.
inline std::size_t request_count() { return detail::g_requests.load(); }

struct Endpoint {
  /// Full URL, e.g. http://localhost:8001/v1/complete
  std::string url;
  /// Sent as a bearer token when non-empty.
  std::string api_key;
  std::chrono::seconds timeout{60};
};

/// Reads `<PREFIX>_URL` and `<PREFIX>_KEY`; nullopt when the URL is unset.
inline std::optional<Endpoint> endpoint_from_env(const std::string& prefix) {
  const char* url = std::getenv((prefix + "_URL").c_str());
  if (!url || !*url) return std::nullopt;
  const char* key = std::getenv((prefix + "_KEY").c_str());
  return Endpoint{url, key ? key : "", std::chrono::seconds{60}};
}

/// Splits "scheme://host[:port]/path?q" into origin and path (path defaults to "/").
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("not an absolute URL: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

inline httplib::Result send(const std::string& url, const std::function<httplib::Result(httplib::Client&,
                                                                                         const std::string&)>& fn,
                            std::chrono::seconds timeout) {
  auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_follow_location(true);
  ++detail::g_requests;
  return fn(client, path);
}

/// POSTs a JSON body and returns the parsed JSON response. Transport failures, non-2xx
/// statuses and unparsable bodies throw AdapterError.
inline json post_json(const Endpoint& ep, const json& body) {
  httplib::Headers headers;
  if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
  auto res = send(
      ep.url,
      [&](httplib::Client& c, const std::string& path) { return c.Post(path, headers, body.dump(), "application/json"); },
      ep.timeout);
  if (!res) throw AdapterError(ep.url + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw AdapterError(ep.url + ": HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw AdapterError(ep.url + ": malformed response: " + e.what());
  }
}

/// Request {task, prompt, images: [base64]} -> response {text}.
class HttpModelAdapter final : public pipeline::ModelAdapter {
 public:
  HttpModelAdapter(std::string name, Endpoint ep) : name_(std::move(name)), ep_(std::move(ep)) {}

  std::string name() const override { return name_; }

  std::string complete(const pipeline::ModelRequest& request) override {
    json body{{"task", request.task}, {"prompt", request.prompt}, {"images", request.images}};
    auto res = post_json(ep_, body);
    if (!res.contains("text") || !res["text"].is_string()) throw AdapterError(ep_.url + ": response has no text");
    return res["text"].get<std::string>();
  }

 private:
  std::string name_;
  Endpoint ep_;
};

/// Request {kind: text|image, payload} -> response {vector: [d reals]}.
class HttpEmbeddingProvider final : public retrieval::EmbeddingProvider {
 public:
  HttpEmbeddingProvider(Endpoint ep, std::size_t dimension) : ep_(std::move(ep)), dimension_(dimension) {}

  std::string name() const override { return "http-embedding"; }
  std::size_t dimension() const override { return dimension_; }
  retrieval::Vector embed_text(std::string_view text) override { return call("text", std::string(text)); }
  retrieval::Vector embed_image(const Base64Image& image) override { return call("image", image.data); }

 private:
  retrieval::Vector call(const char* kind, const std::string& payload) {
    auto res = post_json(ep_, {{"kind", kind}, {"payload", payload}});
    try {
      auto v = res.at("vector").get<retrieval::Vector>();
      if (v.size() != dimension_) {
        throw AdapterError("embedding has " + std::to_string(v.size()) + " dimensions, expected " +
                           std::to_string(dimension_));
      }
      return v;
    } catch (const json::exception& e) {
      throw AdapterError(ep_.url + ": malformed embedding: " + e.what());
    }
  }

  Endpoint ep_;
  std::size_t dimension_;
};

/// Coverage: {kind: "coverage", references, predictions} -> {results: [{covered, matched}]}.
/// Images: {kind: "image", a, b} -> {score: 0..10}.
class HttpJudge final : public scoring::JudgeAdapter {
 public:
  explicit HttpJudge(Endpoint ep) : ep_(std::move(ep)) {}

  std::string name() const override { return "http-judge:" + ep_.url; }

  std::vector<scoring::Coverage> coverage(const std::vector<std::string>& references,
                                          const std::vector<std::string>& predictions) override {
    auto res = post_json(ep_, {{"kind", "coverage"}, {"references", references}, {"predictions", predictions}});
    try {
      std::vector<scoring::Coverage> out;
      for (const auto& r : res.at("results")) {
        scoring::Coverage c;
        c.covered = r.at("covered").get<bool>();
        if (auto m = r.find("matched"); m != r.end() && !m->is_null()) c.matched = m->get<std::size_t>();
        out.push_back(c);
      }
      return out;
    } catch (const json::exception& e) {
      throw AdapterError(ep_.url + ": malformed coverage response: " + e.what());
    }
  }

  int image_similarity(const Base64Image& a, const Base64Image& b) override {
    auto res = post_json(ep_, {{"kind", "image"}, {"a", a.data}, {"b", b.data}});
    if (!res.contains("score") || !res["score"].is_number_integer()) {
      throw AdapterError(ep_.url + ": response has no integer score");
    }
    return res["score"].get<int>();
  }

 private:
  Endpoint ep_;
};

/// Search gateway speaking one JSON contract for every collection service:
///   {kind: "search"|"image_search", query, before} -> {results: [{url, date|null}]}
///   {kind: "ris", image} -> {pages: [url]}
///   {kind: "date", url} -> {date: "YYYY-MM-DD"|null}
/// Pages themselves are fetched directly.
class HttpServices final : public store::SearchClient,
                           public store::ImageSearchClient,
                           public store::ReverseImageSearchClient,
                           public store::FetchClient,
                           public store::DateExtractor {
 public:
  explicit HttpServices(Endpoint gateway) : ep_(std::move(gateway)) {}

  std::vector<store::SearchHit> search(const std::string& query, const Date& before) override {
    return hits("search", query, before);
  }
  std::vector<store::SearchHit> search_images(const std::string& query, const Date& before) override {
    return hits("image_search", query, before);
  }
  std::vector<std::string> find_pages(const Base64Image& image) override {
    auto res = post_json(ep_, {{"kind", "ris"}, {"image", image.data}});
    try {
      return res.at("pages").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw AdapterError(std::string("malformed reverse image search response: ") + e.what());
    }
  }
  std::optional<Date> publication_date(const std::string& url) override {
    auto res = post_json(ep_, {{"kind", "date"}, {"url", url}});
    auto d = res.find("date");
    if (d == res.end() || d->is_null()) return std::nullopt;
    try {
      return Date::parse(d->get<std::string>());
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  store::FetchResponse fetch(const std::string& url) override {
    auto res = send(
        url, [](httplib::Client& c, const std::string& path) { return c.Get(path); }, ep_.timeout);
    if (!res) throw AdapterError(url + ": " + httplib::to_string(res.error()));
    return {res->status, res->get_header_value("Content-Type"), res->body};
  }

 private:
  std::vector<store::SearchHit> hits(const char* kind, const std::string& query, const Date& before) {
    auto res = post_json(ep_, {{"kind", kind}, {"query", query}, {"before", before.str()}});
    try {
      std::vector<store::SearchHit> out;
      for (const auto& r : res.at("results")) {
        store::SearchHit h{r.at("url").get<std::string>(), std::nullopt};
        if (auto d = r.find("date"); d != r.end() && d->is_string()) h.date = Date::parse(d->get<std::string>());
        out.push_back(std::move(h));
      }
      return out;
    } catch (const std::exception& e) {
      throw AdapterError(std::string("malformed search response: ") + e.what());
    }
  }

  Endpoint ep_;
};

}  // namespace averimatec::net
