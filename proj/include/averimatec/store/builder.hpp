#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "averimatec/core/parallel.hpp"
#include "averimatec/store/assemble.hpp"
#include "averimatec/store/collect.hpp"
#include "averimatec/store/queries.hpp"

namespace averimatec::store {

/// The external services used during construction. All are required.
struct Services {
  SearchClient* search = nullptr;
  ImageSearchClient* image_search = nullptr;
  ReverseImageSearchClient* ris = nullptr;
  FetchClient* fetcher = nullptr;
  DateExtractor* dater = nullptr;

  static Services from(FixtureServices& f) { return {&f, &f, &f, &f, &f}; }
};

struct BuildOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 4;
  std::size_t image_cap = 100;
  std::chrono::milliseconds per_host_interval{0};
  SearchPolicy search;
  RisPolicy ris;
  QueryOptions queries;
};

struct BuildResult {
  ClaimStore store;
  std::vector<QuerySpec> queries;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

/// Fetch client that waits on a per-host rate limiter before each request.
class RateLimitedFetcher final : public FetchClient {
 public:
  RateLimitedFetcher(FetchClient& inner, HostRateLimiter& limiter) : inner_(inner), limiter_(limiter) {}
  FetchResponse fetch(const std::string& url) override {
    limiter_.acquire(text::url_host(url));
    return inner_.fetch(url);
  }

 private:
  FetchClient& inner_;
  HostRateLimiter& limiter_;
};

/// Runs the full construction procedure for one claim: query generation, text search,
/// reverse image search, scraping, image collection and assembly.
inline BuildResult build_store(const Claim& claim, pipeline::ModelAdapter& generator, const Services& services,
                               const BuildOptions& opts = {}) {
  if (!services.search || !services.image_search || !services.ris || !services.fetcher || !services.dater) {
    throw Error("store construction needs search, image search, reverse image search, fetch and date clients");
  }
  BuildResult out;
  std::mutex mu;
  auto fail = [&](std::string what, const std::string& reason) {
    std::lock_guard lock(mu);
    out.failures.push_back(std::move(what) + ": " + reason);
  };

  HostRateLimiter limiter(opts.per_host_interval);
  RateLimitedFetcher fetcher(*services.fetcher, limiter);

  auto generated = generate_queries(claim, claim.gold_qas, generator, opts.queries);
  out.queries = generated.queries;
  for (const auto& f : generated.failures) fail(std::string("queries:") + std::string(to_string(f.family)), f.message);

  // Text search, one query per task.
  std::vector<SearchResult> results(out.queries.size());
  parallel_for(out.queries.size(), opts.workers, [&](std::size_t i) {
    results[i] = search_text(out.queries[i], claim.claim_date, *services.search, opts.search);
  });

  std::vector<KnowledgeStoreEntry> candidates;
  std::set<std::string> seen;
  for (const auto& r : results) {
    for (const auto& f : r.failures) fail(f.what, f.reason);
    for (std::size_t k = 0; k < r.urls.size(); ++k) {
      if (!seen.insert(text::normalize_url(r.urls[k])).second) continue;
      KnowledgeStoreEntry e;
      e.url = r.urls[k];
      e.channel = Channel::GoogleSearchText;
      e.publication_date = r.dates[k];
      e.claim_id = claim.id;
      candidates.push_back(std::move(e));
    }
  }

  // Reverse image search over the claim images.
  std::vector<RisResult> ris(claim.images.size());
  parallel_for(claim.images.size(), opts.workers, [&](std::size_t i) {
    ris[i] = reverse_image_search(claim.images[i], claim.claim_date, *services.ris, *services.dater, opts.ris);
  });
  for (const auto& r : ris) {
    for (const auto& f : r.failures) fail(f.what, f.reason);
    for (const auto& p : r.pages) {
      if (opts.search.blocklist.blocks(p.url)) continue;
      if (!seen.insert(text::normalize_url(p.url)).second) continue;
      KnowledgeStoreEntry e;
      e.url = p.url;
      e.channel = Channel::ReverseImageSearch;
      e.publication_date = p.date;
      e.undated_flag = p.undated;
      e.claim_id = claim.id;
      candidates.push_back(std::move(e));
    }
  }

  // Gold URLs that no query surfaced are scraped too.
  std::vector<std::string> gold_urls;
  for (const auto& qa : claim.gold_qas) {
    if (!qa.answer.url.empty()) gold_urls.push_back(qa.answer.url);
  }
  std::vector<std::string> extra;
  for (const auto& u : gold_urls) {
    if (seen.insert(text::normalize_url(u)).second) extra.push_back(u);
  }

  for (const auto& u : extra) {
    KnowledgeStoreEntry e;
    e.url = u;
    e.claim_id = claim.id;
    e.gold = true;
    candidates.push_back(std::move(e));
  }
  parallel_for(candidates.size(), opts.workers, [&](std::size_t i) {
    auto r = scrape(candidates[i].url, fetcher);
    if (!r.ok()) fail("scrape:" + candidates[i].url, r.failure);
    candidates[i].text = std::move(r.text);
  });

  auto images = collect_images(out.queries, *services.image_search, fetcher, opts.image_cap, claim.claim_date,
                               opts.search);
  for (const auto& f : images.failures) fail(f.what, f.reason);
  for (auto& e : images.entries) candidates.push_back(std::move(e));

  AssemblyPolicy policy;
  policy.blocklist = opts.search.blocklist;
  policy.strict_dates = opts.ris.strict;
  auto assembled = assemble_store(claim.id, claim.claim_date, candidates, gold_urls, opts.seed, policy);
  out.store = std::move(assembled.store);
  out.warnings = std::move(assembled.warnings);
  std::sort(out.failures.begin(), out.failures.end());
  return out;
}

}  // namespace averimatec::store
