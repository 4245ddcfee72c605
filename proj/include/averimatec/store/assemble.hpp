#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "averimatec/core/text.hpp"
#include "averimatec/store/collect.hpp"
#include "averimatec/store/types.hpp"

namespace averimatec::store {

struct AssemblyPolicy {
  Blocklist blocklist = Blocklist::defaults();
  bool temporal_filter = true;
  /// Drop entries flagged as undated.
  bool strict_dates = false;
  /// Text for gold URLs that were not collected by any query.
  std::map<std::string, std::string> gold_texts;
};

struct Assembly {
  ClaimStore store;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Uniform integer in [0, n) by rejection, independent of the standard library's distributions.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace detail

/// Orders `items` by a Fisher-Yates shuffle seeded from `seed` and `salt`.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed, std::string_view salt = {}) {
  std::mt19937_64 rng(seed ^ detail::fnv1a(salt));
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[detail::uniform_below(rng, i)]);
  }
}

/// Builds the evidence pool of one claim: entries of other claims, blocklisted URLs and
/// entries dated on or after the claim date are dropped; gold URLs missing from the crawl
/// are added; duplicates (normalized URL) keep their first occurrence. The result is
/// sorted and then shuffled with `seed`, so assembling the same input twice, or assembling
/// an assembled store again, yields the same order.
inline Assembly assemble_store(const std::string& claim_id, const Date& claim_date,
                               const std::vector<KnowledgeStoreEntry>& entries,
                               const std::vector<std::string>& gold_urls, std::uint64_t seed,
                               const AssemblyPolicy& policy = {}) {
  Assembly out;
  out.store.claim_id = claim_id;
  out.store.claim_date = claim_date;
  std::set<std::string> gold;
  for (const auto& u : gold_urls) gold.insert(text::normalize_url(u));

  std::set<std::string> seen;
  auto& kept = out.store.entries;
  for (const auto& e : entries) {
    if (e.url.empty()) {
      out.warnings.push_back("entry without url dropped");
      continue;
    }
    if (!e.claim_id.empty() && e.claim_id != claim_id) continue;
    const auto key = text::normalize_url(e.url);
    const bool is_gold = gold.count(key) > 0;
    if (!is_gold) {
      if (policy.blocklist.blocks(e.url)) continue;
      if (policy.temporal_filter && e.publication_date && !(*e.publication_date < claim_date)) continue;
      if (policy.strict_dates && e.undated_flag) continue;
    }
    if (!seen.insert(key).second) continue;
    auto copy = e;
    copy.claim_id = claim_id;
    copy.gold = copy.gold || is_gold;
    kept.push_back(std::move(copy));
  }
  for (const auto& u : gold_urls) {
    const auto key = text::normalize_url(u);
    if (policy.blocklist.blocks(u)) out.warnings.push_back("gold url on blocklist kept: " + u);
    if (!seen.insert(key).second) continue;
    KnowledgeStoreEntry e;
    e.url = u;
    e.claim_id = claim_id;
    e.gold = true;
    if (auto it = policy.gold_texts.find(u); it != policy.gold_texts.end()) e.text = it->second;
    kept.push_back(std::move(e));
  }

  std::sort(kept.begin(), kept.end(), [](const KnowledgeStoreEntry& a, const KnowledgeStoreEntry& b) {
    return std::tie(a.url, a.channel) < std::tie(b.url, b.channel);
  });
  seeded_shuffle(kept, seed, claim_id);
  return out;
}

/// Counts over a set of stores. Word counts are whitespace tokens of the scraped text.
inline StoreStats compute_stats(const std::vector<ClaimStore>& stores) {
  StoreStats s;
  for (const auto& store : stores) {
    for (const auto& e : store.entries) {
      ChannelStats* c = nullptr;
      switch (e.channel) {
        case Channel::GoogleSearchText: c = &s.search_text; break;
        case Channel::ReverseImageSearch: c = &s.reverse_image; break;
        case Channel::GoogleSearchImage:
          if (e.media) ++s.image_count;
          continue;
      }
      ++c->url_count_total;
      if (!text::trim(e.text).empty()) {
        ++c->url_count_scraped;
        c->word_count += text::count_tokens(e.text);
      }
    }
  }
  return s;
}

inline StoreStats compute_stats(const ClaimStore& store) { return compute_stats(std::vector<ClaimStore>{store}); }

}  // namespace averimatec::store
