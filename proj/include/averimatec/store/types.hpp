#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "averimatec/core/date.hpp"
#include "averimatec/core/model.hpp"

namespace averimatec::store {

/// Where an entry was collected from.
enum class Channel { GoogleSearchText, ReverseImageSearch, GoogleSearchImage };

inline std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::GoogleSearchText: return "google_search_text";
    case Channel::ReverseImageSearch: return "reverse_image_search";
    case Channel::GoogleSearchImage: return "google_search_image";
  }
  return "google_search_text";
}

inline Channel parse_channel(std::string_view s) {
  if (s == "google_search_text" || s == "GS") return Channel::GoogleSearchText;
  if (s == "reverse_image_search" || s == "RIS") return Channel::ReverseImageSearch;
  if (s == "google_search_image" || s == "IMG") return Channel::GoogleSearchImage;
  throw ParseError("unknown channel '" + std::string(s) + "'");
}

struct KnowledgeStoreEntry {
  std::string url;
  std::string text;
  Channel channel = Channel::GoogleSearchText;
  std::optional<Date> publication_date;
  std::string claim_id;
  std::optional<Base64Image> media;
  bool gold = false;
  /// Kept although its publication date could not be established.
  bool undated_flag = false;

  bool operator==(const KnowledgeStoreEntry&) const = default;
};

/// The assembled, immutable evidence pool of one claim.
struct ClaimStore {
  std::string claim_id;
  Date claim_date;
  std::vector<KnowledgeStoreEntry> entries;

  bool operator==(const ClaimStore&) const = default;
};

enum class QueryFamily {
  GeneratedQuestions,
  BackgroundQueries,
  ProvenanceQueries,
  ClaimNamedEntities,
  MostSimilarGoldEvidence,
  GoldUrlQuestions,
  DifferentEventSameEntity,
  SimilarEntities,
  GoldQuestions,
  ClaimPlusGoldQuestion,
  RephrasedGoldQuestions,
  GoldAnswers,
  RephrasedGoldAnswers,
};

inline constexpr QueryFamily kAllQueryFamilies[] = {
    QueryFamily::GeneratedQuestions,       QueryFamily::BackgroundQueries,
    QueryFamily::ProvenanceQueries,        QueryFamily::ClaimNamedEntities,
    QueryFamily::MostSimilarGoldEvidence,  QueryFamily::GoldUrlQuestions,
    QueryFamily::DifferentEventSameEntity, QueryFamily::SimilarEntities,
    QueryFamily::GoldQuestions,            QueryFamily::ClaimPlusGoldQuestion,
    QueryFamily::RephrasedGoldQuestions,   QueryFamily::GoldAnswers,
    QueryFamily::RephrasedGoldAnswers,
};

inline std::string_view to_string(QueryFamily f) {
  switch (f) {
    case QueryFamily::GeneratedQuestions: return "generated_questions";
    case QueryFamily::BackgroundQueries: return "background_queries";
    case QueryFamily::ProvenanceQueries: return "provenance_queries";
    case QueryFamily::ClaimNamedEntities: return "claim_named_entities";
    case QueryFamily::MostSimilarGoldEvidence: return "most_similar_gold_evidence";
    case QueryFamily::GoldUrlQuestions: return "gold_url_questions";
    case QueryFamily::DifferentEventSameEntity: return "different_event_same_entity";
    case QueryFamily::SimilarEntities: return "similar_entities";
    case QueryFamily::GoldQuestions: return "gold_questions";
    case QueryFamily::ClaimPlusGoldQuestion: return "claim_plus_gold_question";
    case QueryFamily::RephrasedGoldQuestions: return "rephrased_gold_questions";
    case QueryFamily::GoldAnswers: return "gold_answers";
    case QueryFamily::RephrasedGoldAnswers: return "rephrased_gold_answers";
  }
  return "generated_questions";
}

/// Distractor families: their results are meant to be plausible but irrelevant.
constexpr bool is_adversarial(QueryFamily f) {
  return f == QueryFamily::DifferentEventSameEntity || f == QueryFamily::SimilarEntities;
}

/// Families that need gold annotations.
constexpr bool needs_gold(QueryFamily f) {
  switch (f) {
    case QueryFamily::MostSimilarGoldEvidence:
    case QueryFamily::GoldUrlQuestions:
    case QueryFamily::GoldQuestions:
    case QueryFamily::ClaimPlusGoldQuestion:
    case QueryFamily::RephrasedGoldQuestions:
    case QueryFamily::GoldAnswers:
    case QueryFamily::RephrasedGoldAnswers:
      return true;
    default:
      return false;
  }
}

struct QuerySpec {
  std::string claim_id;
  std::string query_text;
  QueryFamily family = QueryFamily::GeneratedQuestions;
  bool adversarial = false;

  bool operator==(const QuerySpec&) const = default;
};

inline QuerySpec make_query(std::string claim_id, std::string text, QueryFamily family) {
  return {std::move(claim_id), std::move(text), family, is_adversarial(family)};
}

struct ChannelStats {
  std::size_t url_count_total = 0;
  std::size_t url_count_scraped = 0;
  std::size_t word_count = 0;

  bool operator==(const ChannelStats&) const = default;
};

/// Counts over one split's stores: text from Google Search, text from reverse image
/// search, and downloaded images.
struct StoreStats {
  ChannelStats search_text;
  ChannelStats reverse_image;
  std::size_t image_count = 0;

  bool operator==(const StoreStats&) const = default;
};

// JSON --------------------------------------------------------------------

inline void to_json(json& j, const KnowledgeStoreEntry& e) {
  j = json{{"claim_id", e.claim_id}, {"url", e.url}, {"text", e.text},
           {"channel", std::string(to_string(e.channel))}};
  if (e.publication_date) j["publication_date"] = e.publication_date->str();
  if (e.gold) j["gold"] = true;
  if (e.undated_flag) j["undated"] = true;
}

inline void from_json(const json& j, KnowledgeStoreEntry& e) {
  e.claim_id = j.at("claim_id").get<std::string>();
  e.url = j.at("url").get<std::string>();
  e.text = j.value("text", std::string{});
  e.channel = parse_channel(j.value("channel", std::string("google_search_text")));
  if (auto it = j.find("publication_date"); it != j.end() && !it->is_null()) {
    e.publication_date = Date::parse(it->get<std::string>());
  }
  e.gold = j.value("gold", false);
  e.undated_flag = j.value("undated", false);
  if (auto it = j.find("media_base64"); it != j.end() && it->is_string()) {
    e.media = Base64Image{it->get<std::string>()};
  }
}

inline void to_json(json& j, const ChannelStats& s) {
  j = json{{"url_count_total", s.url_count_total},
           {"url_count_scraped", s.url_count_scraped},
           {"word_count", s.word_count}};
}

inline void to_json(json& j, const StoreStats& s) {
  j = json{{"search_text", s.search_text}, {"reverse_image", s.reverse_image},
           {"image_count", s.image_count}};
}

inline void to_json(json& j, const QuerySpec& q) {
  j = json{{"claim_id", q.claim_id}, {"query", q.query_text},
           {"family", std::string(to_string(q.family))}, {"adversarial", q.adversarial}};
}

}  // namespace averimatec::store
