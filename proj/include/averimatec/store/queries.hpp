#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "averimatec/core/model.hpp"
#include "averimatec/pipeline/adapter.hpp"
#include "averimatec/retrieval/bm25.hpp"
#include "averimatec/store/types.hpp"

namespace averimatec::store {

/// Task names sent to the query generator. Mocks key on these.
namespace tasks {
inline constexpr const char* kGeneratedQuestions = "ks.generated_questions";
inline constexpr const char* kBackground = "ks.background_queries";
inline constexpr const char* kProvenance = "ks.provenance_queries";
inline constexpr const char* kNamedEntities = "ks.named_entities";
inline constexpr const char* kGoldUrlQuestions = "ks.gold_url_questions";
inline constexpr const char* kDifferentEvent = "ks.different_event_same_entity";
inline constexpr const char* kSimilarEntities = "ks.similar_entities";
inline constexpr const char* kRephraseQuestion = "ks.rephrase_question";
inline constexpr const char* kRephraseAnswer = "ks.rephrase_answer";
}  // namespace tasks

struct FamilyFailure {
  QueryFamily family;
  std::string message;
};

struct QueryGeneration {
  std::vector<QuerySpec> queries;
  std::vector<FamilyFailure> failures;
};

struct QueryOptions {
  /// Scraped gold evidence documents by URL; when absent, gold answer texts stand in.
  std::map<std::string, std::string> gold_documents;
};

namespace detail {

inline std::string query_prompt(std::string_view instruction, const std::map<std::string, std::string>& fields) {
  std::string prompt(instruction);
  for (const auto& [k, v] : fields) prompt += "\n" + k + ": " + v;
  prompt += "\nReturn one query per line.";
  return prompt;
}

/// Paragraphs: blank-line separated blocks, or single lines when there are no blank lines.
inline std::vector<std::string> paragraphs(const std::string& doc) {
  const bool blocks = doc.find("\n\n") != std::string::npos;
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  std::size_t start = 0;
  while (start <= doc.size()) {
    auto end = std::min(doc.find('\n', start), doc.size());
    auto line = text::trim(std::string_view(doc).substr(start, end - start));
    if (line.empty()) {
      flush();
    } else {
      if (!current.empty()) current += ' ';
      current += line;
      if (!blocks) flush();
    }
    start = end + 1;
  }
  flush();
  return out;
}

}  // namespace detail

/// Search queries for one claim across the 13 query families. Gold-derived families
/// are skipped when `gold` is empty. An adapter failure is recorded against its family
/// and the remaining families still run.
inline QueryGeneration generate_queries(const Claim& claim, const std::vector<QAPair>& gold,
                                        pipeline::ModelAdapter& generator, const QueryOptions& opts = {}) {
  QueryGeneration out;
  auto add = [&](QueryFamily family, std::string q) {
    q = text::trim(q);
    if (!q.empty()) out.queries.push_back(make_query(claim.id, std::move(q), family));
  };
  auto ask = [&](const char* task, std::map<std::string, std::string> fields, std::string_view instruction) {
    pipeline::ModelRequest req;
    req.task = task;
    req.fields = std::move(fields);
    req.prompt = detail::query_prompt(instruction, req.fields);
    return pipeline::parse_list(generator.complete(req));
  };
  auto run = [&](QueryFamily family, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      out.failures.push_back({family, e.what()});
    }
  };
  const std::map<std::string, std::string> claim_fields{{"claim", claim.text}};

  run(QueryFamily::GeneratedQuestions, [&] {
    for (auto& q : ask(tasks::kGeneratedQuestions, claim_fields,
                       "Write evidence-seeking questions for fact-checking this claim."))
      add(QueryFamily::GeneratedQuestions, q);
  });
  run(QueryFamily::BackgroundQueries, [&] {
    for (auto& q : ask(tasks::kBackground, claim_fields,
                       "Write search queries for background information about the entities in this claim."))
      add(QueryFamily::BackgroundQueries, q);
  });
  run(QueryFamily::ProvenanceQueries, [&] {
    for (auto& q : ask(tasks::kProvenance, claim_fields,
                       "Write search queries that establish the provenance of this claim and its source."))
      add(QueryFamily::ProvenanceQueries, q);
  });

  std::vector<std::string> entities;
  run(QueryFamily::ClaimNamedEntities, [&] {
    entities = ask(tasks::kNamedEntities, claim_fields, "List the named entities in this claim.");
    for (const auto& e : entities) add(QueryFamily::ClaimNamedEntities, e);
    if (entities.size() > 1) add(QueryFamily::ClaimNamedEntities, text::join(entities, " "));
  });

  run(QueryFamily::DifferentEventSameEntity, [&] {
    for (auto& q : ask(tasks::kDifferentEvent, {{"claim", claim.text}, {"entities", text::join(entities, "; ")}},
                       "Write queries about different events involving some of the same entities."))
      add(QueryFamily::DifferentEventSameEntity, q);
  });
  run(QueryFamily::SimilarEntities, [&] {
    for (auto& q : ask(tasks::kSimilarEntities, claim_fields,
                       "Rewrite the claim replacing its key entities, dates and events with similar ones."))
      add(QueryFamily::SimilarEntities, q);
  });

  if (gold.empty()) return out;

  run(QueryFamily::MostSimilarGoldEvidence, [&] {
    std::vector<std::pair<std::string, std::string>> docs;
    for (const auto& qa : gold) {
      auto it = opts.gold_documents.find(qa.answer.url);
      docs.emplace_back(qa.answer.url, it != opts.gold_documents.end() ? it->second : qa.answer.text);
    }
    auto claim_tokens = text::word_tokens(claim.text);
    std::set<std::string> seen_urls;
    for (const auto& [url, doc] : docs) {
      if (!seen_urls.insert(url).second) continue;
      retrieval::Bm25Index index;
      auto paras = detail::paragraphs(doc);
      for (std::size_t i = 0; i < paras.size(); ++i) index.add_text(std::to_string(i), paras[i]);
      auto best = index.topk(claim_tokens, 1);
      if (!best.empty()) add(QueryFamily::MostSimilarGoldEvidence, paras[std::stoul(best.front().doc_id)]);
    }
  });
  run(QueryFamily::GoldUrlQuestions, [&] {
    std::set<std::string> urls;
    for (const auto& qa : gold) {
      if (qa.answer.url.empty() || !urls.insert(qa.answer.url).second) continue;
      for (auto& q : ask(tasks::kGoldUrlQuestions, {{"url", qa.answer.url}},
                         "Write questions whose search results would include this URL."))
        add(QueryFamily::GoldUrlQuestions, q);
    }
  });
  run(QueryFamily::GoldQuestions, [&] {
    for (const auto& qa : gold) add(QueryFamily::GoldQuestions, qa.question);
  });
  run(QueryFamily::ClaimPlusGoldQuestion, [&] {
    for (const auto& qa : gold) add(QueryFamily::ClaimPlusGoldQuestion, claim.text + " " + qa.question);
  });
  run(QueryFamily::RephrasedGoldQuestions, [&] {
    for (const auto& qa : gold) {
      for (auto& q : ask(tasks::kRephraseQuestion, {{"text", qa.question}}, "Rephrase this question."))
        add(QueryFamily::RephrasedGoldQuestions, q);
    }
  });
  run(QueryFamily::GoldAnswers, [&] {
    for (const auto& qa : gold) add(QueryFamily::GoldAnswers, qa.answer.text);
  });
  run(QueryFamily::RephrasedGoldAnswers, [&] {
    for (const auto& qa : gold) {
      if (text::trim(qa.answer.text).empty()) continue;
      for (auto& q : ask(tasks::kRephraseAnswer, {{"text", qa.answer.text}}, "Rephrase this answer."))
        add(QueryFamily::RephrasedGoldAnswers, q);
    }
  });
  return out;
}

}  // namespace averimatec::store
