#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "averimatec/pipeline/adapter.hpp"
#include "averimatec/pipeline/prompts.hpp"
#include "averimatec/pipeline/steps.hpp"

namespace averimatec::pipeline {

/// Deterministic rule-based stand-in for the LLM/MLLM. Output depends only on the
/// request's task, fields and images, never on prompt wording.
class MockModelAdapter final : public ModelAdapter {
 public:
  std::string name() const override { return "mock-v1"; }

  std::string complete(const ModelRequest& r) override {
    const auto& t = r.task;
    if (t == tasks::kQuestions) return questions(r);
    if (t == tasks::kNextQuestion) return next_question(r);
    if (t == tasks::kClassify) return std::string(to_string(classify(field(r, "question"))));
    if (t == tasks::kVisualQa) {
      auto shown = first_words(field(r, "claim"), 12);
      while (!shown.empty() && std::ispunct(static_cast<unsigned char>(shown.back()))) shown.pop_back();
      return "The claim image shows: " + shown + ".";
    }
    if (t == tasks::kRagAnswer) return rag_answer(r);
    if (t == tasks::kImageSelect) return "1";
    if (t == tasks::kVerdict) return verdict(r);
    if (t == tasks::kJustification) {
      return "The claim is " + field(r, "verdict") + ". " + text::collapse_whitespace(field(r, "qas"));
    }
    if (t.rfind("ks.", 0) == 0) return store_query(r);
    throw AdapterError("mock adapter has no rule for task " + t);
  }

  /// Keyword rules over the first five words of the question, so the claim text quoted
  /// in a question does not decide its strategy.
  static AnswerStrategy classify(const std::string& question) {
    auto q = text::ascii_lower(first_words(question, 5));
    auto has = [&](std::string_view s) { return q.find(s) != std::string::npos; };
    if (has("which image") || has("what image") || has("which photo")) return AnswerStrategy::ImageAnswerSelection;
    if (has("shown in the") || has("visible") || has("depicted") || has("what does the image show")) {
      return AnswerStrategy::VisualQA;
    }
    if (has("image") || has("photo") || has("picture") || has("video")) return AnswerStrategy::ImageRelatedRAG;
    return AnswerStrategy::TextualRAG;
  }

 private:
  static std::string field(const ModelRequest& r, const std::string& name) {
    auto it = r.fields.find(name);
    return it == r.fields.end() ? std::string{} : it->second;
  }

  static std::string first_words(const std::string& s, std::size_t n) {
    auto words = text::whitespace_spans(s);
    if (words.empty()) return "";
    return text::trim(s.substr(0, words[std::min(n, words.size()) - 1].end));
  }

  static std::vector<std::string> claim_questions(const std::string& claim) {
    const auto topic = first_words(claim, 8);
    return {
        "What is shown in the image accompanying the claim?",
        "Where was the claim image first published?",
        "What do reports say about " + topic + "?",
        "When did the event in the claim happen: " + topic + "?",
        "Which image shows " + topic + "?",
    };
  }

  static std::string questions(const ModelRequest& r) {
    auto qs = claim_questions(field(r, "claim"));
    std::string out;
    for (std::size_t i = 0; i < qs.size(); ++i) out += std::to_string(i + 1) + ". " + qs[i] + "\n";
    return out;
  }

  static std::string next_question(const ModelRequest& r) {
    auto qs = claim_questions(field(r, "claim"));
    auto history = field(r, "history");
    std::size_t k = 0;
    for (std::size_t p = 0; (p = history.find("Q", p)) != std::string::npos; ++p) {
      if (p == 0 || history[p - 1] == '\n') ++k;
    }
    return k < qs.size() ? qs[k] : "";
  }

  /// Picks the snippet sharing the most word types with the question (lowest number on
  /// ties) and answers with its first sentence.
  static std::string rag_answer(const ModelRequest& r) {
    auto qwords = text::word_tokens(field(r, "question"));
    std::set<std::string> qset(qwords.begin(), qwords.end());
    const auto evidence = field(r, "evidence");
    std::size_t best = 0, best_overlap = 0, n = 0;
    std::string best_text;
    std::size_t start = 0;
    while (start < evidence.size()) {
      auto end = std::min(evidence.find('\n', start), evidence.size());
      auto line = evidence.substr(start, end - start);
      start = end + 1;
      auto close = line.find("] ");
      if (line.empty() || line[0] != '[' || close == std::string::npos) continue;
      ++n;
      auto body = line.substr(close + 2);
      auto words = text::word_tokens(body);
      std::set<std::string> wset(words.begin(), words.end());
      std::size_t overlap = 0;
      for (const auto& w : qset) overlap += wset.count(w);
      if (n == 1 || overlap > best_overlap) {
        best = n;
        best_overlap = overlap;
        best_text = body;
      }
    }
    if (n == 0) return "";
    auto stop = best_text.find_first_of(".!?");
    auto sentence = text::trim(best_text.substr(0, stop == std::string::npos ? best_text.size() : stop + 1));
    return sentence + "\nSOURCE: " + std::to_string(best);
  }

  static std::string verdict(const ModelRequest& r) {
    auto qas = text::ascii_lower(field(r, "qas"));
    std::size_t answers = 0, missing = 0;
    for (std::size_t p = 0; (p = qas.find("\na", p)) != std::string::npos; ++p) ++answers;
    if (qas.rfind("a", 0) == 0) ++answers;
    for (std::size_t p = 0; (p = qas.find(text::ascii_lower(kNoAnswer), p)) != std::string::npos; ++p) ++missing;
    if (answers == 0 || missing == answers) return "Not Enough Evidence";
    auto has = [&](std::string_view s) { return qas.find(s) != std::string::npos; };
    const bool against = has("false") || has("fake") || has("misleading") || has("altered") || has("hoax") ||
                         has("fabricated") || has("old photo") || has("not ");
    const bool for_ = has("confirmed") || has("authentic") || has("genuine") || has("verified");
    if (against && for_) return "Conflicting Evidence/Cherrypicking";
    if (against) return "Refuted";
    return "Supported";
  }

  static std::string store_query(const ModelRequest& r) {
    const auto& t = r.task;
    const auto claim = field(r, "claim");
    // Capitalized word runs stand in for named entities.
    std::vector<std::string> entities;
    {
      std::string current;
      auto flush = [&] {
        if (!current.empty() && std::find(entities.begin(), entities.end(), current) == entities.end()) {
          entities.push_back(current);
        }
        current.clear();
      };
      for (const auto& span : text::whitespace_spans(claim)) {
        std::string w = claim.substr(span.begin, span.end - span.begin);
        while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
        while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.erase(w.begin());
        if (!w.empty() && std::isupper(static_cast<unsigned char>(w[0])) && span.begin != 0) {
          if (!current.empty()) current += ' ';
          current += w;
        } else {
          flush();
        }
      }
      flush();
    }
    const auto topic = first_words(claim, 8);
    if (t == "ks.generated_questions") return questions(r);
    if (t == "ks.background_queries") return text::join(entities, "\n");
    if (t == "ks.provenance_queries") return topic + " original source\n" + topic + " first posted";
    if (t == "ks.named_entities") return text::join(entities, "\n");
    if (t == "ks.different_event_same_entity") {
      std::string out;
      for (const auto& e : entities) out += e + " other event\n";
      return out;
    }
    if (t == "ks.similar_entities") return "similar to " + topic;
    if (t == "ks.gold_url_questions") return "What does " + text::url_host(field(r, "url")) + " report?";
    if (t == "ks.rephrase_question" || t == "ks.rephrase_answer") return "In other words: " + field(r, "text");
    throw AdapterError("mock adapter has no rule for task " + t);
  }
};

}  // namespace averimatec::pipeline
