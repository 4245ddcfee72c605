#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "averimatec/core/model.hpp"
#include "averimatec/pipeline/adapter.hpp"
#include "averimatec/pipeline/prompts.hpp"
#include "averimatec/pipeline/trace.hpp"
#include "averimatec/retrieval/bm25.hpp"
#include "averimatec/retrieval/dense.hpp"
#include "averimatec/store/types.hpp"

namespace averimatec::pipeline {

enum class AnswerStrategy { VisualQA, ImageRelatedRAG, TextualRAG, ImageAnswerSelection };

inline std::string_view to_string(AnswerStrategy s) {
  switch (s) {
    case AnswerStrategy::VisualQA: return "VisualQA";
    case AnswerStrategy::ImageRelatedRAG: return "ImageRelatedRAG";
    case AnswerStrategy::TextualRAG: return "TextualRAG";
    case AnswerStrategy::ImageAnswerSelection: return "ImageAnswerSelection";
  }
  return "TextualRAG";
}

/// Finds a strategy name in free-form model output.
inline std::optional<AnswerStrategy> parse_strategy(std::string_view output) {
  std::string s;
  for (unsigned char c : output) {
    if (std::isalnum(c)) s.push_back(static_cast<char>(std::tolower(c)));
  }
  static constexpr std::pair<std::string_view, AnswerStrategy> kNames[] = {
      {"imageanswerselection", AnswerStrategy::ImageAnswerSelection},
      {"imagerelatedrag", AnswerStrategy::ImageRelatedRAG},
      {"textualrag", AnswerStrategy::TextualRAG},
      {"visualqa", AnswerStrategy::VisualQA},
  };
  std::optional<AnswerStrategy> best;
  std::size_t best_pos = std::string::npos;
  for (auto [name, strategy] : kNames) {
    auto p = s.find(name);
    if (p < best_pos) {
      best_pos = p;
      best = strategy;
    }
  }
  return best;
}

/// URL recorded for answers read off the claim images themselves.
inline constexpr const char* kClaimSourceUrl = "claim-source";
/// URL recorded for answers without any supporting evidence.
inline constexpr const char* kNoEvidenceUrl = "no-evidence";
inline constexpr const char* kNoAnswer = "No answer could be found.";

struct RetrievalConfig {
  std::size_t text_depth = 30;
  std::size_t image_depth = 2;
  /// Index 256-token windows (64 overlap) instead of whole documents.
  bool chunking = false;
  retrieval::ChunkOptions chunk;
  /// Snippets shown to the answer model are cut to this many whitespace tokens.
  std::size_t snippet_tokens = 300;
  retrieval::Bm25Params bm25;
};

/// Retrieval view of one claim's store: a BM25 index per text channel and the image pool.
/// Immutable after construction.
class EvidenceIndex {
 public:
  struct Piece {
    std::string url;
    std::string text;
  };

  EvidenceIndex() = default;
  EvidenceIndex(const store::ClaimStore& s, const RetrievalConfig& cfg)
      : gs_(cfg.bm25), ris_(cfg.bm25) {
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
      const auto& e = s.entries[i];
      char id[16];
      std::snprintf(id, sizeof id, "e%05zu", i);
      if (e.channel == store::Channel::GoogleSearchImage) {
        if (e.media) images_.push_back({e.url, *e.media});
        continue;
      }
      if (text::trim(e.text).empty()) continue;
      auto& index = e.channel == store::Channel::ReverseImageSearch ? ris_ : gs_;
      if (!cfg.chunking) {
        add(index, id, e.url, e.text);
        continue;
      }
      auto spans = text::whitespace_spans(e.text);
      const std::size_t stride = cfg.chunk.window - cfg.chunk.overlap;
      for (std::size_t start = 0, k = 0;; start += stride, ++k) {
        const std::size_t end = std::min(spans.size(), start + cfg.chunk.window);
        if (start >= end) break;
        auto from = spans[start].begin;
        auto to = spans[end - 1].end;
        add(index, std::string(id) + "#" + std::to_string(k), e.url, e.text.substr(from, to - from));
        if (end == spans.size()) break;
      }
    }
  }

  const retrieval::Bm25Index& text_index(store::Channel c) const {
    return c == store::Channel::ReverseImageSearch ? ris_ : gs_;
  }
  const Piece& piece(const std::string& doc_id) const { return pieces_.at(doc_id); }
  const std::vector<retrieval::ImageCandidate>& images() const { return images_; }

 private:
  void add(retrieval::Bm25Index& index, std::string id, const std::string& url, std::string body) {
    index.add_text(id, body);
    pieces_.emplace(std::move(id), Piece{url, std::move(body)});
  }

  retrieval::Bm25Index gs_;
  retrieval::Bm25Index ris_;
  std::map<std::string, Piece> pieces_;
  std::vector<retrieval::ImageCandidate> images_;
};

/// Shared state of one claim's run.
struct StepContext {
  ModelAdapter& llm;
  ModelAdapter& mllm;
  const PromptSet& prompts;
  ClaimTrace* trace = nullptr;
  std::vector<std::string>* warnings = nullptr;

  void warn(std::string message) const {
    if (warnings) warnings->push_back(std::move(message));
  }

  /// Renders, sends and records one model call.
  std::string call(ModelAdapter& adapter, const std::string& step, const std::string& task,
                   std::map<std::string, std::string> fields, std::vector<Base64Image> images = {},
                   std::vector<std::string> retrieved = {}) const {
    ModelRequest req;
    req.task = task;
    req.fields = std::move(fields);
    req.prompt = prompts.render(task, req.fields);
    req.images = std::move(images);
    TraceEvent event{step, task, req.key(), req.fields, req.prompt, "", "", std::move(retrieved)};
    try {
      event.output = adapter.complete(req);
    } catch (const Error& e) {
      event.error = e.what();
      if (trace) trace->events.push_back(std::move(event));
      throw AdapterError(e.what());
    }
    if (trace) trace->events.push_back(event);
    return event.output;
  }
};

// ---------------------------------------------------------------------------

/// The `n` training claims most similar to `claim` by BM25 over claim text; ties by
/// ascending id. The claim itself is never its own example.
inline std::vector<const Claim*> few_shot_examples(const Claim& claim, const std::vector<Claim>& train,
                                                   std::size_t n) {
  std::vector<const Claim*> out;
  if (n == 0) return out;
  retrieval::Bm25Index index;
  std::map<std::string, const Claim*> by_id;
  for (const auto& c : train) {
    if (c.id == claim.id || by_id.contains(c.id)) continue;
    by_id[c.id] = &c;
    index.add_text(c.id, c.text);
  }
  for (const auto& d : index.topk(text::word_tokens(claim.text), n)) out.push_back(by_id.at(d.doc_id));
  return out;
}

inline std::string render_examples(const std::vector<const Claim*>& examples) {
  std::string out;
  for (const auto* c : examples) {
    out += "Claim: " + c->text + "\n";
    for (const auto& qa : c->gold_qas) out += "- " + qa.question + "\n";
  }
  return out;
}

namespace detail {

/// Fallback for unnumbered prose: every '?'-terminated sentence is a question.
inline std::vector<std::string> split_questions(std::string_view output) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    if (output[i] != '?') continue;
    auto q = text::collapse_whitespace(output.substr(start, i + 1 - start));
    // Drop any leading sentence that is not part of the question.
    auto cut = q.find_last_of(".!:\n", q.size() - 1);
    if (cut != std::string::npos && cut + 1 < q.size()) q = text::trim(std::string_view(q).substr(cut + 1));
    if (q.size() > 1) out.push_back(std::move(q));
    start = i + 1;
  }
  return out;
}

inline std::vector<std::string> parse_questions(std::string_view output) {
  auto items = parse_list(output);
  auto split = split_questions(output);
  if (split.size() > items.size()) return split;
  return items;
}

inline void append_unique(std::vector<std::string>& out, const std::vector<std::string>& more, std::size_t n) {
  for (const auto& q : more) {
    if (out.size() >= n) break;
    if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
  }
}

}  // namespace detail

/// Up to `n` evidence-seeking questions (5 in the baseline). When the first answer
/// parses to fewer than `n`, the model is asked once more for the rest.
inline std::vector<std::string> generate_questions(const Claim& claim, const std::string& examples,
                                                   const StepContext& ctx, std::size_t n = 5) {
  std::map<std::string, std::string> fields{
      {"claim", claim.text}, {"date", claim.claim_date.str()}, {"examples", examples}, {"count", std::to_string(n)}};
  std::vector<std::string> questions;
  detail::append_unique(questions, detail::parse_questions(ctx.call(ctx.mllm, "questions", tasks::kQuestions, fields, claim.images)), n);
  if (questions.size() < n) {
    fields["have"] = text::join(questions, "\n");
    fields["missing"] = std::to_string(n - questions.size());
    detail::append_unique(questions,
                          detail::parse_questions(ctx.call(ctx.mllm, "questions", tasks::kQuestions, fields, claim.images)),
                          n);
    if (questions.size() < n) {
      ctx.warn("claim " + claim.id + ": only " + std::to_string(questions.size()) + " of " + std::to_string(n) +
               " questions generated");
    }
  }
  return questions;
}

inline AnswerStrategy classify_question(const std::string& question, const Claim& claim, const StepContext& ctx) {
  auto output = ctx.call(ctx.llm, "classify", tasks::kClassify, {{"claim", claim.text}, {"question", question}});
  if (auto s = parse_strategy(output)) return *s;
  ctx.warn("claim " + claim.id + ": unparseable strategy '" + text::trim(output) + "'; using TextualRAG");
  return AnswerStrategy::TextualRAG;
}

struct Answer {
  QAPair qa;
  AnswerStrategy strategy = AnswerStrategy::TextualRAG;
  std::vector<std::string> retrieved;
};

namespace detail {

/// Splits "answer\nSOURCE: n" into the answer text and the cited snippet number.
inline std::pair<std::string, std::optional<std::size_t>> parse_cited_answer(std::string_view output) {
  std::string answer;
  std::optional<std::size_t> source;
  std::size_t start = 0;
  while (start <= output.size()) {
    auto end = std::min(output.find('\n', start), output.size());
    auto line = text::trim(output.substr(start, end - start));
    auto lower = text::ascii_lower(line);
    if (lower.rfind("source", 0) == 0) {
      auto digits = line.find_first_of("0123456789");
      if (digits != std::string::npos) source = std::stoul(line.substr(digits, line.find_first_not_of("0123456789", digits) - digits));
    } else if (!line.empty()) {
      if (lower.rfind("answer:", 0) == 0) line = text::trim(std::string_view(line).substr(7));
      if (!answer.empty()) answer += ' ';
      answer += line;
    }
    start = end + 1;
  }
  return {answer, source};
}

inline std::string cut_tokens(const std::string& body, std::size_t max_tokens) {
  auto spans = text::whitespace_spans(body);
  if (max_tokens == 0 || spans.size() <= max_tokens) return body;
  return body.substr(0, spans[max_tokens - 1].end);
}

}  // namespace detail

/// Answers one question with the given strategy.
inline Answer answer_question(const std::string& question, AnswerStrategy strategy, const Claim& claim,
                              const EvidenceIndex& index, retrieval::EmbeddingProvider& embedder,
                              const StepContext& ctx, const RetrievalConfig& cfg = {}) {
  Answer out;
  out.strategy = strategy;
  out.qa.question = question;
  out.qa.answer.question = question;
  auto no_answer = [&] {
    out.qa.answer.text = kNoAnswer;
    out.qa.answer.url = kNoEvidenceUrl;
    out.qa.answer.images.clear();
    return out;
  };

  switch (strategy) {
    case AnswerStrategy::VisualQA: {
      auto text = text::trim(ctx.call(ctx.mllm, "answer", tasks::kVisualQa,
                                      {{"claim", claim.text}, {"question", question}}, claim.images));
      if (text.empty()) return no_answer();
      out.qa.answer.text = std::move(text);
      out.qa.answer.url = kClaimSourceUrl;
      return out;
    }
    case AnswerStrategy::ImageRelatedRAG:
    case AnswerStrategy::TextualRAG: {
      const auto channel = strategy == AnswerStrategy::ImageRelatedRAG ? store::Channel::ReverseImageSearch
                                                                       : store::Channel::GoogleSearchText;
      auto ranked = index.text_index(channel).topk(text::word_tokens(question), cfg.text_depth);
      std::erase_if(ranked, [](const retrieval::ScoredDoc& d) { return d.score <= 0.0; });
      std::string evidence;
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        out.retrieved.push_back(ranked[i].doc_id);
        evidence += "[" + std::to_string(i + 1) + "] " +
                    text::collapse_whitespace(detail::cut_tokens(index.piece(ranked[i].doc_id).text, cfg.snippet_tokens)) +
                    "\n";
      }
      if (ranked.empty()) {
        if (ctx.trace) ctx.trace->events.push_back({"retrieve", "", "", {{"question", question}}, "", "", "", {}});
        return no_answer();
      }
      auto output = ctx.call(ctx.llm, "answer", tasks::kRagAnswer,
                             {{"claim", claim.text}, {"question", question}, {"evidence", evidence}}, {},
                             out.retrieved);
      auto [answer, source] = detail::parse_cited_answer(output);
      if (answer.empty()) return no_answer();
      std::size_t cited = 0;
      if (source && *source >= 1 && *source <= ranked.size()) {
        cited = *source - 1;
      } else {
        ctx.warn("claim " + claim.id + ": answer cites no valid snippet; attributing to rank 1");
      }
      out.qa.answer.text = std::move(answer);
      out.qa.answer.url = index.piece(ranked[cited].doc_id).url;
      return out;
    }
    case AnswerStrategy::ImageAnswerSelection: {
      auto ranked = retrieval::topk_images(index.images(), question, embedder, cfg.image_depth);
      for (auto& w : ranked.warnings) ctx.warn("claim " + claim.id + ": " + w);
      if (ranked.ranked.empty()) return no_answer();
      std::vector<Base64Image> candidates;
      std::map<std::string, Base64Image> by_url;
      for (const auto& img : index.images()) by_url.emplace(img.id, img.image);
      for (const auto& r : ranked.ranked) {
        out.retrieved.push_back(r.doc_id);
        candidates.push_back(by_url.at(r.doc_id));
      }
      auto output = ctx.call(ctx.mllm, "answer", tasks::kImageSelect,
                             {{"claim", claim.text}, {"question", question},
                              {"candidates", std::to_string(candidates.size())}},
                             candidates, out.retrieved);
      std::size_t pick = 0;
      auto digits = output.find_first_of("0123456789");
      if (digits != std::string::npos) {
        auto n = std::stoul(output.substr(digits, output.find_first_not_of("0123456789", digits) - digits));
        if (n >= 1 && n <= candidates.size()) pick = n - 1;
      } else {
        ctx.warn("claim " + claim.id + ": image selection unparseable; using the top candidate");
      }
      out.qa.answer.text = text::placeholder(1);
      out.qa.answer.images = {candidates[pick]};
      out.qa.answer.url = out.retrieved[pick];
      return out;
    }
  }
  return no_answer();
}

inline std::string render_qas(const std::vector<QAPair>& qas) {
  std::string out;
  for (std::size_t i = 0; i < qas.size(); ++i) {
    out += "Q" + std::to_string(i + 1) + ": " + qas[i].question + "\n";
    out += "A" + std::to_string(i + 1) + ": " + qas[i].answer.text + "\n";
  }
  return out;
}

/// Verdict from all QA pairs jointly. An unparseable label is asked for once more,
/// then Not Enough Evidence is returned with a warning.
inline Verdict predict_verdict(const Claim& claim, const std::vector<QAPair>& qas, const StepContext& ctx) {
  std::map<std::string, std::string> fields{
      {"claim", claim.text}, {"date", claim.claim_date.str()}, {"qas", render_qas(qas)}};
  auto parse = [](const std::string& output) -> std::optional<Verdict> {
    if (auto v = parse_verdict(text::trim(output))) return v;
    auto lines = parse_list(output);
    if (!lines.empty()) return parse_verdict(lines.front());
    return std::nullopt;
  };
  if (auto v = parse(ctx.call(ctx.llm, "verdict", tasks::kVerdict, fields))) return *v;
  fields["retry"] = "1";
  if (auto v = parse(ctx.call(ctx.llm, "verdict", tasks::kVerdict, fields))) return *v;
  ctx.warn("claim " + claim.id + ": verdict unparseable twice; using Not Enough Evidence");
  return Verdict::NotEnoughEvidence;
}

/// Justification of the verdict. Adapter failure yields "" with a warning.
inline std::string generate_justification(const Claim& claim, const std::vector<QAPair>& qas, Verdict verdict,
                                          const StepContext& ctx) {
  try {
    return text::trim(ctx.call(ctx.llm, "justification", tasks::kJustification,
                               {{"claim", claim.text}, {"verdict", std::string(to_string(verdict))},
                                {"qas", render_qas(qas)}}));
  } catch (const AdapterError& e) {
    ctx.warn("claim " + claim.id + ": justification failed: " + e.what());
    return "";
  }
}

}  // namespace averimatec::pipeline
