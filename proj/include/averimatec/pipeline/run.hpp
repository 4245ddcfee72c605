#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "averimatec/core/parallel.hpp"
#include "averimatec/pipeline/steps.hpp"

namespace averimatec::pipeline {

struct PipelineConfig {
  std::size_t questions = 5;
  std::size_t few_shot = 3;
  std::size_t workers = 1;
  /// Generate each question conditioned on the QA pairs answered so far.
  bool iterative = false;
  RetrievalConfig retrieval;
};

struct Adapters {
  ModelAdapter* llm = nullptr;
  /// Defaults to `llm` when unset.
  ModelAdapter* mllm = nullptr;
  retrieval::EmbeddingProvider* embedder = nullptr;
};

struct ClaimFailure {
  std::string claim_id;
  std::string message;
};

struct PipelineResult {
  Submission submission;
  std::vector<ClaimFailure> failures;
  std::vector<std::string> warnings;
  std::vector<ClaimTrace> traces;
};

namespace detail {

inline std::string evidence_key(const EvidenceItem& ev) {
  json j{{"text", ev.text}, {"url", ev.url}, {"images", ev.images}};
  return j.dump();
}

}  // namespace detail

/// Runs the four-stage pipeline for one claim.
inline SubmissionRecord run_claim(const Claim& claim, const std::vector<Claim>& train, const EvidenceIndex& index,
                                  const StepContext& ctx, retrieval::EmbeddingProvider& embedder,
                                  const PipelineConfig& cfg) {
  const auto examples = render_examples(few_shot_examples(claim, train, cfg.few_shot));
  SubmissionRecord record;
  record.claim_id = claim.id;
  std::vector<QAPair> qas;
  auto answer = [&](const std::string& q) {
    auto strategy = classify_question(q, claim, ctx);
    qas.push_back(answer_question(q, strategy, claim, index, embedder, ctx, cfg.retrieval).qa);
  };
  if (cfg.iterative) {
    for (std::size_t i = 0; i < cfg.questions; ++i) {
      auto output = ctx.call(ctx.mllm, "questions", tasks::kNextQuestion,
                             {{"claim", claim.text}, {"date", claim.claim_date.str()}, {"examples", examples},
                              {"history", render_qas(qas)}},
                             claim.images);
      auto parsed = detail::parse_questions(output);
      if (parsed.empty()) break;
      record.questions.push_back(parsed.front());
      answer(parsed.front());
    }
  } else {
    record.questions = generate_questions(claim, examples, ctx, cfg.questions);
    for (const auto& q : record.questions) answer(q);
  }
  std::set<std::string> seen;
  for (const auto& qa : qas) {
    if (seen.insert(detail::evidence_key(qa.answer)).second) record.evidence.push_back(qa.answer);
  }
  record.verdict = predict_verdict(claim, qas, ctx);
  record.justification = generate_justification(claim, qas, record.verdict, ctx);
  return record;
}

/// Runs every claim with bounded parallelism. A claim that fails is left out of the
/// submission and reported in `failures`; the others still complete. Records keep the
/// order of `claims`. Claims without a store retrieve nothing.
inline PipelineResult run_pipeline(const std::vector<Claim>& claims,
                                   const std::map<std::string, store::ClaimStore>& stores,
                                   const std::vector<Claim>& train, const Adapters& adapters,
                                   const PipelineConfig& cfg = {}, const PromptSet& prompts = {}) {
  if (!adapters.llm) throw Error("pipeline needs a model adapter");
  retrieval::HashProjectionProvider fallback_embedder;
  auto& embedder = adapters.embedder ? *adapters.embedder : fallback_embedder;
  auto& mllm = adapters.mllm ? *adapters.mllm : *adapters.llm;

  struct Slot {
    std::optional<SubmissionRecord> record;
    std::string failure;
    std::vector<std::string> warnings;
    ClaimTrace trace;
  };
  std::vector<Slot> slots(claims.size());
  parallel_for(claims.size(), cfg.workers, [&](std::size_t i) {
    const auto& claim = claims[i];
    auto& slot = slots[i];
    slot.trace.claim_id = claim.id;
    slot.trace.adapter = adapters.llm->name();
    slot.trace.prompt_version = prompts.version();
    StepContext ctx{*adapters.llm, mllm, prompts, &slot.trace, &slot.warnings};
    try {
      EvidenceIndex index;
      if (auto it = stores.find(claim.id); it != stores.end()) {
        index = EvidenceIndex(it->second, cfg.retrieval);
      } else {
        ctx.warn("claim " + claim.id + ": no knowledge store");
      }
      slot.record = run_claim(claim, train, index, ctx, embedder, cfg);
    } catch (const Error& e) {
      slot.failure = e.what();
    }
  });

  PipelineResult out;
  for (auto& s : slots) {
    if (s.record) out.submission.records.push_back(std::move(*s.record));
    else out.failures.push_back({s.trace.claim_id, s.failure});
    for (auto& w : s.warnings) out.warnings.push_back(std::move(w));
    out.traces.push_back(std::move(s.trace));
  }
  return out;
}

}  // namespace averimatec::pipeline
