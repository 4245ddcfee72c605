#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "averimatec/core/parallel.hpp"
#include "averimatec/core/validation.hpp"
#include "averimatec/scoring/judge.hpp"
#include "averimatec/scoring/normalize.hpp"

namespace averimatec::scoring {

/// Evidence recall a claim needs for its verdict to count.
inline constexpr double kDefaultTau = 0.3;
/// Image pairs scoring below this are insufficiently similar.
inline constexpr int kVisualThreshold = 8;

struct VisualMatch {
  int score = 0;
  bool valid = false;

  bool operator==(const VisualMatch&) const = default;
};

inline VisualMatch visual_match(const Base64Image& gt, const Base64Image& pred, JudgeAdapter& judge) {
  if (!gt.decode() || !pred.decode()) return {0, false};
  const int score = std::clamp(judge.image_similarity(gt, pred), 0, 10);
  return {score, score >= kVisualThreshold};
}

struct ItemMatch {
  bool covered = false;
  std::optional<std::size_t> matched;
  /// Best image-pair score, for GT items with images that were textually covered.
  std::optional<int> visual_score;
  bool valid = false;
};

struct RecallResult {
  double recall = 0.0;
  bool vacuous = false;
  std::vector<ItemMatch> items;
};

/// Fraction of GT evidence items covered by the prediction. A GT item with images also
/// needs the matched prediction to carry a sufficiently similar image (best pair).
inline RecallResult evidence_recall(const std::vector<EvidenceItem>& gt, const std::vector<EvidenceItem>& pred,
                                    JudgeAdapter& judge) {
  RecallResult out;
  if (gt.empty()) {
    out.recall = 1.0;
    out.vacuous = true;
    return out;
  }
  std::vector<std::string> refs, preds;
  for (const auto& e : gt) refs.push_back(render_evidence_text(e));
  for (const auto& e : pred) preds.push_back(render_evidence_text(e));
  auto cov = pred.empty() ? std::vector<Coverage>(gt.size()) : judge.coverage(refs, preds);
  if (cov.size() != gt.size()) throw AdapterError("judge returned " + std::to_string(cov.size()) + " verdicts for " +
                                                  std::to_string(gt.size()) + " references");
  std::size_t valid = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    ItemMatch m;
    m.covered = cov[i].covered;
    m.matched = cov[i].matched;
    if (m.covered && m.matched && *m.matched >= pred.size()) {
      throw AdapterError("judge matched a prediction index out of range");
    }
    if (m.covered) {
      if (gt[i].images.empty()) {
        m.valid = true;
      } else {
        int best = 0;
        if (m.matched) {
          for (const auto& g : gt[i].images) {
            for (const auto& p : pred[*m.matched].images) best = std::max(best, visual_match(g, p, judge).score);
          }
        }
        m.visual_score = best;
        m.valid = best >= kVisualThreshold;
      }
    }
    if (m.valid) ++valid;
    out.items.push_back(m);
  }
  out.recall = static_cast<double>(valid) / static_cast<double>(gt.size());
  return out;
}

/// Mean coverage of the GT questions by the predicted ones.
inline double question_score(const std::vector<std::string>& gt, const std::vector<std::string>& pred,
                             JudgeAdapter& judge) {
  if (gt.empty()) return 1.0;
  if (pred.empty()) return 0.0;
  auto cov = judge.coverage(gt, pred);
  if (cov.size() != gt.size()) throw AdapterError("judge returned a wrong number of question verdicts");
  auto covered = std::count_if(cov.begin(), cov.end(), [](const Coverage& c) { return c.covered; });
  return static_cast<double>(covered) / static_cast<double>(gt.size());
}

/// Sentences of `s`, split after '.', '!' or '?' followed by whitespace or the end.
inline std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool stop = s[i] == '.' || s[i] == '!' || s[i] == '?';
    if (stop && (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1])))) {
      if (auto t = text::trim(s.substr(start, i + 1 - start)); !t.empty()) out.emplace_back(t);
      start = i + 1;
    }
  }
  if (auto t = text::trim(s.substr(std::min(start, s.size()))); !t.empty()) out.emplace_back(t);
  return out;
}

/// Fraction of the GT justification's sentences covered by the predicted justification.
inline double justification_score(const std::string& gt, const std::string& pred, JudgeAdapter& judge) {
  auto units = split_sentences(gt);
  if (units.empty()) return 1.0;
  if (text::trim(pred).empty()) return 0.0;
  auto cov = judge.coverage(units, {pred});
  if (cov.size() != units.size()) throw AdapterError("judge returned a wrong number of justification verdicts");
  auto covered = std::count_if(cov.begin(), cov.end(), [](const Coverage& c) { return c.covered; });
  return static_cast<double>(covered) / static_cast<double>(units.size());
}

/// Per-claim AVerImaTeC score: the verdict counts only with enough evidence.
constexpr double gated_score(bool verdict_correct, double recall, double tau = kDefaultTau) {
  return verdict_correct && recall >= tau ? 1.0 : 0.0;
}

struct ClaimScore {
  std::string claim_id;
  double question_score = 0.0;
  double evidence_recall = 0.0;
  double justification_score = 0.0;
  bool verdict_correct = false;
  double averimatec = 0.0;
  std::optional<Verdict> predicted;
  std::size_t evidence_count = 0;
  bool submitted = true;
  /// False when the judge failed; the claim then counts as 0 everywhere.
  bool scored = true;
  bool vacuous_gt = false;
  std::string note;
};

struct Aggregates {
  double question = 0.0;
  double evidence = 0.0;
  double justification = 0.0;
  double averimatec = 0.0;
};

struct ScoreReport {
  double tau = kDefaultTau;
  std::vector<ClaimScore> claims;  // ordered by claim id
  Aggregates aggregates;
  std::vector<std::string> warnings;

  std::vector<std::string> unscored() const {
    std::vector<std::string> out;
    for (const auto& c : claims) {
      if (!c.scored) out.push_back(c.claim_id);
    }
    return out;
  }
  const ClaimScore* find(std::string_view id) const {
    for (const auto& c : claims) {
      if (c.claim_id == id) return &c;
    }
    return nullptr;
  }
};

struct ScoringOptions {
  double tau = kDefaultTau;
  std::size_t workers = 1;
};

inline ClaimScore score_claim(const Claim& claim, const SubmissionRecord* record, JudgeAdapter& judge,
                              double tau = kDefaultTau) {
  ClaimScore s;
  s.claim_id = claim.id;
  if (!record) {
    s.submitted = false;
    s.note = "no submission record";
    return s;
  }
  s.predicted = record->verdict;
  s.evidence_count = record->evidence.size();
  s.verdict_correct = record->verdict == claim.gold_verdict;
  try {
    std::vector<EvidenceItem> gt;
    std::vector<std::string> gt_questions;
    for (const auto& qa : claim.gold_qas) {
      gt.push_back(qa.answer);
      gt_questions.push_back(qa.question);
    }
    auto recall = evidence_recall(gt, record->evidence, judge);
    s.evidence_recall = recall.recall;
    s.vacuous_gt = recall.vacuous;
    s.question_score = question_score(gt_questions, record->questions, judge);
    s.justification_score = justification_score(claim.justification, record->justification, judge);
    s.averimatec = gated_score(s.verdict_correct, s.evidence_recall, tau);
  } catch (const Error& e) {
    s.scored = false;
    s.question_score = s.evidence_recall = s.justification_score = s.averimatec = 0.0;
    s.note = std::string("judge failed: ") + e.what();
  }
  return s;
}

/// Means of per-claim values over `scores`; empty input gives zeros.
inline Aggregates aggregate(const std::vector<ClaimScore>& scores) {
  Aggregates a;
  if (scores.empty()) return a;
  for (const auto& s : scores) {
    a.question += s.question_score;
    a.evidence += s.evidence_recall;
    a.justification += s.justification_score;
    a.averimatec += s.averimatec;
  }
  const auto n = static_cast<double>(scores.size());
  a.question /= n;
  a.evidence /= n;
  a.justification /= n;
  a.averimatec /= n;
  return a;
}

/// Scores an already normalized submission against the gold claims. Every claim counts:
/// a claim without a record, or whose judging failed, scores 0.
inline ScoreReport averimatec_score(const std::vector<Claim>& claims, const Submission& sub, JudgeAdapter& judge,
                                    const ScoringOptions& opts = {}) {
  ScoreReport report;
  report.tau = opts.tau;
  std::map<std::string, const SubmissionRecord*> records;
  for (const auto& r : sub.records) records.emplace(r.claim_id, &r);
  report.claims.resize(claims.size());
  parallel_for(claims.size(), opts.workers, [&](std::size_t i) {
    auto it = records.find(claims[i].id);
    report.claims[i] = score_claim(claims[i], it == records.end() ? nullptr : it->second, judge, opts.tau);
  });
  std::sort(report.claims.begin(), report.claims.end(),
            [](const ClaimScore& a, const ClaimScore& b) { return a.claim_id < b.claim_id; });
  for (const auto& c : report.claims) {
    if (!c.submitted) report.warnings.push_back(c.claim_id + ": no submission record; scored 0");
    else if (!c.scored) report.warnings.push_back(c.claim_id + ": unscored (" + c.note + "); counted as 0");
    if (c.vacuous_gt) report.warnings.push_back(c.claim_id + ": no gold evidence; recall taken as 1");
  }
  for (const auto& r : sub.records) {
    if (std::none_of(claims.begin(), claims.end(), [&](const Claim& c) { return c.id == r.claim_id; })) {
      report.warnings.push_back(r.claim_id + ": not a gold claim; ignored");
    }
  }
  report.aggregates = aggregate(report.claims);
  return report;
}

/// Normalizes a raw submission, then scores it. Evidence counts reported per claim are
/// those of the raw submission.
inline ScoreReport score_submission(const std::vector<Claim>& claims, const Submission& raw, JudgeAdapter& judge,
                                    const ScoringOptions& opts = {}, const SubmissionCaps& caps = {}) {
  auto report = averimatec_score(claims, normalize_submission(raw, caps), judge, opts);
  for (auto& c : report.claims) {
    if (const auto* r = raw.find(c.claim_id)) c.evidence_count = r->evidence.size();
  }
  return report;
}

}  // namespace averimatec::scoring
