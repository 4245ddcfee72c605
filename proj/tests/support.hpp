#pragma once

// Fixture loaders, independent oracles and synthetic data shared by the unit suites and
// the acceptance binary. Nothing here depends on GoogleTest.

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "averimatec/analysis/report.hpp"
#include "averimatec/core/io.hpp"
#include "averimatec/pipeline/mock.hpp"
#include "averimatec/pipeline/run.hpp"
#include "averimatec/scoring/report.hpp"
#include "averimatec/store/assemble.hpp"
#include "averimatec/store/persist.hpp"

namespace support {

using namespace averimatec;

inline fs::path fixture(const std::string& rel) { return fs::path(FIXTURE_DIR) / rel; }
inline fs::path data(const std::string& rel) { return fs::path(DATA_DIR) / rel; }

/// Fresh empty directory under the system temp dir.
inline fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("averimatec-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline std::vector<std::string> gold_urls(const Claim& c) {
  std::vector<std::string> out;
  for (const auto& qa : c.gold_qas) {
    if (!qa.answer.url.empty()) out.push_back(qa.answer.url);
  }
  return out;
}

/// Stores assembled from a released-style entry file.
inline std::map<std::string, store::ClaimStore> assemble_fixture_stores(const std::vector<Claim>& claims,
                                                                       const fs::path& entries_path,
                                                                       std::uint64_t seed = 0) {
  std::ifstream in(entries_path);
  auto entries = store::read_entries(in);
  std::map<std::string, store::ClaimStore> out;
  for (const auto& c : claims) {
    auto it = entries.find(c.id);
    auto a = store::assemble_store(c.id, c.claim_date, it == entries.end() ? std::vector<store::KnowledgeStoreEntry>{}
                                                                           : it->second,
                                   gold_urls(c), seed);
    out.emplace(c.id, std::move(a.store));
  }
  return out;
}

struct PipelineFixture {
  std::vector<Claim> claims;
  std::vector<Claim> train;
  std::map<std::string, store::ClaimStore> stores;
};

inline PipelineFixture load_pipeline_fixture() {
  PipelineFixture f;
  f.claims = load_claims(fixture("pipeline/claims.jsonl"), Split::Dev);
  f.train = load_claims(fixture("pipeline/train.jsonl"), Split::Train);
  f.stores = assemble_fixture_stores(f.claims, fixture("pipeline/entries.jsonl"));
  return f;
}

inline pipeline::PipelineResult run_mock_pipeline(const PipelineFixture& f, pipeline::ModelAdapter& model,
                                                  pipeline::PipelineConfig cfg = {}) {
  return pipeline::run_pipeline(f.claims, f.stores, f.train, {&model, nullptr, nullptr}, cfg);
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// BM25 straight from the formula: every quantity recounted from raw token lists.
inline double bm25_oracle(const std::vector<std::vector<std::string>>& docs, std::size_t d,
                          const std::vector<std::string>& query, double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double total_len = 0;
  for (const auto& doc : docs) total_len += static_cast<double>(doc.size());
  const double avgdl = total_len / n;
  double score = 0;
  for (const auto& term : query) {
    double df = 0;
    for (const auto& doc : docs) {
      if (std::find(doc.begin(), doc.end(), term) != doc.end()) df += 1;
    }
    const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), term));
    if (tf == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const double len = static_cast<double>(docs[d].size());
    score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avgdl));
  }
  return score;
}

/// Pearson's r by the textbook sum-of-products formula in long double.
inline std::optional<double> pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

/// Mid-ranks by counting: rank = #smaller + (#equal + 1) / 2. Quadratic on purpose.
inline std::vector<double> rank_oracle(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) less += 1;
      else if (w == v[i]) equal += 1;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline std::optional<double> spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_oracle(rank_oracle(x), rank_oracle(y));
}

// ---------------------------------------------------------------------------
// Ratings fixture
// ---------------------------------------------------------------------------

inline std::vector<analysis::HumanRating> fixture_ratings() {
  std::ifstream in(fixture("ratings/ratings.jsonl"));
  return analysis::read_ratings(in);
}

inline std::map<std::string, analysis::SampleScore> fixture_sample_scores() {
  std::map<std::string, analysis::SampleScore> out;
  for (const auto& s : json::parse(read_file(fixture("ratings/samples.json")))) {
    out[s.at("sample_id")] = {s.at("evidence").get<double>(), s.at("averimatec").get<double>()};
  }
  return out;
}

inline json fixture_oracle() { return json::parse(read_file(fixture("ratings/oracle.json"))); }

// ---------------------------------------------------------------------------
// Published leaderboard replay
// ---------------------------------------------------------------------------

struct PublishedRow {
  std::string team;
  double question, evidence, justification, averimatec;
  /// AVerImaTeC over claims dated before / from 2025-01-01.
  double before, after;
  /// The before/after split agrees with the overall score.
  bool split_consistent = true;
};

inline const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows = {
      {"HUMANE", 0.8897, 0.5358, 0.5557, 0.5455, 0.5333, 0.7273},
      {"ADA-AGGR", 0.3701, 0.4629, 0.4331, 0.5369, 0.5303, 0.6364},
      {"AIC CTU", 0.8065, 0.3251, 0.3043, 0.3466, 0.3333, 0.5455},
      {"XxP", 0.3902, 0.2703, 0.1980, 0.2557, 0.2545, 0.2727},
      {"REVEAL", 0.6317, 0.2771, 0.1348, 0.2358, 0.2424, 0.1364},
      // 0.1485 x 330 + 0.2727 x 22 = 55 claims, but 0.1591 x 352 = 56.
      {"fv", 0.2885, 0.1626, 0.1306, 0.1591, 0.1485, 0.2727, false},
      {"Baseline", 0.5545, 0.1707, 0.1322, 0.1136, 0.1091, 0.1818},
  };
  return rows;
}

inline constexpr std::size_t kTestClaims = 352;
inline constexpr std::size_t kBeforeClaims = 330;
/// Claim with 3 gold items and 3 justification sentences; all others have 10.
inline constexpr std::size_t kThirdsClaim = kBeforeClaims - 1;

inline std::string rounded(double v) { return fmt::format("{:.4f}", v); }

/// A sum in units of 1/30 whose mean over 352 claims rounds to `target`.
inline std::size_t thirtieths_for(double target) {
  const double lo = (target - 5e-5) * kTestClaims * 30, hi = (target + 5e-5) * kTestClaims * 30;
  auto n = static_cast<std::size_t>(std::ceil(lo - 1e-9));
  if (static_cast<double>(n) >= hi) throw std::logic_error("no 1/30 multiple for target");
  return n;
}

/// Per-claim hit counts (out of 10, the thirds claim out of 3) summing to `units` thirtieths.
/// `floor` claims are filled to at least `min_hits` first.
inline std::vector<std::size_t> spread(std::size_t units, const std::vector<bool>& floor, std::size_t min_hits = 0) {
  std::vector<std::size_t> hits(kTestClaims, 0);
  const std::size_t thirds = units % 3;
  hits[kThirdsClaim] = thirds;
  std::size_t tenths = (units - 10 * thirds) / 3;
  for (std::size_t i = 0; i < kTestClaims; ++i) {
    if (i == kThirdsClaim || !floor[i]) continue;
    if (tenths < min_hits) throw std::logic_error("not enough evidence mass for the gated claims");
    hits[i] = min_hits;
    tenths -= min_hits;
  }
  for (std::size_t i = 0; i < kTestClaims && tenths > 0; ++i) {
    if (i == kThirdsClaim) continue;
    auto add = std::min<std::size_t>(10 - hits[i], tenths);
    hits[i] += add;
    tenths -= add;
  }
  if (tenths) throw std::logic_error("target exceeds the maximum score");
  return hits;
}

struct SyntheticTask {
  std::vector<Claim> claims;
  std::vector<std::pair<std::string, Submission>> submissions;
};

/// 352 claims (330 before 2025-01-01, 22 from it) and, per published row, a submission
/// whose per-claim scores average to that row under the mock judge.
inline SyntheticTask synthesize_published() {
  SyntheticTask task;
  for (std::size_t i = 0; i < kTestClaims; ++i) {
    Claim c;
    c.id = fmt::format("t{:03}", i);
    c.text = fmt::format("Synthetic claim {}.", i);
    c.images = {Base64Image{text::base64_encode(fmt::format("image {}", i))}};
    c.claim_date = i < kBeforeClaims ? Date{2024, static_cast<int>(1 + i % 12), static_cast<int>(1 + i % 28)}
                                     : Date{2025, static_cast<int>(1 + i % 6), static_cast<int>(1 + i % 28)};
    c.gold_verdict = Verdict::Supported;
    c.claim_types = {ClaimType::parse(i % 2 ? "Event/Property" : "Media Analysis")};
    const std::size_t n = i == kThirdsClaim ? 3 : 10;
    std::vector<std::string> sentences;
    for (std::size_t k = 1; k <= n; ++k) {
      QAPair qa;
      qa.question = fmt::format("Question {} on claim {}?", k, i);
      qa.answer.text = fmt::format("Fact {} on claim {}.", k, i);
      qa.answer.url = fmt::format("https://example.org/{}/{}", i, k);
      c.gold_qas.push_back(qa);
      sentences.push_back(fmt::format("Reason {} on claim {}.", k, i));
    }
    c.justification = text::join(sentences, " ");
    task.claims.push_back(std::move(c));
  }
  for (const auto& row : published_rows()) {
    const auto total = static_cast<std::size_t>(std::llround(row.averimatec * kTestClaims));
    const auto after = static_cast<std::size_t>(std::llround(row.after * (kTestClaims - kBeforeClaims)));
    const auto before = total - after;
    std::vector<bool> gated(kTestClaims, false);
    for (std::size_t i = 0; i < before; ++i) gated[i] = true;
    for (std::size_t i = 0; i < after; ++i) gated[kBeforeClaims + i] = true;
    const std::vector<bool> none(kTestClaims, false);
    auto q = spread(thirtieths_for(row.question), none);
    auto e = spread(thirtieths_for(row.evidence), gated, 3);
    auto j = spread(thirtieths_for(row.justification), none);
    Submission sub;
    for (std::size_t i = 0; i < kTestClaims; ++i) {
      const auto& c = task.claims[i];
      SubmissionRecord r;
      r.claim_id = c.id;
      r.verdict = gated[i] ? Verdict::Supported : Verdict::Refuted;
      for (std::size_t k = 0; k < q[i]; ++k) r.questions.push_back(c.gold_qas[k].question);
      for (std::size_t k = 0; k < e[i]; ++k) r.evidence.push_back(c.gold_qas[k].answer);
      std::vector<std::string> sentences;
      for (std::size_t k = 0; k < j[i]; ++k) sentences.push_back(fmt::format("Reason {} on claim {}.", k + 1, i));
      r.justification = text::join(sentences, " ");
      sub.records.push_back(std::move(r));
    }
    task.submissions.emplace_back(row.team, std::move(sub));
  }
  return task;
}

}  // namespace support
