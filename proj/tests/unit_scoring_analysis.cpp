#include <gtest/gtest.h>

#include <random>

#include "averimatec/analysis/correlation.hpp"
#include "averimatec/analysis/ratings.hpp"
#include "averimatec/analysis/report.hpp"
#include "averimatec/analysis/sampling.hpp"
#include "support.hpp"

using namespace averimatec;
using namespace averimatec::scoring;

namespace {

EvidenceItem item(std::string text, std::vector<Base64Image> images = {}) {
  return {std::move(text), std::move(images), "https://e.org/" + std::to_string(images.size()), ""};
}

Base64Image image(std::string_view bytes) { return Base64Image{text::base64_encode(bytes)}; }

Claim claim_with(std::vector<EvidenceItem> gold, Verdict v = Verdict::Refuted) {
  Claim c;
  c.id = "c";
  c.claim_date = Date{2024, 5, 1};
  c.gold_verdict = v;
  for (std::size_t i = 0; i < gold.size(); ++i) c.gold_qas.push_back({"Question " + std::to_string(i) + "?", gold[i]});
  c.justification = "The photo is old. It was taken in 2019.";
  return c;
}

}  // namespace

// normalization -----------------------------------------------------------------

TEST(Normalize, TruncationRenumbersSurvivingPlaceholders) {
  EvidenceItem ev{"[IMG_1] a b c [IMG_2] d", {image("one"), image("two")}, "u", ""};
  auto cut = truncate_evidence(ev, 3);
  EXPECT_EQ(cut.text, "[IMG_1] a b");
  ASSERT_EQ(cut.images.size(), 1u);
  EXPECT_EQ(cut.images[0], image("one"));
  auto keep = truncate_evidence(ev, 100);
  EXPECT_EQ(keep, ev);
}

TEST(Normalize, IdempotentOnRandomSubmissions) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    Submission sub;
    SubmissionRecord r;
    r.claim_id = "c";
    for (std::size_t i = 0, n = rng() % 15; i < n; ++i) {
      std::string body;
      std::vector<Base64Image> imgs;
      for (std::size_t w = 0, len = rng() % 2000; w < len; ++w) {
        if (rng() % 400 == 0) {
          imgs.push_back(image(std::to_string(w)));
          body += text::placeholder(imgs.size()) + " ";
        } else {
          body += "w ";
        }
      }
      r.evidence.push_back({body, imgs, "u", ""});
    }
    sub.records.push_back(r);
    auto once = normalize_submission(sub);
    EXPECT_EQ(normalize_submission(once), once);
    EXPECT_LE(once.records[0].evidence.size(), 10u);
    for (const auto& ev : once.records[0].evidence) {
      EXPECT_LE(text::count_tokens(ev.text), 1500u);
      EXPECT_TRUE(evidence_problems(ev).empty());
    }
  }
}

// judges ------------------------------------------------------------------------

TEST(Judge, MockCoverageUsesWordBoundaries) {
  MockJudge j;
  auto cov = j.coverage({"The bridge is old.", "cat", ""}, {"the BRIDGE is old", "concatenate"});
  ASSERT_EQ(cov.size(), 3u);
  EXPECT_TRUE(cov[0].covered);
  EXPECT_EQ(cov[0].matched, 0u);
  EXPECT_FALSE(cov[1].covered);
  EXPECT_FALSE(cov[2].covered);
  EXPECT_EQ(j.image_similarity(image("a"), image("a")), 10);
  EXPECT_EQ(j.image_similarity(image("a"), image("b")), 0);
  j.set_similarity(image("a"), image("b"), 6);
  EXPECT_EQ(j.image_similarity(image("b"), image("a")), 6);
}

TEST(Judge, CachingJudgeMemoizesAndPersists) {
  auto dir = support::temp_dir("judge-cache");
  MockJudge inner;
  {
    CachingJudge cache(inner, dir);
    cache.coverage({"a"}, {"a b"});
    cache.coverage({"a"}, {"a b"});
    cache.image_similarity(image("x"), image("x"));
    EXPECT_EQ(cache.misses(), 2u);
    EXPECT_EQ(cache.hits(), 1u);
  }
  CachingJudge reopened(inner, dir);
  auto cov = reopened.coverage({"a"}, {"a b"});
  EXPECT_TRUE(cov[0].covered);
  EXPECT_EQ(reopened.misses(), 0u);
  fs::remove_all(dir);
}

// metrics -----------------------------------------------------------------------

TEST(Metrics, GatedScoreTruthTable) {
  static_assert(gated_score(true, 0.3) == 1.0);
  static_assert(gated_score(true, 0.29) == 0.0);
  static_assert(gated_score(false, 1.0) == 0.0);
  static_assert(gated_score(true, 0.0, 0.0) == 1.0);
  EXPECT_EQ(kDefaultTau, 0.3);
}

TEST(Metrics, EvidenceRecallCountsCoveredItems) {
  MockJudge j;
  std::vector<EvidenceItem> gt = {item("The bridge photo is from 2019"), item("Floods hit Lagos in 2019"),
                                  item("No damage was reported"), item("The post went viral")};
  auto r = evidence_recall(gt, {item("the bridge photo is from 2019 says AFP"), item("floods hit Lagos in 2019")}, j);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_FALSE(r.vacuous);
  EXPECT_EQ(evidence_recall(gt, {}, j).recall, 0.0);
  auto vacuous = evidence_recall({}, {item("x")}, j);
  EXPECT_EQ(vacuous.recall, 1.0);
  EXPECT_TRUE(vacuous.vacuous);
}

TEST(Metrics, ImageItemsNeedASimilarImage) {
  MockJudge j;
  std::vector<EvidenceItem> gt = {item("Original [IMG_1] from 2019", {image("gt")})};
  j.set_similarity(image("gt"), image("close"), 9);
  j.set_similarity(image("gt"), image("far"), 3);
  EXPECT_EQ(evidence_recall(gt, {item("Original [IMG_1] from 2019", {image("close")})}, j).recall, 1.0);
  EXPECT_EQ(evidence_recall(gt, {item("Original [IMG_1] from 2019", {image("far")})}, j).recall, 0.0);
  EXPECT_EQ(evidence_recall(gt, {item("Original from 2019")}, j).recall, 0.0);
  // The best of several predicted images decides.
  auto both = evidence_recall(gt, {item("Original [IMG_1] [IMG_2] from 2019", {image("far"), image("close")})}, j);
  EXPECT_EQ(both.recall, 1.0);
  EXPECT_EQ(both.items[0].visual_score, 9);
}

TEST(Metrics, QuestionAndJustificationScores) {
  MockJudge j;
  EXPECT_DOUBLE_EQ(question_score({"Where was it taken?", "When?"}, {"where was it taken"}, j), 0.5);
  EXPECT_EQ(question_score({}, {"x"}, j), 1.0);
  EXPECT_EQ(question_score({"x"}, {}, j), 0.0);
  EXPECT_EQ(split_sentences("One. Two? Three!  Four"), (std::vector<std::string>{"One.", "Two?", "Three!", "Four"}));
  EXPECT_EQ(split_sentences("Version 2.5 is out."), (std::vector<std::string>{"Version 2.5 is out."}));
  EXPECT_DOUBLE_EQ(justification_score("The photo is old. It was taken in 2019.", "It was taken in 2019.", j), 0.5);
  EXPECT_EQ(justification_score("", "x", j), 1.0);
}

TEST(Metrics, ScoreClaimCombinesTheParts) {
  MockJudge j;
  auto c = claim_with({item("The photo is from 2019"), item("It shows Lagos"), item("Nothing was destroyed")});
  SubmissionRecord r;
  r.claim_id = "c";
  r.verdict = Verdict::Refuted;
  r.questions = {"Question 0?"};
  r.evidence = {item("the photo is from 2019")};
  r.justification = "The photo is old.";
  auto s = score_claim(c, &r, j);
  EXPECT_NEAR(s.evidence_recall, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(s.averimatec, 1.0);
  EXPECT_NEAR(s.question_score, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(s.justification_score, 0.5);
  EXPECT_EQ(score_claim(c, &r, j, 0.5).averimatec, 0.0);
  r.verdict = Verdict::Supported;
  EXPECT_EQ(score_claim(c, &r, j).averimatec, 0.0);
  auto missing = score_claim(c, nullptr, j);
  EXPECT_FALSE(missing.submitted);
  EXPECT_EQ(missing.averimatec, 0.0);
}

TEST(Metrics, JudgeFailureCountsAsZero) {
  class Failing final : public JudgeAdapter {
   public:
    std::string name() const override { return "failing"; }
    std::vector<Coverage> coverage(const std::vector<std::string>&, const std::vector<std::string>&) override {
      throw AdapterError("judge down");
    }
    int image_similarity(const Base64Image&, const Base64Image&) override { return 0; }
  } failing;
  auto c = claim_with({item("x")});
  SubmissionRecord r;
  r.claim_id = "c";
  r.verdict = Verdict::Refuted;
  r.evidence = {item("x")};
  Submission sub{{r}};
  auto rep = averimatec_score({c}, sub, failing);
  ASSERT_EQ(rep.unscored().size(), 1u);
  EXPECT_EQ(rep.aggregates.averimatec, 0.0);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Metrics, ReportCoversEveryGoldClaim) {
  MockJudge j;
  auto a = claim_with({item("x")});
  auto b = a;
  b.id = "b";
  SubmissionRecord r;
  r.claim_id = "c";
  r.verdict = Verdict::Refuted;
  r.evidence = {item("x")};
  SubmissionRecord stray = r;
  stray.claim_id = "zzz";
  auto rep = averimatec_score({a, b}, Submission{{r, stray}}, j, {.tau = 0.3, .workers = 2});
  ASSERT_EQ(rep.claims.size(), 2u);
  EXPECT_EQ(rep.claims[0].claim_id, "b");
  EXPECT_EQ(rep.aggregates.averimatec, 0.5);
  EXPECT_EQ(rep.warnings.size(), 2u);
}

TEST(Metrics, ScoreSubmissionKeepsRawEvidenceCounts) {
  MockJudge j;
  auto c = claim_with({item("x")});
  SubmissionRecord r;
  r.claim_id = "c";
  for (int i = 0; i < 12; ++i) r.evidence.push_back(item("x"));
  auto rep = score_submission({c}, Submission{{r}}, j);
  EXPECT_EQ(rep.claims[0].evidence_count, 12u);
  EXPECT_EQ(breakdown(rep, {c}).avg_evidence, 12.0);
}

// reports -----------------------------------------------------------------------

TEST(Report, BreakdownCells) {
  auto claims = load_claims(support::fixture("dates/claims.jsonl"), Split::Dev);
  ScoreReport rep;
  for (const auto& c : claims) {
    ClaimScore s;
    s.claim_id = c.id;
    s.averimatec = c.claim_date < Date{2025, 1, 1} ? 0.0 : 1.0;
    rep.claims.push_back(s);
  }
  auto b = breakdown(rep, claims);
  ASSERT_EQ(b.by_cutoff.size(), 2u);
  EXPECT_EQ(b.by_cutoff[0], (Cell{"before 2025-01-01", 330, 0.0}));
  EXPECT_EQ(b.by_cutoff[1], (Cell{"from 2025-01-01", 22, 1.0}));
  ASSERT_GE(b.by_claim_type.size(), 4u);
  EXPECT_EQ(b.by_claim_type[0].label, "EP");
  EXPECT_EQ(b.by_claim_type[3].label, "Nm");
  ASSERT_EQ(b.by_verdict.size(), 4u);
  std::size_t n = 0;
  for (const auto& c : b.by_verdict) n += c.n;
  EXPECT_EQ(n, claims.size());
  auto shifted = breakdown(rep, claims, Date{2030, 1, 1});
  EXPECT_EQ(shifted.by_cutoff[1].n, 0u);
  EXPECT_FALSE(shifted.by_cutoff[1].mean);
  EXPECT_EQ(format_mean(shifted.by_cutoff[1].mean), "n/a");
}

TEST(Report, LeaderboardOrdering) {
  std::vector<LeaderboardRow> rows = {
      {"b", 0, 0.2, 0, 0.5}, {"a", 0, 0.2, 0, 0.5}, {"c", 0, 0.9, 0, 0.1}, {"d", 0, 0.3, 0, 0.5}};
  auto board = leaderboard(rows);
  EXPECT_EQ(board[0].team, "d");
  EXPECT_EQ(board[1].team, "a");
  EXPECT_EQ(board[2].team, "b");
  EXPECT_EQ(board[3].team, "c");
  EXPECT_NE(render_leaderboard(board).find("d"), std::string::npos);
  EXPECT_TRUE(leaderboard({}).empty());
}

TEST(Report, JsonCarriesPerClaimScores) {
  auto task = support::synthesize_published();
  MockJudge j;
  auto rep = averimatec_score(task.claims, task.submissions.front().second, j);
  auto b = breakdown(rep, task.claims);
  auto out = to_json_report(rep, &b);
  EXPECT_EQ(out["claims"].size(), 352u);
  EXPECT_TRUE(out["claims"][0].contains("averimatec"));
  EXPECT_TRUE(out["claims"][0].contains("evidence_recall"));
  EXPECT_NEAR(out["aggregates"]["averimatec"].get<double>(), rep.aggregates.averimatec, 1e-15);
  EXPECT_NE(render_report("HUMANE", rep, b).find("before 2025-01-01"), std::string::npos);
}

TEST(Report, PublishedReplayEveryColumn) {
  auto task = support::synthesize_published();
  MockJudge j;
  for (const auto& [team, sub] : task.submissions) {
    auto rep = averimatec_score(task.claims, sub, j);
    const auto& want = *std::find_if(support::published_rows().begin(), support::published_rows().end(),
                                     [&](const auto& p) { return p.team == team; });
    EXPECT_EQ(support::rounded(rep.aggregates.question), support::rounded(want.question)) << team;
    EXPECT_EQ(support::rounded(rep.aggregates.evidence), support::rounded(want.evidence)) << team;
    EXPECT_EQ(support::rounded(rep.aggregates.justification), support::rounded(want.justification)) << team;
    EXPECT_EQ(support::rounded(rep.aggregates.averimatec), support::rounded(want.averimatec)) << team;
  }
}

// correlation -------------------------------------------------------------------

TEST(Correlation, AverageRanksMidRanksTies) {
  EXPECT_EQ(analysis::average_ranks({10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Correlation, DegenerateInputsAreUndefined) {
  EXPECT_FALSE(analysis::pearson({1, 1, 1}, {1, 2, 3}));
  EXPECT_FALSE(analysis::spearman({1, 2, 3}, {4, 4, 4}));
  EXPECT_THROW(analysis::pearson({1}, {2}), Error);
  EXPECT_THROW(analysis::spearman({1, 2}, {1, 2, 3}), Error);
  auto c = analysis::correlate({1, 2}, {1, 2, 3});
  EXPECT_FALSE(c.rho);
}

TEST(Correlation, KnownValues) {
  EXPECT_NEAR(*analysis::pearson({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, 1e-15);
  EXPECT_NEAR(*analysis::spearman({1, 2, 3, 4}, {1, 8, 27, 64}), 1.0, 1e-15);
  EXPECT_NEAR(*analysis::spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
}

TEST(Correlation, FixtureMatchesTheScipyOracle) {
  auto rep = analysis::correlation_report(support::fixture_ratings(), support::fixture_sample_scores());
  auto oracle = support::fixture_oracle();
  for (const auto& [group, slices] : oracle.items()) {
    if (group != "hh" && group != "hm") continue;
    for (const auto& [label, dims] : slices.items()) {
      const auto* s = rep.slice(label);
      ASSERT_NE(s, nullptr) << label;
      for (auto d : analysis::kDimensions) {
        const auto i = static_cast<std::size_t>(d);
        const auto& c = group == "hh" ? s->human_human[i] : s->human_model[i];
        const auto& want = dims.at(std::string(analysis::to_string(d)));
        ASSERT_TRUE(c.rho && c.r) << group << " " << label;
        EXPECT_NEAR(*c.rho, want.at("rho").get<double>(), 1e-12) << group << " " << label;
        EXPECT_NEAR(*c.r, want.at("r").get<double>(), 1e-12) << group << " " << label;
      }
    }
  }
  for (const auto& m : rep.team_means) {
    EXPECT_NEAR(*m.coverage, oracle["team_mean_coverage"][m.team].get<double>(), 1e-12) << m.team;
  }
  EXPECT_NEAR(*rep.overall.human_model[0].r, oracle["scipy_pearsonr_hm_all_coverage"].get<double>(), 1e-12);
  EXPECT_EQ(analysis::format_coefficient(rep.overall.human_model[0].rho), "0.310");
  EXPECT_NE(analysis::render_correlations(rep).find("excluding HUMANE"), std::string::npos);
  EXPECT_TRUE(analysis::to_json(rep).contains("slices"));
}

TEST(Correlation, SingleRatingsAreLeftOutOfHumanHuman) {
  std::vector<analysis::HumanRating> ratings = {
      {"s1", "c1", "T", "A", 1, 1, ""}, {"s1", "c1", "T", "B", 2, 2, ""}, {"s2", "c2", "T", "A", 3, 3, ""},
      {"s2", "c2", "T", "B", 4, 5, ""}, {"s3", "c3", "T", "A", 5, 5, ""}};
  std::map<std::string, double> evidence{{"s1", 0.0}, {"s2", 0.5}, {"s3", 1.0}};
  auto rep = analysis::correlation_report(ratings, evidence);
  EXPECT_EQ(rep.overall.human_human[0].n, 2u);
  EXPECT_EQ(rep.overall.human_model[0].n, 5u);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(rep.slice("lowest")->human_model[0].n, 2u);
  EXPECT_EQ(rep.slice("highest")->human_model[0].n, 1u);
}

// ratings -----------------------------------------------------------------------

TEST(Ratings, UpsertIsIdempotent) {
  auto dir = support::temp_dir("ratings");
  const auto path = dir / "ratings.jsonl";
  analysis::HumanRating r{"s1", "c1", "T", "A", 3, 4, "2025-01-01T00:00:00Z"};
  using U = analysis::RatingLog::Upsert;
  {
    analysis::RatingLog log(path);
    EXPECT_EQ(log.upsert(r), U::Inserted);
    auto later = r;
    later.timestamp = "2025-01-02T00:00:00Z";
    EXPECT_EQ(log.upsert(later), U::Unchanged);
    auto changed = r;
    changed.coverage = 5;
    EXPECT_EQ(log.upsert(changed), U::Updated);
    auto bad = r;
    bad.relevance = 6;
    EXPECT_THROW(log.upsert(bad), Error);
  }
  analysis::RatingLog reopened(path);
  ASSERT_EQ(reopened.ratings().size(), 1u);
  EXPECT_EQ(reopened.ratings()[0].coverage, 5);
  std::ifstream in(path);
  EXPECT_EQ(analysis::read_ratings(in).size(), 2u);
  EXPECT_FALSE(analysis::rating_errors({"", "c", "T", "A", -1, 0, ""}).empty());
  fs::remove_all(dir);
}

// sampling ----------------------------------------------------------------------

namespace {

std::map<std::string, std::vector<analysis::AutoScore>> five_teams(std::size_t claims = 100) {
  std::map<std::string, std::vector<analysis::AutoScore>> scores;
  std::mt19937_64 rng(2);
  for (auto team : {"HUMANE", "ADA-AGGR", "AIC CTU", "XxP", "REVEAL"}) {
    for (std::size_t i = 0; i < claims; ++i) {
      scores[team].push_back({fmt::format("c{:03}", i), static_cast<double>(rng() % 11) / 10.0, std::nullopt});
    }
  }
  return scores;
}

}  // namespace

TEST(Sampling, PlanShape) {
  auto plan = analysis::build_sampling_plan(five_teams(), {.seed = 7});
  EXPECT_EQ(plan.samples.size(), 125u);
  EXPECT_EQ(plan.task_count(), 250u);
  std::map<std::string, std::size_t> per_team, load;
  std::set<std::string> ids;
  for (const auto& s : plan.samples) {
    ++per_team[s.team];
    EXPECT_TRUE(ids.insert(s.sample_id).second);
    EXPECT_EQ(s.sample_id.find(s.team), std::string::npos);
    ASSERT_EQ(s.annotators.size(), 2u);
    EXPECT_NE(s.annotators[0], s.annotators[1]);
    for (const auto& a : s.annotators) {
      EXPECT_NE(a, s.team);
      ++load[a];
    }
    EXPECT_EQ(s.stratum, analysis::stratum_of(s.auto_score, 5));
  }
  for (const auto& [team, n] : per_team) EXPECT_EQ(n, 25u) << team;
  for (const auto& [a, n] : load) EXPECT_EQ(n, 50u) << a;
  EXPECT_EQ(plan.tasks_for("HUMANE").size(), 50u);
  EXPECT_NE(plan.find(plan.samples[0].sample_id), nullptr);
  EXPECT_EQ(plan.find("nope"), nullptr);
}

TEST(Sampling, StrataAreEvenWhenAvailable) {
  auto plan = analysis::build_sampling_plan(five_teams(), {.seed = 7});
  std::map<std::pair<std::string, std::size_t>, std::size_t> cells;
  for (const auto& s : plan.samples) ++cells[{s.team, s.stratum}];
  for (const auto& [k, n] : cells) EXPECT_EQ(n, 5u) << k.first << " " << k.second;
  EXPECT_TRUE(plan.warnings.empty());
}

TEST(Sampling, DeterministicPerSeed) {
  auto a = analysis::build_sampling_plan(five_teams(), {.seed = 1});
  auto b = analysis::build_sampling_plan(five_teams(), {.seed = 1});
  auto c = analysis::build_sampling_plan(five_teams(), {.seed = 2});
  auto ids = [](const analysis::SamplingPlan& p) {
    std::vector<std::string> out;
    for (const auto& s : p.samples) out.push_back(s.team + "/" + s.claim_id + "/" + s.annotators[0]);
    return out;
  };
  EXPECT_EQ(ids(a), ids(b));
  EXPECT_NE(ids(a), ids(c));
}

TEST(Sampling, SparseStrataBorrowWithAWarning) {
  auto scores = five_teams();
  for (auto& s : scores["XxP"]) s.score = s.score > 0.5 ? 1.0 : 0.0;
  auto plan = analysis::build_sampling_plan(scores, {.seed = 3});
  std::size_t xxp = 0;
  for (const auto& s : plan.samples) xxp += s.team == "XxP";
  EXPECT_EQ(xxp, 25u);
  EXPECT_FALSE(plan.warnings.empty());
}

TEST(Sampling, ClaimPoolAndErrors) {
  std::set<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.insert(fmt::format("c{:03}", i));
  auto plan = analysis::build_sampling_plan(five_teams(), {.seed = 4, .claim_pool = pool});
  for (const auto& c : plan.claims()) EXPECT_TRUE(pool.contains(c));
  EXPECT_THROW(analysis::build_sampling_plan(five_teams(10)), Error);
  std::map<std::string, std::vector<analysis::AutoScore>> two = {{"A", five_teams()["HUMANE"]},
                                                                  {"B", five_teams()["XxP"]}};
  EXPECT_THROW(analysis::build_sampling_plan(two), Error);
}
