#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "averimatec/analysis/report.hpp"
#include "averimatec/analysis/sampling.hpp"
#include "averimatec/core/io.hpp"
#include "averimatec/core/validation.hpp"
#include "averimatec/scoring/report.hpp"

namespace averimatec::service {

/// Field name to problem, returned to clients as a 400 body.
class FieldErrors : public ValidationError {
 public:
  explicit FieldErrors(std::map<std::string, std::string> fields)
      : ValidationError(describe(fields)), fields_(std::move(fields)) {}
  FieldErrors(const std::string& field, const std::string& problem)
      : FieldErrors(std::map<std::string, std::string>{{field, problem}}) {}

  const std::map<std::string, std::string>& fields() const { return fields_; }

 private:
  static std::string describe(const std::map<std::string, std::string>& f) {
    std::string out;
    for (const auto& [k, v] : f) out += (out.empty() ? "" : "; ") + k + ": " + v;
    return out;
  }
  std::map<std::string, std::string> fields_;
};

/// Unknown submission, report or sample id.
class NotFound : public Error {
 public:
  using Error::Error;
};

struct SubmissionInfo {
  std::string id;
  std::string team;
  std::size_t records = 0;
  std::vector<std::string> warnings;
};

inline json to_json(const SubmissionInfo& s) {
  return {{"id", s.id}, {"team", s.team}, {"records", s.records}, {"warnings", s.warnings}};
}

/// All service state under one directory:
///
///   claims.jsonl                 gold claims that submissions are scored against
///   train.jsonl                  optional few-shot pool
///   stores/<claim_id>/           knowledge stores
///   submissions/<id>.jsonl       uploaded predictions, with <id>.meta.json
///   reports/<id>.json            score reports
///   annotation/plan.json         human-evaluation sampling plan
///   annotation/ratings.jsonl     append-only rating log
///
/// The CLI and the HTTP service both go through this class.
class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  fs::path claims_path() const { return root_ / "claims.jsonl"; }
  fs::path stores_dir() const { return root_ / "stores"; }
  fs::path submissions_dir() const { return root_ / "submissions"; }
  fs::path reports_dir() const { return root_ / "reports"; }
  fs::path plan_path() const { return root_ / "annotation" / "plan.json"; }
  fs::path ratings_path() const { return root_ / "annotation" / "ratings.jsonl"; }

  const std::vector<Claim>& claims() {
    std::lock_guard lock(mu_);
    if (!claims_) claims_ = load_claims(claims_path(), Split::Dev);
    return *claims_;
  }

  /// Stores the submission and returns its id with validation warnings. Nothing is
  /// truncated at upload; malformed bodies throw FieldErrors.
  SubmissionInfo add_submission(const std::string& team, std::string_view body) {
    std::map<std::string, std::string> errs;
    if (text::trim(team).empty()) errs["team"] = "required";
    else if (team.find_first_of("/\\\n") != std::string::npos) errs["team"] = "must not contain / \\ or newlines";
    Submission sub;
    try {
      sub = parse_submission(body);
    } catch (const Error& e) {
      errs["predictions"] = e.what();
    }
    if (!errs.empty()) throw FieldErrors(errs);
    auto report = validate_submission(sub, claims());
    if (!report.ok()) {
      std::map<std::string, std::string> fields;
      for (const auto& i : report.issues) {
        if (i.severity == ValidationIssue::Severity::Error) fields["predictions." + i.claim_id] = i.message;
      }
      throw FieldErrors(fields);
    }
    SubmissionInfo info;
    info.team = team;
    info.records = sub.records.size();
    info.warnings = report.messages();
    info.id = slug(team) + "-" + text::sha256_hex(team + "\n" + serialize_submission(sub)).substr(0, 10);
    write_file(submissions_dir() / (info.id + ".jsonl"), serialize_submission(sub));
    write_file(submissions_dir() / (info.id + ".meta.json"), to_json(info).dump(2));
    return info;
  }

  SubmissionInfo submission_info(const std::string& id) const {
    auto p = submissions_dir() / (safe_id(id) + ".meta.json");
    if (!fs::exists(p)) throw NotFound("unknown submission " + id);
    auto j = json::parse(read_file(p));
    return {j.at("id"), j.at("team"), j.at("records"), j.at("warnings").get<std::vector<std::string>>()};
  }

  Submission submission(const std::string& id) const {
    auto p = submissions_dir() / (safe_id(id) + ".jsonl");
    if (!fs::exists(p)) throw NotFound("unknown submission " + id);
    return load_submission(p);
  }

  /// Scores a stored submission and writes reports/<id>.json.
  json score(const std::string& id, scoring::JudgeAdapter& judge, const scoring::ScoringOptions& opts = {}) {
    auto info = submission_info(id);
    const auto& gold = claims();
    auto report = scoring::score_submission(gold, submission(id), judge, opts);
    auto b = scoring::breakdown(report, gold);
    auto j = scoring::to_json_report(report, &b);
    j["id"] = id;
    j["team"] = info.team;
    write_file(reports_dir() / (id + ".json"), j.dump(2));
    return j;
  }

  json report(const std::string& id) const {
    auto p = reports_dir() / (safe_id(id) + ".json");
    if (!fs::exists(p)) throw NotFound("unknown report " + id);
    return json::parse(read_file(p));
  }

  std::vector<json> reports() const {
    std::vector<json> out;
    if (!fs::exists(reports_dir())) return out;
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(reports_dir())) {
      if (e.path().extension() == ".json") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) out.push_back(json::parse(read_file(p)));
    return out;
  }

  /// One row per stored report, ordered by the leaderboard rule.
  std::vector<scoring::LeaderboardRow> leaderboard() const { return leaderboard_from(reports()); }

  static std::vector<scoring::LeaderboardRow> leaderboard_from(const std::vector<json>& reports) {
    std::vector<scoring::LeaderboardRow> rows;
    for (const auto& r : reports) {
      const auto& a = r.at("aggregates");
      rows.push_back({r.value("team", r.value("id", "")), a.at("question"), a.at("evidence"), a.at("justification"),
                      a.at("averimatec")});
    }
    return scoring::leaderboard(std::move(rows));
  }

  /// The report that stands for each team: the one with the highest AVerImaTeC score.
  std::map<std::string, json> team_reports() const {
    std::map<std::string, json> best;
    for (auto& r : reports()) {
      auto team = r.value("team", r.value("id", ""));
      auto it = best.find(team);
      if (it == best.end() || r.at("aggregates").at("averimatec").get<double>() >
                                  it->second.at("aggregates").at("averimatec").get<double>()) {
        best[team] = std::move(r);
      }
    }
    return best;
  }

  /// Per-team automatic scores of scored, submitted claims.
  std::map<std::string, std::vector<analysis::AutoScore>> auto_scores() const {
    std::map<std::string, std::vector<analysis::AutoScore>> out;
    for (const auto& [team, r] : team_reports()) {
      for (const auto& c : r.at("claims")) {
        if (c.value("submitted", true) && c.value("scored", true)) {
          analysis::AutoScore a{c.at("claim_id"), c.at("evidence_recall"), std::nullopt};
          if (auto v = c.find("averimatec"); v != c.end() && v->is_number()) a.averimatec = v->get<double>();
          out[team].push_back(std::move(a));
        }
      }
    }
    return out;
  }

  analysis::SamplingPlan make_plan(const analysis::SamplingOptions& opts) {
    auto plan = analysis::build_sampling_plan(auto_scores(), opts);
    write_file(plan_path(), plan_json(plan).dump(2));
    std::lock_guard lock(mu_);
    plan_.reset();
    return plan;
  }

  const analysis::SamplingPlan& plan() {
    std::lock_guard lock(mu_);
    if (!plan_) {
      if (!fs::exists(plan_path())) throw NotFound("no annotation plan; run `annotate plan` first");
      plan_ = plan_from_json(json::parse(read_file(plan_path())));
    }
    return *plan_;
  }

  /// Blind task views for one annotator: claim, predicted evidence as the scorer sees it,
  /// reference evidence and any rating already given. Team and automatic score are withheld.
  json tasks(const std::string& annotator) {
    if (text::trim(annotator).empty()) throw FieldErrors("annotator", "required");
    const auto& p = plan();
    std::map<std::pair<std::string, std::string>, analysis::HumanRating> given;
    for (auto& r : ratings().ratings()) given[{r.sample_id, r.annotator}] = r;
    std::map<std::string, Submission> normalized;
    std::map<std::string, std::string> team_submission;
    for (const auto& [team, r] : team_reports()) team_submission[team] = r.value("id", "");
    json out = json::array();
    for (const auto* s : p.tasks_for(annotator)) {
      const Claim* claim = find_claim(s->claim_id);
      if (!claim) continue;
      if (!normalized.contains(s->team)) {
        auto id = team_submission[s->team];
        normalized[s->team] = id.empty() ? Submission{} : scoring::normalize_submission(submission(id));
      }
      json predicted = json::array(), reference = json::array();
      if (const auto* rec = normalized[s->team].find(s->claim_id)) {
        for (const auto& ev : rec->evidence) predicted.push_back(ev);
      }
      for (const auto& qa : claim->gold_qas) reference.push_back(qa);
      json task{{"sample_id", s->sample_id},
                {"claim",
                 {{"id", claim->id},
                  {"text", claim->text},
                  {"images", claim->images},
                  {"date", claim->claim_date.str()},
                  {"location", claim->location.value_or("")},
                  {"metadata", claim->metadata}}},
                {"predicted_evidence", predicted},
                {"reference_evidence", reference},
                {"rating", nullptr}};
      if (auto it = given.find({s->sample_id, annotator}); it != given.end()) {
        task["rating"] = {{"coverage", it->second.coverage}, {"relevance", it->second.relevance}};
      }
      out.push_back(std::move(task));
    }
    return out;
  }

  /// Records a rating for an assigned task; the team and claim come from the plan.
  analysis::RatingLog::Upsert rate(const json& body) {
    std::map<std::string, std::string> errs;
    auto str = [&](const char* k) -> std::string {
      auto it = body.find(k);
      if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
        errs[k] = "required string";
        return {};
      }
      return it->get<std::string>();
    };
    auto scale = [&](const char* k) -> int {
      auto it = body.find(k);
      if (it == body.end() || !it->is_number_integer() || it->get<int>() < 0 || it->get<int>() > 5) {
        errs[k] = "must be an integer in 0..5";
        return 0;
      }
      return it->get<int>();
    };
    if (!body.is_object()) throw FieldErrors("body", "must be a JSON object");
    analysis::HumanRating r;
    r.sample_id = str("sample_id");
    r.annotator = str("annotator");
    r.coverage = scale("coverage");
    r.relevance = scale("relevance");
    r.timestamp = body.value("timestamp", "");
    if (!errs.empty()) throw FieldErrors(errs);
    const auto* s = plan().find(r.sample_id);
    if (!s) throw NotFound("unknown sample " + r.sample_id);
    if (std::find(s->annotators.begin(), s->annotators.end(), r.annotator) == s->annotators.end()) {
      throw FieldErrors("annotator", "not assigned to sample " + r.sample_id);
    }
    r.claim_id = s->claim_id;
    r.team = s->team;
    return ratings().upsert(r);
  }

  analysis::RatingLog& ratings() {
    std::lock_guard lock(mu_);
    if (!ratings_) ratings_.emplace(ratings_path());
    return *ratings_;
  }

  /// Correlations of the collected ratings with the plan's automatic scores.
  analysis::CorrelationReport correlations() {
    std::map<std::string, analysis::SampleScore> scores;
    for (const auto& s : plan().samples) scores[s.sample_id] = {s.auto_score, s.auto_averimatec};
    return analysis::correlation_report(ratings().ratings(), scores);
  }

  static json plan_json(const analysis::SamplingPlan& plan) {
    json samples = json::array();
    for (const auto& s : plan.samples) {
      samples.push_back({{"sample_id", s.sample_id},
                         {"team", s.team},
                         {"claim_id", s.claim_id},
                         {"auto_score", s.auto_score},
                         {"auto_averimatec", s.auto_averimatec ? json(*s.auto_averimatec) : json(nullptr)},
                         {"stratum", s.stratum},
                         {"annotators", s.annotators}});
    }
    return {{"format_version", kFormatVersion}, {"samples", samples}, {"warnings", plan.warnings}};
  }

  static analysis::SamplingPlan plan_from_json(const json& j) {
    analysis::SamplingPlan plan;
    for (const auto& s : j.at("samples")) {
      analysis::Sample smp{s.at("sample_id"), s.at("team"), s.at("claim_id"), s.at("auto_score"), std::nullopt,
                           s.at("stratum"), s.at("annotators").get<std::vector<std::string>>()};
      if (auto v = s.find("auto_averimatec"); v != s.end() && v->is_number()) smp.auto_averimatec = v->get<double>();
      plan.samples.push_back(std::move(smp));
    }
    plan.warnings = j.value("warnings", std::vector<std::string>{});
    return plan;
  }

 private:
  static std::string slug(const std::string& team) {
    std::string out;
    for (unsigned char c : team) out.push_back(std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '-');
    return out;
  }

  /// Ids name files; anything that could leave the directory is unknown.
  static std::string safe_id(const std::string& id) {
    if (id.empty() || id.find_first_of("/\\") != std::string::npos || id == "." || id == "..") {
      throw NotFound("unknown id " + id);
    }
    return id;
  }

  const Claim* find_claim(const std::string& id) {
    for (const auto& c : claims()) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }

  fs::path root_;
  std::mutex mu_;
  std::optional<std::vector<Claim>> claims_;
  std::optional<analysis::SamplingPlan> plan_;
  std::optional<analysis::RatingLog> ratings_;
};

}  // namespace averimatec::service
