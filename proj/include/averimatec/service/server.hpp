#pragma once

#include <httplib.h>

#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "averimatec/service/workspace.hpp"

namespace averimatec::service {

/// Asynchronous scoring jobs; at most one live job per submission.
class JobManager {
 public:
  enum class Status { Queued, Running, Done, Failed };

  struct Job {
    std::string id;
    std::string submission_id;
    Status status = Status::Queued;
    std::string error;
  };

  using Runner = std::function<void(const std::string& submission_id)>;

  explicit JobManager(Runner runner) : runner_(std::move(runner)) {}
  ~JobManager() { wait(); }

  /// Returns the live job for the submission, or starts a new one.
  Job start(const std::string& submission_id) {
    std::lock_guard lock(mu_);
    for (const auto& [id, j] : jobs_) {
      if (j.submission_id == submission_id && (j.status == Status::Queued || j.status == Status::Running)) return j;
    }
    Job job{"job-" + std::to_string(++counter_), submission_id, Status::Queued, ""};
    jobs_[job.id] = job;
    threads_.emplace_back([this, id = job.id, submission_id] {
      set(id, Status::Running, "");
      try {
        runner_(submission_id);
        set(id, Status::Done, "");
      } catch (const std::exception& e) {
        set(id, Status::Failed, e.what());
      }
    });
    return job;
  }

  std::optional<Job> find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    return it == jobs_.end() ? std::nullopt : std::optional<Job>(it->second);
  }

  /// Blocks until every started job has finished.
  void wait() {
    std::list<std::jthread> done;
    {
      std::lock_guard lock(mu_);
      done.swap(threads_);
    }
    done.clear();
  }

  static std::string_view to_string(Status s) {
    switch (s) {
      case Status::Queued: return "queued";
      case Status::Running: return "running";
      case Status::Done: return "done";
      case Status::Failed: return "failed";
    }
    return "failed";
  }

 private:
  void set(const std::string& id, Status s, std::string error) {
    std::lock_guard lock(mu_);
    jobs_[id].status = s;
    jobs_[id].error = std::move(error);
  }

  Runner runner_;
  mutable std::mutex mu_;
  std::map<std::string, Job> jobs_;
  std::list<std::jthread> threads_;
  std::size_t counter_ = 0;
};

inline json to_json(const JobManager::Job& j) {
  json out{{"job_id", j.id}, {"submission_id", j.submission_id}, {"status", JobManager::to_string(j.status)}};
  if (!j.error.empty()) out["error"] = j.error;
  return out;
}

/// HTTP+JSON API over a Workspace.
///
///   POST /submissions?team=T          body: prediction JSONL
///        200 {id, team, records, warnings}
///   POST /score/{submission_id}       202 {job_id, submission_id, status}
///   GET  /jobs/{job_id}               200 {job_id, submission_id, status, error?}
///   GET  /leaderboard                 200 [{rank, team, question_score, evidence_score,
///                                            justification_score, averimatec_score}]
///   GET  /reports/{id}                200 score report
///   GET  /annotation/tasks?annotator=A
///        200 [{sample_id, claim, predicted_evidence, reference_evidence, rating|null}]
///   POST /annotation/ratings          body {sample_id, annotator, coverage, relevance}
///        200 {status: inserted|updated|unchanged}
///   GET  /annotation/correlations     200 correlation report
///
/// Invalid bodies give 400 {error, fields: {name: problem}}; unknown ids give 404 {error}.
class Server {
 public:
  Server(Workspace& ws, scoring::JudgeAdapter& judge, scoring::ScoringOptions opts = {})
      : ws_(ws), judge_(judge), opts_(opts), jobs_([this](const std::string& id) {
          std::lock_guard lock(score_mu_);
          ws_.score(id, judge_, opts_);
        }) {
    routes();
  }

  httplib::Server& http() { return http_; }
  JobManager& jobs() { return jobs_; }

  /// Binds and serves until stop(); returns false when the port cannot be bound.
  bool listen(const std::string& host, int port) { return http_.listen(host, port); }
  int bind_any_port(const std::string& host) { return http_.bind_to_any_port(host); }
  bool listen_after_bind() { return http_.listen_after_bind(); }
  void stop() { http_.stop(); }

 private:
  template <typename Fn>
  auto guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const FieldErrors& e) {
        reply(res, 400, {{"error", "invalid request"}, {"fields", e.fields()}});
      } catch (const NotFound& e) {
        reply(res, 404, {{"error", e.what()}});
      } catch (const json::exception& e) {
        reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}, {"fields", json::object()}});
      } catch (const ValidationError& e) {
        reply(res, 400, {{"error", e.what()}, {"fields", json::object()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    };
  }

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void routes() {
    http_.Post("/submissions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::string team = req.get_param_value("team");
                 if (team.empty()) team = req.get_header_value("X-Team");
                 reply(res, 200, to_json(ws_.add_submission(team, req.body)));
               }));
    http_.Post(R"(/score/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 ws_.submission_info(id);
                 reply(res, 202, to_json(jobs_.start(id)));
               }));
    http_.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                auto job = jobs_.find(id);
                if (!job) throw NotFound("unknown job " + id);
                reply(res, 200, to_json(*job));
              }));
    http_.Get("/leaderboard", guarded([this](const httplib::Request&, httplib::Response& res) {
                json rows = json::array();
                std::size_t rank = 0;
                for (const auto& r : ws_.leaderboard()) {
                  rows.push_back({{"rank", ++rank},
                                  {"team", r.team},
                                  {"question_score", r.question},
                                  {"evidence_score", r.evidence},
                                  {"justification_score", r.justification},
                                  {"averimatec_score", r.averimatec}});
                }
                reply(res, 200, rows);
              }));
    http_.Get(R"(/reports/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, ws_.report(req.matches[1]));
              }));
    http_.Get("/annotation/tasks", guarded([this](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, ws_.tasks(req.get_param_value("annotator")));
              }));
    http_.Post("/annotation/ratings", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::lock_guard lock(rate_mu_);
                 auto status = ws_.rate(json::parse(req.body));
                 const char* label = status == analysis::RatingLog::Upsert::Inserted  ? "inserted"
                                     : status == analysis::RatingLog::Upsert::Updated ? "updated"
                                                                                      : "unchanged";
                 reply(res, 200, {{"status", label}});
               }));
    http_.Get("/annotation/correlations", guarded([this](const httplib::Request&, httplib::Response& res) {
                reply(res, 200, analysis::to_json(ws_.correlations()));
              }));
  }

  Workspace& ws_;
  scoring::JudgeAdapter& judge_;
  scoring::ScoringOptions opts_;
  std::mutex score_mu_;
  std::mutex rate_mu_;
  httplib::Server http_;
  JobManager jobs_;
};

}  // namespace averimatec::service
