#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "averimatec/core/io.hpp"
#include "averimatec/pipeline/adapter.hpp"

namespace averimatec::pipeline {

/// One step of a claim's run: a model call, a retrieval, or both.
struct TraceEvent {
  std::string step;
  std::string task;
  std::string key;
  std::map<std::string, std::string> fields;
  std::string prompt;
  std::string output;
  std::string error;
  std::vector<std::string> retrieved;

  bool operator==(const TraceEvent&) const = default;
};

struct ClaimTrace {
  std::string claim_id;
  std::string adapter;
  std::string prompt_version;
  std::vector<TraceEvent> events;

  bool operator==(const ClaimTrace&) const = default;
};

inline void to_json(json& j, const TraceEvent& e) {
  j = json{{"step", e.step}, {"task", e.task}, {"key", e.key}, {"fields", e.fields}, {"prompt", e.prompt},
           {"output", e.output}};
  if (!e.error.empty()) j["error"] = e.error;
  if (!e.retrieved.empty()) j["retrieved"] = e.retrieved;
}

inline void from_json(const json& j, TraceEvent& e) {
  e.step = j.value("step", std::string{});
  e.task = j.value("task", std::string{});
  e.key = j.value("key", std::string{});
  e.fields = j.value("fields", std::map<std::string, std::string>{});
  e.prompt = j.value("prompt", std::string{});
  e.output = j.value("output", std::string{});
  e.error = j.value("error", std::string{});
  e.retrieved = j.value("retrieved", std::vector<std::string>{});
}

inline void to_json(json& j, const ClaimTrace& t) {
  j = json{{"format_version", kFormatVersion}, {"claim_id", t.claim_id}, {"adapter", t.adapter},
           {"prompt_version", t.prompt_version}, {"events", t.events}};
}

inline void from_json(const json& j, ClaimTrace& t) {
  if (j.value("format_version", 1) > kFormatVersion) throw ParseError("trace format version is newer than supported");
  t.claim_id = j.at("claim_id").get<std::string>();
  t.adapter = j.value("adapter", std::string{});
  t.prompt_version = j.value("prompt_version", std::string{});
  t.events = j.at("events").get<std::vector<TraceEvent>>();
}

inline void save_traces(const std::vector<ClaimTrace>& traces, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& t : traces) write_file(dir / (t.claim_id + ".json"), json(t).dump(1) + "\n");
}

inline std::vector<ClaimTrace> load_traces(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() == ".json") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ClaimTrace> out;
  for (const auto& f : files) out.push_back(json::parse(read_file(f)).get<ClaimTrace>());
  return out;
}

/// Answers requests from recorded traces. Responses are matched on the request key
/// and consumed in recorded order; a recorded error is thrown again.
class ReplayAdapter final : public ModelAdapter {
 public:
  explicit ReplayAdapter(const std::vector<ClaimTrace>& traces) {
    for (const auto& t : traces) {
      if (name_.empty()) name_ = "replay:" + t.adapter;
      for (const auto& e : t.events) {
        if (!e.key.empty()) recorded_[e.key].push_back(e);
      }
    }
    if (name_.empty()) name_ = "replay";
  }

  std::string name() const override { return name_; }

  std::string complete(const ModelRequest& request) override {
    TraceEvent e;
    {
      std::lock_guard lock(mu_);
      auto it = recorded_.find(request.key());
      if (it == recorded_.end() || it->second.empty()) {
        throw AdapterError("no recorded response for task " + request.task);
      }
      e = std::move(it->second.front());
      it->second.pop_front();
    }
    if (!e.error.empty()) throw AdapterError(e.error);
    return e.output;
  }

 private:
  std::string name_;
  std::mutex mu_;
  std::map<std::string, std::deque<TraceEvent>> recorded_;
};

}  // namespace averimatec::pipeline
