#pragma once

#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "averimatec/core/io.hpp"

namespace averimatec::analysis {

/// One annotator's judgement of one predicted-evidence sample, on 0..5 scales.
struct HumanRating {
  std::string sample_id;
  std::string claim_id;
  std::string team;
  std::string annotator;
  int coverage = 0;
  int relevance = 0;
  std::string timestamp;

  bool operator==(const HumanRating&) const = default;
};

/// Field name to problem; empty when the rating is well formed.
inline std::map<std::string, std::string> rating_errors(const HumanRating& r) {
  std::map<std::string, std::string> errs;
  if (r.sample_id.empty()) errs["sample_id"] = "required";
  if (r.annotator.empty()) errs["annotator"] = "required";
  if (r.coverage < 0 || r.coverage > 5) errs["coverage"] = "must be an integer in 0..5";
  if (r.relevance < 0 || r.relevance > 5) errs["relevance"] = "must be an integer in 0..5";
  return errs;
}

inline void to_json(json& j, const HumanRating& r) {
  j = json{{"sample_id", r.sample_id}, {"claim_id", r.claim_id}, {"team", r.team},      {"annotator", r.annotator},
           {"coverage", r.coverage},   {"relevance", r.relevance}, {"timestamp", r.timestamp}};
}

/// Lenient on optional fields; scale checks are left to rating_errors.
inline void from_json(const json& j, HumanRating& r) {
  r.sample_id = j.value("sample_id", "");
  r.claim_id = j.value("claim_id", "");
  r.team = j.value("team", "");
  r.annotator = j.value("annotator", "");
  r.coverage = j.at("coverage").get<int>();
  r.relevance = j.at("relevance").get<int>();
  r.timestamp = j.value("timestamp", "");
}

/// Append-only line-delimited rating log. The latest line for a (sample_id, annotator)
/// key wins; writing an identical rating again appends nothing.
class RatingLog {
 public:
  enum class Upsert { Inserted, Updated, Unchanged };

  explicit RatingLog(fs::path path) : path_(std::move(path)) {
    if (!fs::exists(path_)) return;
    std::ifstream in(path_);
    for_each_jsonl(in, [&](const json& j, std::size_t) {
      auto r = j.get<HumanRating>();
      if (auto errs = rating_errors(r); !errs.empty()) {
        throw ValidationError(errs.begin()->first + " " + errs.begin()->second);
      }
      latest_[{r.sample_id, r.annotator}] = std::move(r);
    });
  }

  /// Throws ValidationError on an out-of-range rating.
  Upsert upsert(const HumanRating& r) {
    if (auto errs = rating_errors(r); !errs.empty()) {
      throw ValidationError(errs.begin()->first + " " + errs.begin()->second);
    }
    std::lock_guard lock(mu_);
    auto key = std::make_pair(r.sample_id, r.annotator);
    auto it = latest_.find(key);
    if (it != latest_.end() && same_judgement(it->second, r)) return Upsert::Unchanged;
    const bool existed = it != latest_.end();
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("cannot append to " + path_.string());
    out << json(r).dump() << "\n";
    out.flush();
    latest_[key] = r;
    return existed ? Upsert::Updated : Upsert::Inserted;
  }

  /// Current ratings ordered by (sample_id, annotator).
  std::vector<HumanRating> ratings() const {
    std::lock_guard lock(mu_);
    std::vector<HumanRating> out;
    for (const auto& [k, r] : latest_) out.push_back(r);
    return out;
  }

  const fs::path& path() const { return path_; }

 private:
  static bool same_judgement(const HumanRating& a, const HumanRating& b) {
    return a.coverage == b.coverage && a.relevance == b.relevance && a.claim_id == b.claim_id && a.team == b.team;
  }

  fs::path path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, HumanRating> latest_;
};

inline std::vector<HumanRating> read_ratings(std::istream& in) {
  std::vector<HumanRating> out;
  for_each_jsonl(in, [&](const json& j, std::size_t) { out.push_back(j.get<HumanRating>()); });
  return out;
}

}  // namespace averimatec::analysis
