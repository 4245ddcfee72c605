#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "averimatec/core/model.hpp"

namespace averimatec {

/// Limits applied by the scorer. Validation only reports against them.
struct SubmissionCaps {
  std::size_t max_evidence = 10;
  std::size_t max_tokens = 1500;
  text::WhitespaceRule tokenizer = text::WhitespaceRule::Unicode;
};

struct ValidationIssue {
  enum class Severity { Warning, Error };

  std::string claim_id;
  Severity severity = Severity::Warning;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const {
    for (const auto& i : issues) {
      if (i.severity == ValidationIssue::Severity::Error) return false;
    }
    return true;
  }
  std::vector<std::string> messages() const {
    std::vector<std::string> out;
    for (const auto& i : issues) out.push_back(i.claim_id + ": " + i.message);
    return out;
  }
  bool operator==(const ValidationReport&) const = default;
};

namespace detail {

/// 1500 -> "1,500"
inline std::string with_thousands(std::size_t n) {
  auto s = std::to_string(n);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

}  // namespace detail

/// Report-only: nothing is truncated or dropped here. Every submitted evidence item
/// counts toward the evidence cap, including items with empty text.
inline ValidationReport validate_submission(const Submission& sub, const std::vector<Claim>& claims,
                                            const SubmissionCaps& caps = {}) {
  using Sev = ValidationIssue::Severity;
  ValidationReport report;
  std::set<std::string> known;
  for (const auto& c : claims) known.insert(c.id);

  std::map<std::string, int> seen;
  for (const auto& rec : sub.records) {
    auto add = [&](Sev sev, std::string msg) {
      report.issues.push_back({rec.claim_id, sev, std::move(msg)});
    };
    if (++seen[rec.claim_id] == 2) add(Sev::Error, "duplicate claim_id");
    if (!known.contains(rec.claim_id)) add(Sev::Error, "unknown claim_id");
    if (rec.evidence.size() > caps.max_evidence) {
      add(Sev::Warning, std::to_string(rec.evidence.size()) + " evidence items submitted; evidence beyond " +
                            std::to_string(caps.max_evidence) + " will be ignored");
    }
    for (std::size_t i = 0; i < rec.evidence.size(); ++i) {
      const auto& ev = rec.evidence[i];
      auto where = "evidence " + std::to_string(i + 1) + ": ";
      auto tokens = text::count_tokens(ev.text, caps.tokenizer);
      if (tokens > caps.max_tokens) {
        add(Sev::Warning, where + std::to_string(tokens) + " tokens; will be truncated to " +
                              detail::with_thousands(caps.max_tokens) + " tokens");
      }
      for (auto& p : evidence_problems(ev)) add(Sev::Error, where + p);
    }
  }
  for (const auto& c : claims) {
    if (!seen.contains(c.id)) {
      report.issues.push_back({c.id, Sev::Warning, "no submission record; claim will score 0"});
    }
  }
  return report;
}

}  // namespace averimatec
