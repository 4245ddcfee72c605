#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "averimatec/scoring/metrics.hpp"

namespace averimatec::scoring {

struct Cell {
  std::string label;
  std::size_t n = 0;
  std::optional<double> mean;  // undefined for an empty subset

  bool operator==(const Cell&) const = default;
};

struct Breakdown {
  std::vector<Cell> by_claim_type;
  std::vector<Cell> by_verdict;
  std::vector<Cell> by_cutoff;  // before, after
  Date cutoff{2025, 1, 1};
  /// Mean evidence items per submitted record, before capping.
  std::optional<double> avg_evidence;
};

inline std::string format_mean(const std::optional<double>& v, int decimals = 2) {
  return v ? fmt::format("{:.{}f}", *v, decimals) : std::string("n/a");
}

/// AVerImaTeC means over claim subsets. A claim with several types counts in each.
inline Breakdown breakdown(const ScoreReport& report, const std::vector<Claim>& claims,
                           Date cutoff = Date{2025, 1, 1}) {
  Breakdown b;
  b.cutoff = cutoff;
  std::map<std::string, const Claim*> by_id;
  for (const auto& c : claims) by_id.emplace(c.id, &c);

  struct Acc {
    std::size_t n = 0;
    double sum = 0.0;
  };
  std::map<ClaimType, Acc> types;
  std::map<Verdict, Acc> verdicts;
  Acc before, after;
  std::size_t records = 0, evidence = 0;
  for (const auto& s : report.claims) {
    auto it = by_id.find(s.claim_id);
    if (it == by_id.end()) continue;
    const Claim& c = *it->second;
    for (const auto& t : c.claim_types) {
      ++types[t].n;
      types[t].sum += s.averimatec;
    }
    ++verdicts[c.gold_verdict].n;
    verdicts[c.gold_verdict].sum += s.averimatec;
    auto& side = c.claim_date < cutoff ? before : after;
    ++side.n;
    side.sum += s.averimatec;
    if (s.submitted) {
      ++records;
      evidence += s.evidence_count;
    }
  }
  auto cell = [](std::string label, const Acc& a) {
    return Cell{std::move(label), a.n, a.n ? std::optional<double>(a.sum / static_cast<double>(a.n)) : std::nullopt};
  };
  // Fixed columns first, then any other types present.
  for (auto k : {ClaimType::Kind::EventProperty, ClaimType::Kind::MediaAnalysis, ClaimType::Kind::Causal,
                 ClaimType::Kind::Numerical}) {
    ClaimType t{k, ""};
    auto it = std::find_if(types.begin(), types.end(), [&](const auto& p) { return p.first.kind == k; });
    b.by_claim_type.push_back(cell(t.abbreviation(), it == types.end() ? Acc{} : it->second));
  }
  for (const auto& [t, a] : types) {
    if (t.kind == ClaimType::Kind::Other) b.by_claim_type.push_back(cell(t.name(), a));
  }
  for (auto v : kAllVerdicts) b.by_verdict.push_back(cell(std::string(short_label(v)), verdicts[v]));
  b.by_cutoff.push_back(cell("before " + cutoff.str(), before));
  b.by_cutoff.push_back(cell("from " + cutoff.str(), after));
  if (records) b.avg_evidence = static_cast<double>(evidence) / static_cast<double>(records);
  return b;
}

// ---------------------------------------------------------------------------
// Leaderboard
// ---------------------------------------------------------------------------

struct LeaderboardRow {
  std::string team;
  double question = 0.0;
  double evidence = 0.0;
  double justification = 0.0;
  double averimatec = 0.0;

  bool operator==(const LeaderboardRow&) const = default;
};

inline LeaderboardRow leaderboard_row(std::string team, const ScoreReport& report) {
  const auto& a = report.aggregates;
  return {std::move(team), a.question, a.evidence, a.justification, a.averimatec};
}

/// Sorted by AVerImaTeC score, then evidence score (both descending), then team name.
inline std::vector<LeaderboardRow> leaderboard(std::vector<LeaderboardRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const LeaderboardRow& a, const LeaderboardRow& b) {
    if (a.averimatec != b.averimatec) return a.averimatec > b.averimatec;
    if (a.evidence != b.evidence) return a.evidence > b.evidence;
    return a.team < b.team;
  });
  return rows;
}

inline std::string render_leaderboard(const std::vector<LeaderboardRow>& rows) {
  std::size_t width = 9;
  for (const auto& r : rows) width = std::max(width, r.team.size());
  std::string out = fmt::format("{:<4} {:<{}}  {:>6}  {:>6}  {:>6}  {:>10}\n", "#", "Team", width, "Ques", "Evid",
                                "Just", "AVerImaTeC");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += fmt::format("{:<4} {:<{}}  {:>6.4f}  {:>6.4f}  {:>6.4f}  {:>10.4f}\n", i + 1, r.team, width, r.question,
                       r.evidence, r.justification, r.averimatec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline json cells_json(const std::vector<Cell>& cells) {
  json arr = json::array();
  for (const auto& c : cells) {
    arr.push_back({{"label", c.label}, {"n", c.n}, {"mean", c.mean ? json(*c.mean) : json(nullptr)}});
  }
  return arr;
}

inline json to_json_report(const ScoreReport& report, const Breakdown* b = nullptr) {
  json claims = json::array();
  for (const auto& c : report.claims) {
    json j{{"claim_id", c.claim_id},
           {"question_score", c.question_score},
           {"evidence_recall", c.evidence_recall},
           {"justification_score", c.justification_score},
           {"verdict_correct", c.verdict_correct},
           {"averimatec", c.averimatec},
           {"evidence_count", c.evidence_count},
           {"submitted", c.submitted},
           {"scored", c.scored}};
    if (c.predicted) j["predicted_verdict"] = std::string(to_string(*c.predicted));
    if (c.vacuous_gt) j["vacuous_gt"] = true;
    if (!c.note.empty()) j["note"] = c.note;
    claims.push_back(std::move(j));
  }
  const auto& a = report.aggregates;
  json out{{"format_version", kFormatVersion},
           {"tau", report.tau},
           {"aggregates",
            {{"question", a.question}, {"evidence", a.evidence}, {"justification", a.justification},
             {"averimatec", a.averimatec}}},
           {"claims", std::move(claims)},
           {"unscored", report.unscored()},
           {"warnings", report.warnings}};
  if (b) {
    out["breakdown"] = {{"claim_type", cells_json(b->by_claim_type)},
                        {"verdict", cells_json(b->by_verdict)},
                        {"cutoff", cells_json(b->by_cutoff)},
                        {"cutoff_date", b->cutoff.str()},
                        {"avg_evidence", b->avg_evidence ? json(*b->avg_evidence) : json(nullptr)}};
  }
  return out;
}

/// Text rendering: overall scores, then the breakdown tables.
inline std::string render_report(const std::string& team, const ScoreReport& report, const Breakdown& b) {
  std::string out = render_leaderboard({leaderboard_row(team, report)});
  out += "\n";
  auto row = [&](const char* title, const std::vector<Cell>& cells) {
    std::string head = fmt::format("{:<12}", title), vals = fmt::format("{:<12}", "");
    for (const auto& c : cells) {
      auto w = std::max<std::size_t>(c.label.size(), 5) + 2;
      head += fmt::format("{:>{}}", c.label, w);
      vals += fmt::format("{:>{}}", format_mean(c.mean), w);
    }
    out += head + "\n" + vals + "\n";
  };
  row("claim type", b.by_claim_type);
  row("verdict", b.by_verdict);
  row("claim date", b.by_cutoff);
  out += fmt::format("avg. evidence items: {}\n", b.avg_evidence ? fmt::format("{:.2f}", *b.avg_evidence) : std::string("n/a"));
  if (auto u = report.unscored(); !u.empty()) out += fmt::format("unscored claims: {}\n", text::join(u, ", "));
  return out;
}

}  // namespace averimatec::scoring
