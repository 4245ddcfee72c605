#pragma once

#include <fmt/format.h>

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "averimatec/analysis/correlation.hpp"
#include "averimatec/analysis/ratings.hpp"

namespace averimatec::analysis {

enum class Dimension { Coverage, Relevance };

inline constexpr std::array<Dimension, 2> kDimensions = {Dimension::Coverage, Dimension::Relevance};

inline std::string_view to_string(Dimension d) { return d == Dimension::Coverage ? "coverage" : "relevance"; }

inline int value(const HumanRating& r, Dimension d) { return d == Dimension::Coverage ? r.coverage : r.relevance; }

/// Automatic scores of one sample: the evidence score enters human-model correlations,
/// the claim-level AVerImaTeC score picks the lowest and highest slices.
struct SampleScore {
  double evidence = 0.0;
  std::optional<double> averimatec;

  /// Falls back to the evidence score when no claim-level score is known.
  double slice_key() const { return averimatec ? *averimatec : evidence; }
};

struct SliceCorrelation {
  std::string label;
  /// Indexed by Dimension.
  std::array<Correlation, 2> human_human;
  std::array<Correlation, 2> human_model;
};

struct TeamMean {
  std::string team;
  std::size_t n = 0;
  std::optional<double> coverage;
  std::optional<double> relevance;
};

struct CorrelationReport {
  SliceCorrelation overall;
  /// Per team, all but one team, and the samples whose claim scored 0 or 1.
  std::vector<SliceCorrelation> slices;
  std::vector<TeamMean> team_means;
  std::vector<std::string> warnings;

  const SliceCorrelation* slice(std::string_view label) const {
    if (overall.label == label) return &overall;
    for (const auto& s : slices) {
      if (s.label == label) return &s;
    }
    return nullptr;
  }
};

namespace detail {

/// Human-human points pair the two lowest-named annotators of each sample; human-model
/// points pair every rating with its sample's automatic score.
inline SliceCorrelation correlate_slice(std::string label, const std::vector<HumanRating>& ratings,
                                        const std::map<std::string, SampleScore>& auto_scores,
                                        const std::function<bool(const HumanRating&)>& keep) {
  SliceCorrelation out;
  out.label = std::move(label);
  std::map<std::string, std::map<std::string, const HumanRating*>> by_sample;
  for (const auto& r : ratings) {
    if (keep(r)) by_sample[r.sample_id][r.annotator] = &r;
  }
  for (auto d : kDimensions) {
    const auto i = static_cast<std::size_t>(d);
    std::vector<double> a, b, human, model;
    for (const auto& [sample, by_annotator] : by_sample) {
      if (by_annotator.size() >= 2) {
        auto it = by_annotator.begin();
        a.push_back(value(*it->second, d));
        b.push_back(value(*std::next(it)->second, d));
      }
      if (auto s = auto_scores.find(sample); s != auto_scores.end()) {
        for (const auto& [_, r] : by_annotator) {
          human.push_back(value(*r, d));
          model.push_back(s->second.evidence);
        }
      }
    }
    out.human_human[i] = correlate(a, b);
    out.human_model[i] = correlate(human, model);
  }
  return out;
}

}  // namespace detail

/// Correlations between annotators and between annotators and the automatic evidence
/// score, keyed by sample. Samples with a single rating only enter human-model points.
inline CorrelationReport correlation_report(const std::vector<HumanRating>& ratings,
                                            const std::map<std::string, SampleScore>& auto_scores) {
  CorrelationReport rep;
  std::set<std::string> teams;
  std::map<std::string, std::set<std::string>> annotators;
  for (const auto& r : ratings) {
    teams.insert(r.team);
    annotators[r.sample_id].insert(r.annotator);
  }
  std::size_t single = 0;
  for (const auto& [s, a] : annotators) {
    if (a.size() == 1) ++single;
    if (a.size() > 2) rep.warnings.push_back("sample " + s + " has " + std::to_string(a.size()) +
                                             " ratings; the first two annotators by name are paired");
    if (!auto_scores.contains(s)) rep.warnings.push_back("sample " + s + " has no automatic score");
  }
  if (single) {
    rep.warnings.push_back(std::to_string(single) +
                           " samples have a single rating and are left out of human-human correlations");
  }
  auto key_of = [&](const HumanRating& r) -> std::optional<double> {
    auto it = auto_scores.find(r.sample_id);
    return it == auto_scores.end() ? std::nullopt : std::optional<double>(it->second.slice_key());
  };
  rep.overall = detail::correlate_slice("all", ratings, auto_scores, [](const HumanRating&) { return true; });
  for (const auto& t : teams) {
    rep.slices.push_back(
        detail::correlate_slice(t, ratings, auto_scores, [&](const HumanRating& r) { return r.team == t; }));
  }
  for (const auto& t : teams) {
    rep.slices.push_back(detail::correlate_slice("excluding " + t, ratings, auto_scores,
                                                 [&](const HumanRating& r) { return r.team != t; }));
  }
  rep.slices.push_back(detail::correlate_slice("lowest", ratings, auto_scores, [&](const HumanRating& r) {
    auto k = key_of(r);
    return k && *k == 0.0;
  }));
  rep.slices.push_back(detail::correlate_slice("highest", ratings, auto_scores, [&](const HumanRating& r) {
    auto k = key_of(r);
    return k && *k == 1.0;
  }));
  for (const auto& t : teams) {
    TeamMean m{t, 0, std::nullopt, std::nullopt};
    double cov = 0.0, rel = 0.0;
    for (const auto& r : ratings) {
      if (r.team != t) continue;
      ++m.n;
      cov += r.coverage;
      rel += r.relevance;
    }
    if (m.n) {
      m.coverage = cov / static_cast<double>(m.n);
      m.relevance = rel / static_cast<double>(m.n);
    }
    rep.team_means.push_back(m);
  }
  return rep;
}

/// Evidence scores only; the lowest and highest slices then key on evidence 0 and 1.
inline CorrelationReport correlation_report(const std::vector<HumanRating>& ratings,
                                            const std::map<std::string, double>& evidence) {
  std::map<std::string, SampleScore> scores;
  for (const auto& [id, e] : evidence) scores[id] = SampleScore{e, std::nullopt};
  return correlation_report(ratings, scores);
}

inline std::string format_coefficient(const std::optional<double>& v) {
  return v ? fmt::format("{:.3f}", *v) : std::string("n/a");
}

inline json to_json(const Correlation& c) {
  return {{"n", c.n}, {"rho", c.rho ? json(*c.rho) : json(nullptr)}, {"r", c.r ? json(*c.r) : json(nullptr)}};
}

inline json to_json(const SliceCorrelation& s) {
  json j{{"label", s.label}};
  for (auto d : kDimensions) {
    const auto i = static_cast<std::size_t>(d);
    j["human_human"][std::string(to_string(d))] = to_json(s.human_human[i]);
    j["human_model"][std::string(to_string(d))] = to_json(s.human_model[i]);
  }
  return j;
}

inline json to_json(const CorrelationReport& rep) {
  json slices = json::array(), means = json::array();
  for (const auto& s : rep.slices) slices.push_back(to_json(s));
  for (const auto& m : rep.team_means) {
    means.push_back({{"team", m.team},
                     {"n", m.n},
                     {"coverage", m.coverage ? json(*m.coverage) : json(nullptr)},
                     {"relevance", m.relevance ? json(*m.relevance) : json(nullptr)}});
  }
  return {{"overall", to_json(rep.overall)}, {"slices", slices}, {"team_means", means}, {"warnings", rep.warnings}};
}

inline std::string render_correlations(const CorrelationReport& rep) {
  std::size_t width = 5;
  for (const auto& s : rep.slices) width = std::max(width, s.label.size());
  std::string out = fmt::format("{:<{}}  {:>21}  {:>21}\n", "", width, "human-human", "human-model");
  out += fmt::format("{:<{}}  {:>10} {:>10}  {:>10} {:>10}\n", "slice", width, "cov. ρ/r", "rel. ρ/r", "cov. ρ/r",
                     "rel. ρ/r");
  auto pair = [](const Correlation& c) { return format_coefficient(c.rho) + "/" + format_coefficient(c.r); };
  auto row = [&](const SliceCorrelation& s) {
    out += fmt::format("{:<{}}  {:>11} {:>11}  {:>11} {:>11}\n", s.label, width, pair(s.human_human[0]),
                       pair(s.human_human[1]), pair(s.human_model[0]), pair(s.human_model[1]));
  };
  row(rep.overall);
  for (const auto& s : rep.slices) row(s);
  out += "\n";
  out += fmt::format("{:<{}}  {:>5}  {:>13}  {:>14}\n", "team", width, "n", "avg. coverage", "avg. relevance");
  for (const auto& m : rep.team_means) {
    out += fmt::format("{:<{}}  {:>5}  {:>13}  {:>14}\n", m.team, width, m.n,
                       m.coverage ? fmt::format("{:.2f}", *m.coverage) : std::string("n/a"),
                       m.relevance ? fmt::format("{:.2f}", *m.relevance) : std::string("n/a"));
  }
  return out;
}

}  // namespace averimatec::analysis
