#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "averimatec/core/errors.hpp"
#include "averimatec/core/text.hpp"

namespace averimatec::analysis {

/// Automatic scores of one team's prediction for one claim.
struct AutoScore {
  std::string claim_id;
  /// Evidence score; picks the stratum.
  double score = 0.0;
  /// Claim-level AVerImaTeC score, when known.
  std::optional<double> averimatec;
};

struct SamplingOptions {
  std::uint64_t seed = 0;
  std::size_t per_team = 25;
  /// Equal-width strata over [0, 1].
  std::size_t strata = 5;
  /// Annotators per sample.
  std::size_t raters = 2;
  /// Defaults to the team names, so teams rate each other.
  std::vector<std::string> annotators;
  /// When set, only these claims are drawn; a small pool makes teams overlap on claims.
  std::optional<std::set<std::string>> claim_pool;
};

struct Sample {
  /// Opaque: does not reveal the team.
  std::string sample_id;
  std::string team;
  std::string claim_id;
  double auto_score = 0.0;
  std::optional<double> auto_averimatec;
  std::size_t stratum = 0;
  std::vector<std::string> annotators;
};

struct SamplingPlan {
  std::vector<Sample> samples;
  std::vector<std::string> warnings;

  std::vector<const Sample*> tasks_for(const std::string& annotator) const {
    std::vector<const Sample*> out;
    for (const auto& s : samples) {
      if (std::find(s.annotators.begin(), s.annotators.end(), annotator) != s.annotators.end()) out.push_back(&s);
    }
    return out;
  }
  const Sample* find(const std::string& sample_id) const {
    for (const auto& s : samples) {
      if (s.sample_id == sample_id) return &s;
    }
    return nullptr;
  }
  std::size_t task_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.annotators.size();
    return n;
  }
  std::set<std::string> claims() const {
    std::set<std::string> out;
    for (const auto& s : samples) out.insert(s.claim_id);
    return out;
  }
};

inline std::size_t stratum_of(double score, std::size_t strata) {
  const double clamped = std::clamp(score, 0.0, 1.0);
  return std::min(static_cast<std::size_t>(std::floor(clamped * static_cast<double>(strata))), strata - 1);
}

/// Draws `per_team` predictions per team, spread evenly over the score strata, and
/// assigns each to `raters` distinct annotators other than its own team, balancing load.
/// A stratum with too few predictions borrows from the nearest non-empty one, with a
/// warning. Deterministic per seed. Throws ValidationError when a team has fewer than
/// `per_team` eligible predictions or too few annotators are available.
inline SamplingPlan build_sampling_plan(const std::map<std::string, std::vector<AutoScore>>& scores,
                                        const SamplingOptions& opts = {}) {
  if (opts.strata == 0) throw ValidationError("strata must be positive");
  std::vector<std::string> annotators = opts.annotators;
  if (annotators.empty()) {
    for (const auto& [team, _] : scores) annotators.push_back(team);
  }
  std::sort(annotators.begin(), annotators.end());
  annotators.erase(std::unique(annotators.begin(), annotators.end()), annotators.end());

  SamplingPlan plan;
  std::mt19937_64 rng(opts.seed);
  std::vector<std::vector<Sample>> per_team;
  for (const auto& [team, all] : scores) {
    std::map<std::string, AutoScore> unique;
    for (const auto& a : all) {
      if (opts.claim_pool && !opts.claim_pool->contains(a.claim_id)) continue;
      unique.emplace(a.claim_id, a);
    }
    if (unique.size() < opts.per_team) {
      throw ValidationError("team " + team + " has " + std::to_string(unique.size()) + " eligible predictions; " +
                            std::to_string(opts.per_team) + " needed");
    }
    std::vector<AutoScore> pool;
    for (const auto& [id, a] : unique) pool.push_back(a);
    std::shuffle(pool.begin(), pool.end(), rng);

    std::vector<std::vector<AutoScore>> buckets(opts.strata);
    for (auto& a : pool) buckets[stratum_of(a.score, opts.strata)].push_back(std::move(a));
    std::vector<std::size_t> taken(opts.strata, 0);
    std::vector<Sample> drawn;
    auto take = [&](std::size_t s) {
      const auto& a = buckets[s][taken[s]++];
      Sample smp;
      smp.team = team;
      smp.claim_id = a.claim_id;
      smp.auto_score = a.score;
      smp.auto_averimatec = a.averimatec;
      smp.stratum = s;
      smp.sample_id = "s" + text::sha256_hex(team + "\n" + a.claim_id + "\n" + std::to_string(opts.seed)).substr(0, 12);
      drawn.push_back(std::move(smp));
    };
    std::vector<std::size_t> need(opts.strata);
    for (std::size_t s = 0; s < opts.strata; ++s) {
      need[s] = opts.per_team / opts.strata + (s < opts.per_team % opts.strata ? 1 : 0);
      while (taken[s] < need[s] && taken[s] < buckets[s].size()) take(s);
    }
    std::vector<std::size_t> short_by(opts.strata);
    for (std::size_t s = 0; s < opts.strata; ++s) short_by[s] = need[s] - taken[s];
    for (std::size_t s = 0; s < opts.strata; ++s) {
      std::size_t missing = short_by[s];
      if (missing == 0) continue;
      plan.warnings.push_back("team " + team + ": stratum " + std::to_string(s + 1) + " has " +
                              std::to_string(taken[s]) + " of " + std::to_string(need[s]) +
                              " predictions; borrowing from the nearest stratum");
      for (std::size_t d = 1; missing > 0 && d < opts.strata; ++d) {
        for (auto t : {static_cast<long>(s) - static_cast<long>(d), static_cast<long>(s + d)}) {
          if (t < 0 || t >= static_cast<long>(opts.strata)) continue;
          auto u = static_cast<std::size_t>(t);
          // Keep what the stratum itself still needs.
          while (missing > 0 && taken[u] < buckets[u].size() &&
                 buckets[u].size() - taken[u] > (need[u] > taken[u] ? need[u] - taken[u] : 0)) {
            take(u);
            --missing;
          }
        }
      }
    }
    per_team.push_back(std::move(drawn));
  }

  // Assignment interleaves the teams so that no team is left with only busy annotators.
  std::map<std::string, std::size_t> load;
  for (std::size_t i = 0, more = 1; more; ++i) {
    more = 0;
    for (auto& drawn : per_team) {
      if (i >= drawn.size()) continue;
      more = 1;
      auto smp = std::move(drawn[i]);
      std::vector<std::pair<std::pair<std::size_t, std::uint64_t>, std::string>> order;
      for (const auto& a : annotators) {
        if (a != smp.team) order.push_back({{load[a], rng()}, a});
      }
      if (order.size() < opts.raters) {
        throw ValidationError("team " + smp.team + ": fewer than " + std::to_string(opts.raters) +
                              " annotators besides the team itself");
      }
      std::sort(order.begin(), order.end());
      for (std::size_t k = 0; k < opts.raters; ++k) {
        smp.annotators.push_back(order[k].second);
        ++load[order[k].second];
      }
      std::sort(smp.annotators.begin(), smp.annotators.end());
      plan.samples.push_back(std::move(smp));
    }
  }
  std::stable_sort(plan.samples.begin(), plan.samples.end(),
                   [](const Sample& a, const Sample& b) { return a.team < b.team; });
  return plan;
}

}  // namespace averimatec::analysis
