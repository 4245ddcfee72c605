#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cctype>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "averimatec/core/date.hpp"
#include "averimatec/core/errors.hpp"
#include "averimatec/core/text.hpp"

namespace averimatec {

using json = nlohmann::json;

/// Version written into every claim and submission record.
inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Verdict
// ---------------------------------------------------------------------------

enum class Verdict { Supported, Refuted, NotEnoughEvidence, ConflictingCherryPicking };

inline constexpr std::array<Verdict, 4> kAllVerdicts = {
    Verdict::Supported, Verdict::Refuted, Verdict::NotEnoughEvidence,
    Verdict::ConflictingCherryPicking};

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Supported: return "Supported";
    case Verdict::Refuted: return "Refuted";
    case Verdict::NotEnoughEvidence: return "Not Enough Evidence";
    case Verdict::ConflictingCherryPicking: return "Conflicting Evidence/Cherrypicking";
  }
  return "Refuted";
}

/// Short column label used in breakdown tables.
inline std::string_view short_label(Verdict v) {
  switch (v) {
    case Verdict::Supported: return "S";
    case Verdict::Refuted: return "R";
    case Verdict::NotEnoughEvidence: return "NEE";
    case Verdict::ConflictingCherryPicking: return "CE/C";
  }
  return "R";
}

/// Case- and punctuation-insensitive label lookup with the common synonyms.
inline std::optional<Verdict> parse_verdict(std::string_view label) {
  std::string key;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  static const std::map<std::string, Verdict, std::less<>> kSynonyms = {
      {"supported", Verdict::Supported},
      {"support", Verdict::Supported},
      {"supports", Verdict::Supported},
      {"s", Verdict::Supported},
      {"true", Verdict::Supported},
      {"refuted", Verdict::Refuted},
      {"refute", Verdict::Refuted},
      {"refutes", Verdict::Refuted},
      {"r", Verdict::Refuted},
      {"false", Verdict::Refuted},
      {"notenoughevidence", Verdict::NotEnoughEvidence},
      {"notenoughinfo", Verdict::NotEnoughEvidence},
      {"notenoughinformation", Verdict::NotEnoughEvidence},
      {"nee", Verdict::NotEnoughEvidence},
      {"nei", Verdict::NotEnoughEvidence},
      {"n", Verdict::NotEnoughEvidence},
      {"conflictingevidencecherrypicking", Verdict::ConflictingCherryPicking},
      {"conflictingevidence", Verdict::ConflictingCherryPicking},
      {"conflictingcherrypicking", Verdict::ConflictingCherryPicking},
      {"conflicting", Verdict::ConflictingCherryPicking},
      {"cherrypicking", Verdict::ConflictingCherryPicking},
      {"cec", Verdict::ConflictingCherryPicking},
      {"c", Verdict::ConflictingCherryPicking},
  };
  if (auto it = kSynonyms.find(key); it != kSynonyms.end()) return it->second;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Claim types and fact-checking strategies
// ---------------------------------------------------------------------------

namespace detail {

/// A closed enumeration plus an `Other(label)` escape hatch.
template <typename Kind, std::size_t N>
struct LabelTable {
  struct Row {
    Kind kind;
    std::string_view name;
    std::string_view abbreviation;
  };
  std::array<Row, N> rows;

  std::optional<Kind> find(std::string_view label) const {
    auto key = text::ascii_lower(text::trim(label));
    for (const auto& r : rows) {
      if (key == text::ascii_lower(r.name) || key == text::ascii_lower(r.abbreviation)) {
        return r.kind;
      }
    }
    return std::nullopt;
  }

  const Row& row(Kind k) const {
    for (const auto& r : rows) {
      if (r.kind == k) return r;
    }
    return rows.front();
  }
};

}  // namespace detail

struct ClaimType {
  enum class Kind { EventProperty, MediaAnalysis, Causal, Numerical, Other };

  Kind kind = Kind::Other;
  std::string label;  // non-empty iff kind == Other

  static inline const detail::LabelTable<Kind, 4> kTable{{{
      {Kind::EventProperty, "Event/Property", "EP"},
      {Kind::MediaAnalysis, "Media Analysis", "MA"},
      {Kind::Causal, "Causal", "Cs"},
      {Kind::Numerical, "Numerical", "Nm"},
  }}};

  static ClaimType parse(std::string_view name) {
    if (auto k = kTable.find(name)) return {*k, {}};
    auto label = text::trim(name);
    if (label.empty()) throw ValidationError("claim type label must be non-empty");
    return {Kind::Other, std::move(label)};
  }

  std::string name() const {
    return kind == Kind::Other ? label : std::string(kTable.row(kind).name);
  }
  std::string abbreviation() const {
    return kind == Kind::Other ? label : std::string(kTable.row(kind).abbreviation);
  }

  auto operator<=>(const ClaimType&) const = default;
};

struct Strategy {
  enum class Kind {
    ReverseImageSearch,
    Consultation,
    WrittenEvidence,
    ImageAnalysis,
    MediaSourceDiscovery,
    Other
  };

  Kind kind = Kind::Other;
  std::string label;

  static inline const detail::LabelTable<Kind, 6> kTable{{{
      {Kind::ReverseImageSearch, "Reverse Image Search", "RIS"},
      {Kind::Consultation, "Consultation", "Ct"},
      {Kind::WrittenEvidence, "Written Evidence", "WE"},
      {Kind::ImageAnalysis, "Image Analysis", "IA"},
      {Kind::MediaSourceDiscovery, "Media Source Discovery", "MSD"},
      {Kind::MediaSourceDiscovery, "Source Discovery", "SD"},
  }}};

  static Strategy parse(std::string_view name) {
    if (auto k = kTable.find(name)) return {*k, {}};
    auto label = text::trim(name);
    if (label.empty()) throw ValidationError("strategy label must be non-empty");
    return {Kind::Other, std::move(label)};
  }

  std::string name() const {
    return kind == Kind::Other ? label : std::string(kTable.row(kind).name);
  }

  auto operator<=>(const Strategy&) const = default;
};

// ---------------------------------------------------------------------------
// Evidence
// ---------------------------------------------------------------------------

/// Base64-encoded image bytes as carried on the wire.
struct Base64Image {
  std::string data;

  std::optional<std::string> decode() const { return text::base64_decode(data); }
  bool operator==(const Base64Image&) const = default;
};

struct EvidenceItem {
  std::string text;
  std::vector<Base64Image> images;
  std::string url;
  /// Question the evidence answers, when it came out of a QA step. Not scored.
  std::string question;

  bool operator==(const EvidenceItem&) const = default;
};

/// Problems with an evidence item's placeholder/image/url invariants; empty when valid.
inline std::vector<std::string> evidence_problems(const EvidenceItem& ev) {
  std::vector<std::string> problems;
  std::vector<int> refs(ev.images.size(), 0);
  for (const auto& ph : text::find_placeholders(ev.text)) {
    if (ph.index > ev.images.size()) {
      problems.push_back("dangling placeholder " + ev.text.substr(ph.pos, ph.length) + " with " +
                         std::to_string(ev.images.size()) + " image(s)");
    } else {
      ++refs[ph.index - 1];
    }
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i] != 1) {
      problems.push_back("image " + std::to_string(i + 1) + " referenced " +
                         std::to_string(refs[i]) + " time(s), expected exactly once");
    }
  }
  if (ev.url.empty()) problems.push_back("evidence url is empty");
  return problems;
}

/// Canonical text shown to judges: the text with placeholders intact.
/// Throws ValidationError on a placeholder without a matching image.
inline std::string render_evidence_text(const EvidenceItem& ev) {
  for (const auto& ph : text::find_placeholders(ev.text)) {
    if (ph.index > ev.images.size()) {
      throw ValidationError("dangling placeholder " + ev.text.substr(ph.pos, ph.length));
    }
  }
  return ev.text;
}

struct QAPair {
  std::string question;
  EvidenceItem answer;

  bool operator==(const QAPair&) const = default;
};

// ---------------------------------------------------------------------------
// Claims and submissions
// ---------------------------------------------------------------------------

enum class Split { Train, Dev, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw ParseError("unknown split '" + std::string(s) + "'");
}

/// Released split sizes of the shared-task dataset.
inline std::size_t published_split_size(Split s) {
  switch (s) {
    case Split::Train: return 793;
    case Split::Dev: return 152;
    case Split::Test: return 352;
  }
  return 0;
}

struct Claim {
  std::string id;
  std::string text;
  std::vector<Base64Image> images;
  Date claim_date;
  std::optional<std::string> location;
  std::map<std::string, std::string> metadata;
  Verdict gold_verdict = Verdict::Refuted;
  std::vector<QAPair> gold_qas;
  std::set<ClaimType> claim_types;
  std::set<Strategy> strategies;
  std::string justification;

  bool operator==(const Claim&) const = default;
};

struct SubmissionRecord {
  std::string claim_id;
  std::vector<std::string> questions;
  std::vector<EvidenceItem> evidence;
  Verdict verdict = Verdict::Refuted;
  std::string justification;

  bool operator==(const SubmissionRecord&) const = default;
};

struct Submission {
  std::vector<SubmissionRecord> records;

  const SubmissionRecord* find(std::string_view claim_id) const {
    for (const auto& r : records) {
      if (r.claim_id == claim_id) return &r;
    }
    return nullptr;
  }

  bool operator==(const Submission&) const = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(json& j, const Verdict& v) { j = std::string(to_string(v)); }
inline void from_json(const json& j, Verdict& v) {
  auto parsed = parse_verdict(j.get<std::string>());
  if (!parsed) throw ParseError("unknown verdict '" + j.get<std::string>() + "'");
  v = *parsed;
}

inline void to_json(json& j, const ClaimType& t) { j = t.name(); }
inline void from_json(const json& j, ClaimType& t) { t = ClaimType::parse(j.get<std::string>()); }
inline void to_json(json& j, const Strategy& s) { j = s.name(); }
inline void from_json(const json& j, Strategy& s) { s = Strategy::parse(j.get<std::string>()); }

inline void to_json(json& j, const Base64Image& img) { j = img.data; }
inline void from_json(const json& j, Base64Image& img) { img.data = j.get<std::string>(); }

inline void to_json(json& j, const Date& d) { j = d.str(); }
inline void from_json(const json& j, Date& d) { d = Date::parse(j.get<std::string>()); }

inline void to_json(json& j, const EvidenceItem& ev) {
  j = json{{"text", ev.text}, {"images", ev.images}, {"url", ev.url}};
  if (!ev.question.empty()) j["question"] = ev.question;
}
inline void from_json(const json& j, EvidenceItem& ev) {
  ev.text = j.at("text").get<std::string>();
  ev.images = j.value("images", std::vector<Base64Image>{});
  ev.url = j.value("url", std::string{});
  ev.question = j.value("question", std::string{});
}

inline void to_json(json& j, const QAPair& qa) {
  j = json{{"question", qa.question}, {"answer", qa.answer}};
}
inline void from_json(const json& j, QAPair& qa) {
  qa.question = j.at("question").get<std::string>();
  qa.answer = j.at("answer").get<EvidenceItem>();
}

inline void to_json(json& j, const Claim& c) {
  j = json{{"format_version", kFormatVersion},
           {"id", c.id},
           {"text", c.text},
           {"images", c.images},
           {"claim_date", c.claim_date},
           {"metadata", c.metadata},
           {"gold_verdict", c.gold_verdict},
           {"gold_qas", c.gold_qas},
           {"claim_types", c.claim_types},
           {"strategies", c.strategies},
           {"justification", c.justification}};
  if (c.location) j["location"] = *c.location;
}

inline void from_json(const json& j, Claim& c) {
  c.id = j.at("id").get<std::string>();
  c.text = j.at("text").get<std::string>();
  c.images = j.at("images").get<std::vector<Base64Image>>();
  c.claim_date = j.at("claim_date").get<Date>();
  if (auto it = j.find("location"); it != j.end() && !it->is_null()) {
    c.location = it->get<std::string>();
  } else {
    c.location.reset();
  }
  c.metadata = j.value("metadata", std::map<std::string, std::string>{});
  c.gold_verdict = j.at("gold_verdict").get<Verdict>();
  c.gold_qas = j.value("gold_qas", std::vector<QAPair>{});
  c.claim_types = j.value("claim_types", std::set<ClaimType>{});
  c.strategies = j.value("strategies", std::set<Strategy>{});
  c.justification = j.value("justification", std::string{});
}

inline void to_json(json& j, const SubmissionRecord& r) {
  j = json{{"format_version", kFormatVersion},
           {"claim_id", r.claim_id},
           {"questions", r.questions},
           {"evidence", r.evidence},
           {"verdict", r.verdict},
           {"justification", r.justification}};
}

inline void from_json(const json& j, SubmissionRecord& r) {
  r.claim_id = j.at("claim_id").get<std::string>();
  r.questions = j.value("questions", std::vector<std::string>{});
  r.evidence = j.value("evidence", std::vector<EvidenceItem>{});
  r.verdict = j.at("verdict").get<Verdict>();
  r.justification = j.value("justification", std::string{});
}

}  // namespace averimatec
