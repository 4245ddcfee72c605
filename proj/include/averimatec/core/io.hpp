#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "averimatec/core/model.hpp"

namespace averimatec {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

/// Calls `fn(record, line_number)` for every non-blank line. Parse failures become
/// ParseError naming the line; exceptions thrown by `fn` are rethrown with the line.
inline void for_each_jsonl(std::istream& in,
                           const std::function<void(const json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw ParseError("record is not an object", line_no);
    if (auto v = record.find("format_version");
        v != record.end() && (!v->is_number_integer() || v->get<int>() > kFormatVersion)) {
      throw ParseError("unsupported format_version " + v->dump(), line_no);
    }
    try {
      fn(record, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

struct LoadOptions {
  /// Images given as {"path": "..."} are read from here and inlined as base64.
  fs::path sidecar_dir;
};

namespace detail {

inline void inline_sidecar_images(json& images, const LoadOptions& opts) {
  if (!images.is_array()) return;
  for (auto& img : images) {
    if (img.is_object() && img.contains("path")) {
      auto p = fs::path(img.at("path").get<std::string>());
      if (p.is_relative() && !opts.sidecar_dir.empty()) p = opts.sidecar_dir / p;
      img = text::base64_encode(read_file(p));
    }
  }
}

inline void inline_sidecars(json& record, const LoadOptions& opts) {
  if (auto it = record.find("images"); it != record.end()) inline_sidecar_images(*it, opts);
  if (auto qas = record.find("gold_qas"); qas != record.end() && qas->is_array()) {
    for (auto& qa : *qas) {
      if (auto a = qa.find("answer"); a != qa.end()) {
        if (auto im = a->find("images"); im != a->end()) inline_sidecar_images(*im, opts);
      }
    }
  }
}

}  // namespace detail

/// Checks the Claim invariants. Throws ValidationError.
inline void validate_claim(const Claim& c, Split split) {
  if (c.id.empty()) throw ValidationError("claim id is empty");
  if (c.images.empty()) throw ValidationError("claim " + c.id + " has no images");
  if (!c.claim_date.valid()) throw ValidationError("claim " + c.id + " has an invalid date");
  if (split != Split::Test && c.gold_qas.empty()) {
    throw ValidationError("claim " + c.id + " has no gold QA pairs");
  }
  for (const auto& qa : c.gold_qas) {
    if (qa.question.empty()) throw ValidationError("claim " + c.id + " has an empty gold question");
    if (auto problems = evidence_problems(qa.answer); !problems.empty()) {
      throw ValidationError("claim " + c.id + ": " + problems.front());
    }
  }
}

inline std::vector<Claim> read_claims(std::istream& in, Split split, const LoadOptions& opts = {},
                                      Diagnostics* diag = nullptr) {
  std::vector<Claim> claims;
  std::set<std::string> seen;
  for_each_jsonl(in, [&](const json& record, std::size_t) {
    json copy = record;
    detail::inline_sidecars(copy, opts);
    auto claim = copy.get<Claim>();
    validate_claim(claim, split);
    if (!seen.insert(claim.id).second) throw ValidationError("duplicate claim id " + claim.id);
    claims.push_back(std::move(claim));
  });
  if (diag) {
    auto expected = published_split_size(split);
    std::string note = std::string(to_string(split)) + " split: " + std::to_string(claims.size()) +
                       " claims";
    if (claims.size() != expected) note += " (released split has " + std::to_string(expected) + ")";
    diag->warn(std::move(note));
  }
  return claims;
}

/// Loads a line-delimited claim file and validates every record.
inline std::vector<Claim> load_claims(const fs::path& path, Split split, LoadOptions opts = {},
                                      Diagnostics* diag = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open claim file " + path.string());
  if (opts.sidecar_dir.empty()) opts.sidecar_dir = path.parent_path();
  return read_claims(in, split, opts, diag);
}

inline std::string serialize_claims(const std::vector<Claim>& claims) {
  std::string out;
  for (const auto& c : claims) out += json(c).dump() + "\n";
  return out;
}

inline Submission read_submission(std::istream& in) {
  Submission sub;
  std::set<std::string> seen;
  for_each_jsonl(in, [&](const json& record, std::size_t) {
    auto r = record.get<SubmissionRecord>();
    if (r.claim_id.empty()) throw ValidationError("empty claim_id");
    if (!seen.insert(r.claim_id).second) {
      throw ValidationError("duplicate claim_id " + r.claim_id);
    }
    sub.records.push_back(std::move(r));
  });
  return sub;
}

inline Submission parse_submission(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  return read_submission(in);
}

inline Submission load_submission(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open submission file " + path.string());
  return read_submission(in);
}

inline std::string serialize_submission(const Submission& sub) {
  std::string out;
  for (const auto& r : sub.records) out += json(r).dump() + "\n";
  return out;
}

}  // namespace averimatec
