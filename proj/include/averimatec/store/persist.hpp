#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "averimatec/core/io.hpp"
#include "averimatec/store/types.hpp"

namespace averimatec::store {

// Store directory layout, version 1:
//
//   <root>/<claim_id>/manifest.json   {"layout_version":1,"claim_id":...,"claim_date":...,"entries":N}
//   <root>/<claim_id>/text.jsonl      one entry per line, in store order; image entries carry
//                                     "media": "<sha256>" naming a file under images/
//   <root>/<claim_id>/images/<sha256>.bin   raw image bytes
inline constexpr int kStoreLayoutVersion = 1;

inline void save_store(const ClaimStore& store, const fs::path& root) {
  if (store.claim_id.empty() || store.claim_id.find_first_of("/\\") != std::string::npos ||
      store.claim_id == "." || store.claim_id == "..") {
    throw ValidationError("claim id '" + store.claim_id + "' cannot name a store directory");
  }
  const auto dir = root / store.claim_id;
  fs::create_directories(dir / "images");
  std::string lines;
  for (const auto& e : store.entries) {
    json j = e;
    if (e.media) {
      auto bytes = e.media->decode();
      if (!bytes) throw ValidationError("entry " + e.url + ": media is not valid base64");
      auto digest = text::sha256_hex(*bytes);
      write_file(dir / "images" / (digest + ".bin"), *bytes);
      j["media"] = digest;
    }
    lines += j.dump() + "\n";
  }
  write_file(dir / "text.jsonl", lines);
  json manifest{{"layout_version", kStoreLayoutVersion},
                {"claim_id", store.claim_id},
                {"claim_date", store.claim_date.str()},
                {"entries", store.entries.size()}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline ClaimStore load_store(const fs::path& dir) {
  auto manifest = json::parse(read_file(dir / "manifest.json"));
  if (manifest.value("layout_version", 0) > kStoreLayoutVersion) {
    throw ParseError("store layout version " + std::to_string(manifest.value("layout_version", 0)) +
                     " is newer than supported");
  }
  ClaimStore store;
  store.claim_id = manifest.at("claim_id").get<std::string>();
  store.claim_date = Date::parse(manifest.at("claim_date").get<std::string>());
  std::ifstream in(dir / "text.jsonl", std::ios::binary);
  if (!in) throw Error("cannot open " + (dir / "text.jsonl").string());
  for_each_jsonl(in, [&](const json& j, std::size_t) {
    auto e = j.get<KnowledgeStoreEntry>();
    if (auto m = j.find("media"); m != j.end() && m->is_string()) {
      auto bytes = read_file(dir / "images" / (m->get<std::string>() + ".bin"));
      if (text::sha256_hex(bytes) != m->get<std::string>()) {
        throw ValidationError("image " + m->get<std::string>() + " does not match its digest");
      }
      e.media = Base64Image{text::base64_encode(bytes)};
    }
    store.entries.push_back(std::move(e));
  });
  return store;
}

/// Every store under `root`, ordered by claim id.
inline std::vector<ClaimStore> load_stores(const fs::path& root) {
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(root)) {
    if (d.is_directory() && fs::exists(d.path() / "manifest.json")) dirs.push_back(d.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<ClaimStore> out;
  for (const auto& d : dirs) out.push_back(load_store(d));
  return out;
}

/// Reads a provided knowledge-store dump: one JSON record per line with "claim_id" and
/// "url", plus either "text" or a "url2text" list of sentences. Records are grouped by
/// claim id; within a claim, file order is kept.
inline std::map<std::string, std::vector<KnowledgeStoreEntry>> read_entries(std::istream& in) {
  std::map<std::string, std::vector<KnowledgeStoreEntry>> out;
  for_each_jsonl(in, [&](const json& j, std::size_t) {
    json record = j;
    if (!record.contains("text") && record.contains("url2text")) {
      std::vector<std::string> parts;
      for (const auto& s : record.at("url2text")) parts.push_back(s.get<std::string>());
      record["text"] = text::join(parts, " ");
    }
    if (!record.contains("claim_id")) throw ValidationError("entry without claim_id");
    if (record["claim_id"].is_number()) record["claim_id"] = std::to_string(record["claim_id"].get<long long>());
    auto e = record.get<KnowledgeStoreEntry>();
    if (e.url.empty()) throw ValidationError("entry without url");
    out[e.claim_id].push_back(std::move(e));
  });
  return out;
}

}  // namespace averimatec::store
