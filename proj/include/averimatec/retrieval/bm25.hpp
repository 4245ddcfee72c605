#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "averimatec/core/errors.hpp"
#include "averimatec/core/text.hpp"

namespace averimatec::retrieval {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

/// Okapi BM25 over an in-memory inverted index.
///
///   score(q, d) = sum_{t in q} idf(t) * tf(t,d) * (k1 + 1) / (tf(t,d) + k1 * (1 - b + b * |d| / avgdl))
///   idf(t)      = ln((N - df(t) + 0.5) / (df(t) + 0.5) + 1)
///
/// Query terms are not deduplicated: a repeated term contributes once per occurrence.
/// Building is single-writer; a built index is safe for concurrent const queries.
class Bm25Index {
 public:
  explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

  /// Adds a document; doc ids must be unique. Returns its position.
  std::size_t add(std::string doc_id, std::span<const std::string> tokens) {
    if (positions_.contains(doc_id)) throw ValidationError("duplicate doc id " + doc_id);
    const std::size_t pos = docs_.size();
    Doc doc;
    doc.id = doc_id;
    doc.length = tokens.size();
    for (const auto& t : tokens) ++doc.tf[t];
    for (const auto& [term, tf] : doc.tf) {
      ++df_[term];
      postings_[term].push_back({pos, tf});
    }
    total_length_ += doc.length;
    positions_.emplace(std::move(doc_id), pos);
    docs_.push_back(std::move(doc));
    return pos;
  }

  std::size_t add_text(std::string doc_id, std::string_view body) {
    auto tokens = text::word_tokens(body);
    return add(std::move(doc_id), tokens);
  }

  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  const Bm25Params& params() const noexcept { return params_; }

  double avgdl() const noexcept {
    return docs_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(docs_.size());
  }

  std::size_t df(const std::string& term) const {
    auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
  }

  bool contains(std::string_view doc_id) const { return positions_.contains(std::string(doc_id)); }

  const std::string& doc_id(std::size_t pos) const { return docs_.at(pos).id; }
  std::size_t doc_length(std::size_t pos) const { return docs_.at(pos).length; }

  double idf(const std::string& term) const {
    const double n = static_cast<double>(docs_.size());
    const double d = static_cast<double>(df(term));
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
  }

  /// Throws ValidationError if `doc_id` is not indexed.
  double score(std::span<const std::string> query, std::string_view doc_id) const {
    auto it = positions_.find(std::string(doc_id));
    if (it == positions_.end()) throw ValidationError("unknown doc id " + std::string(doc_id));
    const Doc& doc = docs_[it->second];
    double total = 0.0;
    for (const auto& term : query) {
      auto tf_it = doc.tf.find(term);
      if (tf_it == doc.tf.end()) continue;
      total += term_weight(term, tf_it->second, doc.length);
    }
    return total;
  }

  /// Scores of every document, indexed by position.
  std::vector<double> score_all(std::span<const std::string> query) const {
    std::vector<double> scores(docs_.size(), 0.0);
    for (const auto& term : query) {
      auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      for (const auto& p : it->second) {
        scores[p.doc] += term_weight(term, p.tf, docs_[p.doc].length);
      }
    }
    return scores;
  }

  /// The k best documents by score, ties by ascending doc id. k > size() ranks everything.
  std::vector<ScoredDoc> topk(std::span<const std::string> query, std::size_t k) const {
    if (k == 0 || docs_.empty()) return {};
    auto scores = score_all(query);
    std::vector<std::size_t> order(docs_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto better = [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return docs_[a].id < docs_[b].id;
    };
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    std::vector<ScoredDoc> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back({docs_[order[i]].id, scores[order[i]]});
    return out;
  }

  std::vector<ScoredDoc> topk_text(std::string_view query, std::size_t k) const {
    auto tokens = text::word_tokens(query);
    return topk(tokens, k);
  }

  // Binary layout (little-endian):
  //   "AVBM25\0\0" | u32 version | f64 k1 | f64 b | u64 N |
  //   N x ( str id | u64 length | u64 T | T x ( str term | u64 tf ) )
  // where str = u64 byte length + bytes. Terms within a document are sorted.
  static constexpr std::uint32_t kFormatVersion = 1;

  void save(std::ostream& out) const {
    out.write("AVBM25\0\0", 8);
    put<std::uint32_t>(out, kFormatVersion);
    put<double>(out, params_.k1);
    put<double>(out, params_.b);
    put<std::uint64_t>(out, docs_.size());
    for (const auto& d : docs_) {
      put_str(out, d.id);
      put<std::uint64_t>(out, d.length);
      std::vector<std::pair<std::string, std::size_t>> terms(d.tf.begin(), d.tf.end());
      std::sort(terms.begin(), terms.end());
      put<std::uint64_t>(out, terms.size());
      for (const auto& [term, tf] : terms) {
        put_str(out, term);
        put<std::uint64_t>(out, tf);
      }
    }
    if (!out) throw Error("failed to write BM25 index");
  }

  static Bm25Index load(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string_view(magic, 6) != "AVBM25") throw ParseError("not a BM25 index file");
    auto version = get<std::uint32_t>(in);
    if (version != kFormatVersion) {
      throw ParseError("unsupported BM25 index version " + std::to_string(version));
    }
    Bm25Params params;
    params.k1 = get<double>(in);
    params.b = get<double>(in);
    Bm25Index index(params);
    auto n = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto id = get_str(in);
      auto length = get<std::uint64_t>(in);
      auto terms = get<std::uint64_t>(in);
      std::vector<std::string> tokens;
      tokens.reserve(length);
      for (std::uint64_t t = 0; t < terms; ++t) {
        auto term = get_str(in);
        auto tf = get<std::uint64_t>(in);
        tokens.insert(tokens.end(), tf, term);
      }
      if (tokens.size() != length) throw ParseError("BM25 index: inconsistent document length");
      index.add(std::move(id), tokens);
    }
    return index;
  }

 private:
  struct Doc {
    std::string id;
    std::size_t length = 0;
    std::unordered_map<std::string, std::size_t> tf;
  };
  struct Posting {
    std::size_t doc;
    std::size_t tf;
  };

  double term_weight(const std::string& term, std::size_t tf, std::size_t length) const {
    const double f = static_cast<double>(tf);
    const double norm = params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(length) / avgdl());
    return idf(term) * f * (params_.k1 + 1.0) / (f + norm);
  }

  template <typename T>
  static void put(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little, "index format is little-endian");
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
  }
  static void put_str(std::ostream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename T>
  static T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) throw ParseError("BM25 index: truncated file");
    return value;
  }
  static std::string get_str(std::istream& in) {
    auto n = get<std::uint64_t>(in);
    if (n > (1u << 30)) throw ParseError("BM25 index: string too long");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw ParseError("BM25 index: truncated file");
    return s;
  }

  Bm25Params params_;
  std::vector<Doc> docs_;
  std::unordered_map<std::string, std::size_t> positions_;
  std::unordered_map<std::string, std::size_t> df_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::size_t total_length_ = 0;
};

struct ChunkOptions {
  std::size_t window = 256;
  std::size_t overlap = 64;
};

/// Overlapping fixed-size token windows. A document shorter than one window is one chunk.
inline std::vector<std::vector<std::string>> chunk_tokens(const std::vector<std::string>& tokens,
                                                          ChunkOptions opts = {}) {
  if (opts.window == 0 || opts.overlap >= opts.window) {
    throw ValidationError("chunk window must exceed overlap");
  }
  std::vector<std::vector<std::string>> chunks;
  const std::size_t stride = opts.window - opts.overlap;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(tokens.size(), start + opts.window);
    chunks.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                        tokens.begin() + static_cast<std::ptrdiff_t>(end));
    if (end == tokens.size()) break;
  }
  return chunks;
}

}  // namespace averimatec::retrieval
