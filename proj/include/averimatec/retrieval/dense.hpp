#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "averimatec/core/errors.hpp"
#include "averimatec/core/model.hpp"
#include "averimatec/core/text.hpp"
#include "averimatec/retrieval/bm25.hpp"

namespace averimatec::retrieval {

using Vector = std::vector<double>;

/// Maps text and images into a shared d-dimensional space. Implementations must be
/// deterministic per input and always return vectors of length dimension().
/// Failures are reported as AdapterError.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual Vector embed_text(std::string_view text) = 0;
  virtual Vector embed_image(const Base64Image& image) = 0;
};

/// Signed feature hashing of word tokens into `dimension` buckets (FNV-1a).
/// Images are embedded from the word tokens of their decoded bytes, so fixtures can
/// make an image "about" something by embedding words in it.
class HashProjectionProvider final : public EmbeddingProvider {
 public:
  explicit HashProjectionProvider(std::size_t dimension = 64, std::uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {
    if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
  }

  std::string name() const override { return "hash-projection"; }
  std::size_t dimension() const override { return dimension_; }

  Vector embed_text(std::string_view body) override {
    Vector v(dimension_, 0.0);
    for (const auto& tok : text::word_tokens(body)) {
      auto h = fnv1a(tok);
      v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    }
    return v;
  }

  Vector embed_image(const Base64Image& image) override {
    auto bytes = image.decode();
    if (!bytes) throw AdapterError("image is not valid base64");
    return embed_text(*bytes);
  }

 private:
  std::uint64_t fnv1a(std::string_view s) const {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed_;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::size_t dimension_;
  std::uint64_t seed_;
};

inline double norm(const Vector& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dimensions");
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb);
}

struct TextCandidate {
  std::string doc_id;
  std::string text;
};

struct RankedIds {
  std::vector<ScoredDoc> ranked;
  std::vector<std::string> warnings;
};

/// Top-m candidates by cosine(query, candidate). Ties keep input order. When the
/// provider fails or the query embeds to the zero vector, the input order is kept.
inline RankedIds rerank_dense(const std::vector<TextCandidate>& candidates, std::string_view query,
                              EmbeddingProvider& provider, std::size_t m) {
  RankedIds out;
  m = std::min(m, candidates.size());
  auto keep_input_order = [&](std::string warning) {
    out.warnings.push_back(std::move(warning));
    out.ranked.clear();
    for (std::size_t i = 0; i < m; ++i) out.ranked.push_back({candidates[i].doc_id, 0.0});
    return out;
  };
  Vector q;
  std::vector<double> sims(candidates.size());
  try {
    q = provider.embed_text(query);
    if (norm(q) == 0.0) return keep_input_order("query embeds to the zero vector; kept input order");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      sims[i] = cosine(q, provider.embed_text(candidates[i].text));
    }
  } catch (const Error& e) {
    return keep_input_order(std::string("embedding provider failed (") + e.what() +
                            "); kept input order");
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
  for (std::size_t i = 0; i < m; ++i) out.ranked.push_back({candidates[order[i]].doc_id, sims[order[i]]});
  return out;
}

struct ImageCandidate {
  std::string id;
  Base64Image image;
};

/// Top-k images by cosine(text embedding, image embedding); ties by input order.
/// Images the provider cannot read are skipped and reported in `warnings`.
inline RankedIds topk_images(const std::vector<ImageCandidate>& images, std::string_view query,
                             EmbeddingProvider& provider, std::size_t k) {
  RankedIds out;
  if (k == 0 || images.empty()) return out;
  const Vector q = provider.embed_text(query);
  std::vector<std::pair<std::size_t, double>> scored;
  for (std::size_t i = 0; i < images.size(); ++i) {
    try {
      scored.emplace_back(i, cosine(q, provider.embed_image(images[i].image)));
    } catch (const Error& e) {
      out.warnings.push_back("skipped unreadable image " + images[i].id + ": " + e.what());
    }
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) {
    out.ranked.push_back({images[scored[i].first].id, scored[i].second});
  }
  return out;
}

}  // namespace averimatec::retrieval
