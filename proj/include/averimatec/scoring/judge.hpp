#pragma once

#include <atomic>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "averimatec/core/io.hpp"
#include "averimatec/core/model.hpp"

namespace averimatec::scoring {

/// Whether one reference item is covered, and by which prediction.
struct Coverage {
  bool covered = false;
  std::optional<std::size_t> matched;

  bool operator==(const Coverage&) const = default;
};

/// Reference-based judge. `coverage` returns one entry per reference; `image_similarity`
/// returns an integer in [0, 10]. Failures throw AdapterError.
class JudgeAdapter {
 public:
  virtual ~JudgeAdapter() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Coverage> coverage(const std::vector<std::string>& references,
                                         const std::vector<std::string>& predictions) = 0;
  virtual int image_similarity(const Base64Image& a, const Base64Image& b) = 0;
};

/// Case, whitespace and punctuation folded; image placeholders removed.
inline std::string judge_normalize(std::string_view s) {
  std::string stripped;
  std::size_t pos = 0;
  for (const auto& ph : text::find_placeholders(s)) {
    stripped.append(s.substr(pos, ph.pos - pos));
    stripped.push_back(' ');
    pos = ph.pos + ph.length;
  }
  stripped.append(s.substr(pos));
  return text::join(text::word_tokens(stripped), " ");
}

/// Offline judge. A reference is covered by the first prediction whose normalized text
/// contains it or is contained in it (empty texts never match). Identical images score
/// 10; other pairs use the configured table (unordered digest pairs) or 0.
class MockJudge final : public JudgeAdapter {
 public:
  MockJudge() = default;

  std::string name() const override { return "mock-judge"; }

  std::vector<Coverage> coverage(const std::vector<std::string>& references,
                                 const std::vector<std::string>& predictions) override {
    std::vector<std::string> preds;
    for (const auto& p : predictions) preds.push_back(judge_normalize(p));
    std::vector<Coverage> out;
    for (const auto& r : references) {
      auto ref = judge_normalize(r);
      Coverage c;
      for (std::size_t i = 0; i < preds.size() && !ref.empty(); ++i) {
        if (preds[i].empty()) continue;
        if (contains_words(preds[i], ref) || contains_words(ref, preds[i])) {
          c = {true, i};
          break;
        }
      }
      out.push_back(c);
    }
    return out;
  }

  int image_similarity(const Base64Image& a, const Base64Image& b) override {
    auto da = a.decode(), db = b.decode();
    if (!da || !db) throw AdapterError("image is not valid base64");
    if (*da == *db) return 10;
    auto ka = text::sha256_hex(*da), kb = text::sha256_hex(*db);
    if (auto it = scores_.find(std::minmax(ka, kb)); it != scores_.end()) return it->second;
    return 0;
  }

  /// Fixes the similarity score of an (unordered) image pair.
  void set_similarity(const Base64Image& a, const Base64Image& b, int score) {
    auto da = a.decode(), db = b.decode();
    if (!da || !db) throw ValidationError("image is not valid base64");
    scores_[std::minmax(text::sha256_hex(*da), text::sha256_hex(*db))] = score;
  }

 private:
  static bool contains_words(const std::string& hay, const std::string& needle) {
    auto p = hay.find(needle);
    while (p != std::string::npos) {
      bool left = p == 0 || hay[p - 1] == ' ';
      bool right = p + needle.size() == hay.size() || hay[p + needle.size()] == ' ';
      if (left && right) return true;
      p = hay.find(needle, p + 1);
    }
    return false;
  }

  std::map<std::pair<std::string, std::string>, int> scores_;
};

/// Memoizes a judge by input digest. Concurrent identical requests share one backend
/// call. With a cache directory, results also persist as `<digest>.json` files.
class CachingJudge final : public JudgeAdapter {
 public:
  explicit CachingJudge(JudgeAdapter& inner, std::optional<fs::path> dir = std::nullopt)
      : inner_(inner), dir_(std::move(dir)) {
    if (dir_) fs::create_directories(*dir_);
  }

  std::string name() const override { return inner_.name(); }

  std::vector<Coverage> coverage(const std::vector<std::string>& references,
                                 const std::vector<std::string>& predictions) override {
    json key{{"kind", "coverage"}, {"judge", inner_.name()}, {"references", references}, {"predictions", predictions}};
    auto result = cached(key, [&] {
      json arr = json::array();
      for (const auto& c : inner_.coverage(references, predictions)) {
        arr.push_back({{"covered", c.covered}, {"matched", c.matched ? json(*c.matched) : json(nullptr)}});
      }
      return arr;
    });
    std::vector<Coverage> out;
    for (const auto& c : result) {
      Coverage cov;
      cov.covered = c.at("covered").get<bool>();
      if (!c.at("matched").is_null()) cov.matched = c.at("matched").get<std::size_t>();
      out.push_back(cov);
    }
    return out;
  }

  int image_similarity(const Base64Image& a, const Base64Image& b) override {
    json key{{"kind", "image"}, {"judge", inner_.name()}, {"a", text::sha256_hex(a.data)}, {"b", text::sha256_hex(b.data)}};
    return cached(key, [&] { return json(inner_.image_similarity(a, b)); }).get<int>();
  }

  /// Requests that reached the wrapped judge.
  std::size_t misses() const { return misses_; }
  std::size_t hits() const { return hits_; }

 private:
  template <typename Fn>
  json cached(const json& key_json, Fn&& compute) {
    const auto key = text::sha256_hex(key_json.dump());
    std::shared_future<json> future;
    std::promise<json> promise;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) {
        future = it->second;
        ++hits_;
      } else {
        future = promise.get_future().share();
        memo_.emplace(key, future);
        owner = true;
      }
    }
    if (!owner) return future.get();
    try {
      std::optional<json> value;
      if (dir_ && fs::exists(*dir_ / (key + ".json"))) {
        value = json::parse(read_file(*dir_ / (key + ".json")));
        ++hits_;
      } else {
        ++misses_;
        value = compute();
        if (dir_) write_file(*dir_ / (key + ".json"), value->dump());
      }
      promise.set_value(*value);
    } catch (...) {
      // Failures are not cached: the next caller retries.
      promise.set_exception(std::current_exception());
      std::lock_guard lock(mu_);
      memo_.erase(key);
    }
    return future.get();
  }

  JudgeAdapter& inner_;
  std::optional<fs::path> dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_future<json>> memo_;
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace averimatec::scoring
