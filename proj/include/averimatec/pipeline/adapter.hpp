#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "averimatec/core/errors.hpp"
#include "averimatec/core/model.hpp"

namespace averimatec::pipeline {

/// One call to an LLM/MLLM. `task` and `fields` are the structured inputs the prompt
/// was rendered from; mocks and replay key on those, never on the prompt wording.
struct ModelRequest {
  std::string task;
  std::map<std::string, std::string> fields;
  std::string prompt;
  std::vector<Base64Image> images;

  /// Stable identity of the structured inputs (task, fields, image digests).
  std::string key() const {
    json j{{"task", task}, {"fields", fields}};
    auto& digests = j["images"] = json::array();
    for (const auto& img : images) digests.push_back(text::sha256_hex(img.data));
    return text::sha256_hex(j.dump());
  }
};

/// Text-in/text-out model backend. Throws AdapterError on failure.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(const ModelRequest& request) = 0;
};

/// Adapter backed by a pure function; the usual way to build test doubles.
class FunctionAdapter final : public ModelAdapter {
 public:
  using Fn = std::function<std::string(const ModelRequest&)>;

  FunctionAdapter(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  std::string name() const override { return name_; }
  std::string complete(const ModelRequest& request) override { return fn_(request); }

 private:
  std::string name_;
  Fn fn_;
};

/// Counts calls per task and forwards to an inner adapter.
class CountingAdapter final : public ModelAdapter {
 public:
  explicit CountingAdapter(ModelAdapter& inner) : inner_(inner) {}

  std::string name() const override { return inner_.name(); }
  std::string complete(const ModelRequest& request) override {
    {
      std::lock_guard lock(mu_);
      ++calls_[request.task];
    }
    return inner_.complete(request);
  }
  std::size_t calls(const std::string& task) const {
    std::lock_guard lock(mu_);
    auto it = calls_.find(task);
    return it == calls_.end() ? 0 : it->second;
  }

 private:
  ModelAdapter& inner_;
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> calls_;
};

/// Splits model output into items: one per non-empty line, with list markers
/// ("1.", "2)", "-", "*", "•") removed.
inline std::vector<std::string> parse_list(std::string_view output) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= output.size()) {
    auto end = output.find('\n', start);
    if (end == std::string_view::npos) end = output.size();
    auto line = text::trim(output.substr(start, end - start));
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) {
      line = text::trim(std::string_view(line).substr(i + 1));
    } else if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) {
      line = text::trim(std::string_view(line).substr(2));
    } else if (line.rfind("\xE2\x80\xA2", 0) == 0) {
      line = text::trim(std::string_view(line).substr(3));
    }
    if (!line.empty()) items.push_back(std::move(line));
    if (end == output.size()) break;
    start = end + 1;
  }
  return items;
}

}  // namespace averimatec::pipeline
