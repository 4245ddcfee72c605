#pragma once

#include <map>
#include <string>
#include <vector>

#include "averimatec/core/model.hpp"
#include "averimatec/core/validation.hpp"

namespace averimatec::scoring {

/// Cuts the text to `max_tokens` whitespace tokens. The kept prefix is the original text
/// up to the end of the last kept token. Images whose placeholder was cut are dropped and
/// the remaining placeholders renumbered 1..m in image order.
inline EvidenceItem truncate_evidence(const EvidenceItem& ev, std::size_t max_tokens,
                                      text::WhitespaceRule rule = text::WhitespaceRule::Unicode) {
  EvidenceItem out = ev;
  auto spans = text::whitespace_spans(ev.text, rule);
  if (spans.size() > max_tokens) {
    out.text = max_tokens == 0 ? std::string{} : ev.text.substr(0, spans[max_tokens - 1].end);
  }
  auto placeholders = text::find_placeholders(out.text);
  std::vector<bool> referenced(ev.images.size(), false);
  for (const auto& ph : placeholders) {
    if (ph.index >= 1 && ph.index <= ev.images.size()) referenced[ph.index - 1] = true;
  }
  std::map<std::size_t, std::size_t> renumber;
  out.images.clear();
  for (std::size_t i = 0; i < ev.images.size(); ++i) {
    if (!referenced[i]) continue;
    out.images.push_back(ev.images[i]);
    renumber[i + 1] = out.images.size();
  }
  std::string rebuilt;
  std::size_t pos = 0;
  for (const auto& ph : placeholders) {
    rebuilt += out.text.substr(pos, ph.pos - pos);
    auto it = renumber.find(ph.index);
    rebuilt += it == renumber.end() ? out.text.substr(ph.pos, ph.length) : text::placeholder(it->second);
    pos = ph.pos + ph.length;
  }
  rebuilt += out.text.substr(pos);
  out.text = std::move(rebuilt);
  return out;
}

/// Applies the evidence caps: the first `max_evidence` items per claim are kept and each
/// is cut to `max_tokens` tokens. Idempotent.
inline Submission normalize_submission(const Submission& sub, const SubmissionCaps& caps = {}) {
  Submission out = sub;
  for (auto& r : out.records) {
    if (r.evidence.size() > caps.max_evidence) r.evidence.resize(caps.max_evidence);
    for (auto& ev : r.evidence) ev = truncate_evidence(ev, caps.max_tokens, caps.tokenizer);
  }
  return out;
}

}  // namespace averimatec::scoring
