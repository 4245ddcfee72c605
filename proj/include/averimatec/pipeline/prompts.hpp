#pragma once

#include <map>
#include <string>

#include "averimatec/core/io.hpp"

namespace averimatec::pipeline {

/// Task names of the pipeline's model calls.
namespace tasks {
inline constexpr const char* kQuestions = "qg.questions";
inline constexpr const char* kNextQuestion = "qg.next_question";
inline constexpr const char* kClassify = "qa.classify";
inline constexpr const char* kVisualQa = "qa.visual";
inline constexpr const char* kRagAnswer = "qa.rag";
inline constexpr const char* kImageSelect = "qa.image_select";
inline constexpr const char* kVerdict = "verify.verdict";
inline constexpr const char* kJustification = "justify";
}  // namespace tasks

/// Prompt templates keyed by task. `{name}` is replaced by the request field `name`;
/// unknown names are left as-is. A directory of `<task>.txt` files overrides the
/// built-in set, which is version 1.
class PromptSet {
 public:
  PromptSet() : version_("v1"), templates_(defaults()) {}

  static PromptSet load(const fs::path& dir) {
    PromptSet p;
    p.version_ = dir.filename().string();
    for (auto& [task, body] : p.templates_) {
      auto file = dir / (task + ".txt");
      if (fs::exists(file)) body = read_file(file);
    }
    return p;
  }

  const std::string& version() const { return version_; }

  std::string render(const std::string& task, const std::map<std::string, std::string>& fields) const {
    auto it = templates_.find(task);
    if (it == templates_.end()) throw Error("no prompt template for task '" + task + "'");
    const auto& t = it->second;
    std::string out;
    for (std::size_t i = 0; i < t.size();) {
      if (t[i] == '{') {
        auto close = t.find('}', i);
        if (close != std::string::npos) {
          auto f = fields.find(t.substr(i + 1, close - i - 1));
          if (f != fields.end()) {
            out += f->second;
            i = close + 1;
            continue;
          }
        }
      }
      out.push_back(t[i++]);
    }
    return out;
  }

  const std::map<std::string, std::string>& templates() const { return templates_; }

 private:
  static std::map<std::string, std::string> defaults() {
    return {
        {tasks::kQuestions,
         "You are a fact-checker. Write five evidence-seeking questions that would help verify the "
         "image-text claim below. Number them 1 to 5.\n\nExamples of annotated questions for similar "
         "claims:\n{examples}\n\nClaim ({date}): {claim}\nThe claim images are attached."},
        {tasks::kNextQuestion,
         "You are a fact-checker. Given the claim and the questions answered so far, write the next "
         "evidence-seeking question, or nothing if the evidence is sufficient.\n\nExamples:\n{examples}\n\n"
         "Claim ({date}): {claim}\nAnswered so far:\n{history}"},
        {tasks::kClassify,
         "Classify how the question should be answered. Reply with exactly one of:\n"
         "VisualQA - about visual cues in the claim image(s), answerable by looking at them;\n"
         "ImageRelatedRAG - about the claim image(s) but needs external knowledge (provenance, location, date);\n"
         "TextualRAG - a purely textual question;\n"
         "ImageAnswerSelection - the answer itself should be an image.\n\nClaim: {claim}\nQuestion: {question}"},
        {tasks::kVisualQa,
         "Answer the question using only the attached claim image(s).\n\nClaim: {claim}\nQuestion: {question}"},
        {tasks::kRagAnswer,
         "Answer the question using the numbered evidence snippets. Reply with the answer on the first "
         "line, then a line 'SOURCE: <number>' citing the snippet that supports it.\n\n"
         "Claim: {claim}\nQuestion: {question}\n\nEvidence:\n{evidence}"},
        {tasks::kImageSelect,
         "Which of the attached candidate images best answers the question? Reply with its number.\n\n"
         "Claim: {claim}\nQuestion: {question}\nCandidates: {candidates}"},
        {tasks::kVerdict,
         "Decide the verdict of the claim from all question-answer pairs together. Labels:\n"
         "Supported - the evidence supports the claim;\n"
         "Refuted - the evidence contradicts the claim;\n"
         "Not Enough Evidence - the evidence is insufficient to decide;\n"
         "Conflicting Evidence/Cherrypicking - evidence both supports and refutes, or the claim is "
         "technically true but misleading.\nReply with the label only.\n\nClaim ({date}): {claim}\n\n{qas}"},
        {tasks::kJustification,
         "Explain in a short paragraph why the claim is labelled '{verdict}', based on the "
         "question-answer pairs.\n\nClaim: {claim}\n\n{qas}"},
    };
  }

  std::string version_;
  std::map<std::string, std::string> templates_;
};

}  // namespace averimatec::pipeline
