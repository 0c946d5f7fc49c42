#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spedn/encoder/tagger.hpp"
#include "spedn/train/trainer.hpp"

namespace spedn::train {

/// One question taken through preprocessing, decoding, assembly and execution.
struct Answer {
  prep::QuestionContext ctx;
  prep::QuestionGraph graph;
  model::DecodeResult decoded;
  std::optional<query::SemanticQueryGraph> query;
  std::optional<query::AnswerSet> answer;
  /// Why assembly or execution failed; empty on success.
  std::string problem;
};

/// `tagger`, when given, contributes mention spans to entity linking.
Answer ask(const model::Graph2Seq& m, std::string_view question, const Domain& d, const model::DecodeOptions& opts,
           prep::GraphMode mode, const encoder::MentionTagger* tagger = nullptr);

/// Runs `ask` on every question and scores the decoded blocks against the
/// gold ones. Without a tagger this reproduces `evaluate` exactly.
EvalReport ask_corpus(const model::Graph2Seq& m, const std::vector<CorpusEntry>& corpus, const Domain& d,
                      const model::DecodeOptions& opts, prep::GraphMode mode,
                      const encoder::MentionTagger* tagger = nullptr);

/// Mention-tagger training data: lexicon-linked spans as BIO labels.
std::vector<encoder::TaggedSentence> tagged_from_corpus(const std::vector<CorpusEntry>& corpus, const Domain& d);

}  // namespace spedn::train
