#include "spedn/train/pipeline.hpp"

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::train {

Answer ask(const model::Graph2Seq& m, std::string_view question, const Domain& d, const model::DecodeOptions& opts,
           prep::GraphMode mode, const encoder::MentionTagger* tagger) {
  Answer a;
  std::vector<std::pair<std::size_t, std::size_t>> hints;
  if (tagger) hints = tagger->spans(text::word_tokens(question));
  a.ctx = prep::build_context(question, d.kg, d.entities, hints);
  a.graph = prep::to_question_graph(a.ctx, mode);
  a.decoded = m.decode(a.graph, a.ctx, d.kg, opts);
  if (!a.decoded.complete) {
    a.problem = a.decoded.problem.empty() ? "incomplete decode" : a.decoded.problem;
    return a;
  }
  try {
    a.query = query::assemble(a.decoded.blocks, d.kg);
    a.answer = query::execute(*a.query, d.kg, d.ordinals);
  } catch (const Error& e) {
    a.problem = e.what();
  }
  return a;
}

EvalReport ask_corpus(const model::Graph2Seq& m, const std::vector<CorpusEntry>& corpus, const Domain& d,
                      const model::DecodeOptions& opts, prep::GraphMode mode, const encoder::MentionTagger* tagger) {
  auto gold = prepare(corpus, d, mode);
  std::vector<ExampleResult> results;
  for (const auto& g : gold) {
    auto a = ask(m, g.entry.question, d, opts, mode, tagger);
    auto r = score_prediction(g, a.decoded.blocks, a.decoded.complete, d);
    if (!a.decoded.problem.empty() && r.problem.empty()) r.problem = a.decoded.problem;
    results.push_back(std::move(r));
  }
  return summarize(gold, std::move(results));
}

std::vector<encoder::TaggedSentence> tagged_from_corpus(const std::vector<CorpusEntry>& corpus, const Domain& d) {
  std::vector<encoder::TaggedSentence> out;
  for (const auto& e : corpus) {
    auto tokens = text::word_tokens(e.question);
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& m : prep::link_entities(tokens, d.kg, d.entities)) spans.emplace_back(m.begin, m.end);
    out.push_back({tokens, encoder::bio_labels(tokens.size(), spans)});
  }
  return out;
}

}  // namespace spedn::train
