#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "spedn/encoder/crf.hpp"
#include "spedn/encoder/layers.hpp"

namespace spedn::encoder {

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

/// Lines `question<TAB>labels`; the question is tokenized like every other
/// question and must yield one token per label.
std::vector<TaggedSentence> parse_tagged(std::string_view text);
std::vector<TaggedSentence> load_tagged(const std::filesystem::path& file);
std::string format_tagged(const TaggedSentence& s);

/// B-ENT/I-ENT spans as [begin, end). A stray I-ENT opens a span.
std::vector<std::pair<std::size_t, std::size_t>> bio_spans(const std::vector<std::string>& labels);
/// BIO labels covering the given spans.
std::vector<std::string> bio_labels(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& spans);

/// Embeddings, a transformer layer and a BiLSTM, optionally fused, then
/// per-token emission scores decoded by a CRF.
class MentionTagger {
 public:
  MentionTagger(EncoderConfig cfg, Vocab unigrams, Vocab bigrams, std::uint64_t seed = 1);

  tensor::Var emissions(const std::vector<std::string>& tokens) const;
  /// -log P(labels | tokens)
  tensor::Var loss(const TaggedSentence& s) const;
  std::vector<std::string> tag(const std::vector<std::string>& tokens) const;
  std::vector<std::pair<std::size_t, std::size_t>> spans(const std::vector<std::string>& tokens) const;

  const EncoderConfig& config() const { return cfg_; }
  tensor::ParameterStore& params() { return *store_; }
  const tensor::ParameterStore& params() const { return *store_; }
  const tensor::Var& transitions() const { return trans_; }

  /// Writes the checkpoint plus `<file>.meta.json` with config and vocabularies.
  void save(const std::filesystem::path& file) const;
  static MentionTagger load(const std::filesystem::path& file);

 private:
  std::size_t label_id(const std::string& label) const;

  EncoderConfig cfg_;
  std::unique_ptr<tensor::ParameterStore> store_;
  std::unique_ptr<TokenEmbedder> embed_;
  std::unique_ptr<TransformerLayer> transformer_;
  std::unique_ptr<BiLstm> bilstm_;
  std::unique_ptr<Fusion> fusion_;
  tensor::Var we_, be_, trans_;
};

struct TaggerTraining {
  std::size_t epochs = 30;
  std::size_t batch = 30;
  double lr = 0.01;
  double clip = 5.0;
  std::uint64_t seed = 1;
};

/// Adam over shuffled mini-batches; `on_epoch(epoch, mean loss)` after each epoch.
MentionTagger train_tagger(const std::vector<TaggedSentence>& data, const EncoderConfig& cfg,
                           const TaggerTraining& opts,
                           const std::function<void(std::size_t, double)>& on_epoch = {});

}  // namespace spedn::encoder
