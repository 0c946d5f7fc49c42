#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spedn/model/graph2seq.hpp"
#include "spedn/train/corpus.hpp"

namespace spedn::train {

struct TrainConfig {
  double lr = 0.01;
  std::size_t batch = 30;
  std::size_t epochs = 80;
  double dropout = 0.2;
  std::size_t beam = 5;
  std::uint64_t seed = 1;
  model::OutputMode mode = model::OutputMode::Decomposed;
  bool controller = true;
  prep::GraphMode graph = prep::GraphMode::Chain;
  double clip = 5.0;
  model::GraphEncoderConfig encoder;
  std::size_t hidden = 256;
  std::size_t symbol_dim = 100;
  std::size_t attention_dim = 100;
  /// End as soon as the held-out exact match reaches 1.
  bool stop_when_perfect = false;
  /// With the controller on, also decode the held-out split without it each
  /// epoch. Training is unaffected, so one run scores both settings.
  bool track_unguided = false;
  /// When set, the best checkpoint is written here whenever it improves.
  std::filesystem::path checkpoint;

  void validate() const;
  model::DecodeOptions decode_options() const { return {beam, controller, 0}; }
};

/// "base" (atomic symbols, no controller), "mp" (decomposed) or
/// "mp+controller" (decomposed with masking).
TrainConfig preset(const std::string& name);
std::string preset_name(const TrainConfig& c);

/// A corpus entry with its question context, graph and gold answer.
struct Prepared {
  CorpusEntry entry;
  prep::QuestionContext ctx;
  prep::QuestionGraph graph;
  query::AnswerSet answer;
};

struct GoldProblem {
  std::size_t index;
  std::string question;
  std::string message;
};

/// Gold sequences that fail to validate, assemble or execute.
std::vector<GoldProblem> check_gold(const std::vector<CorpusEntry>& corpus, const Domain& d);
/// Throws Error(Schema) listing every offending example.
std::vector<Prepared> prepare(const std::vector<CorpusEntry>& corpus, const Domain& d, prep::GraphMode mode);

struct CorpusStats {
  std::size_t examples = 0;
  std::size_t with_logical_form = 0;
  double mean_question_tokens = 0;
  /// Over examples that carry a logical form.
  double mean_lf_tokens = 0;
  double mean_blocks = 0;
  /// block count -> examples
  std::map<std::size_t, std::size_t> block_lengths;
  /// blocks per pattern, in blocks::kAllPatterns order
  std::array<std::size_t, 6> patterns{};
};

CorpusStats corpus_stats(const std::vector<CorpusEntry>& corpus);
/// `key=value` lines.
std::string stats_summary(const CorpusStats& s);

struct ExampleResult {
  std::string question;
  blocks::BlockSequence gold;
  blocks::BlockSequence decoded;
  bool exact = false;
  bool execution = false;
  bool assembles = false;
  std::string problem;
};

struct EvalReport {
  std::size_t examples = 0;
  double exact_match = 0;
  double execution = 0;
  double assemblability = 0;
  CorpusStats stats;
  std::vector<ExampleResult> results;

  /// `key=value` lines.
  std::string summary() const;
  std::string to_json() const;
};

/// Compares one prediction with its gold entry. `complete` is false when
/// decoding ran out of steps.
ExampleResult score_prediction(const Prepared& gold, const blocks::BlockSequence& decoded, bool complete,
                               const Domain& d);
EvalReport summarize(const std::vector<Prepared>& corpus, std::vector<ExampleResult> results);

/// Decodes every example (in parallel) and scores it.
EvalReport evaluate(const model::Graph2Seq& m, const std::vector<Prepared>& corpus, const Domain& d,
                    const model::DecodeOptions& opts);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0;
  double em = 0;
  double exec = 0;
  std::optional<double> unguided_em;
  /// epoch=<n> loss=<f> em=<f> exec=<f>
  std::string line() const;
};

struct TrainResult {
  std::unique_ptr<model::Graph2Seq> model;
  std::vector<EpochLog> history;
  double best_em = 0;
  std::size_t best_epoch = 0;
  /// Best held-out exact match without the controller, when tracked.
  std::optional<double> best_unguided_em;
};

/// Builds vocabularies and a model from the training split, then runs Adam
/// over seeded shuffled batches, evaluating `heldout` after each epoch. The
/// returned model carries the parameters of the epoch with the strictly
/// best held-out exact match.
TrainResult train(const std::vector<CorpusEntry>& train_set, const std::vector<CorpusEntry>& heldout, const Domain& d,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {});

/// A model initialised from the corpus without training.
std::unique_ptr<model::Graph2Seq> build_model(const std::vector<Prepared>& train_set, const Domain& d,
                                              const TrainConfig& cfg);

}  // namespace spedn::train
