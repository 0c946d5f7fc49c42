#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "spedn/model/controller.hpp"
#include "spedn/prep/context.hpp"
#include "spedn/tensor/params.hpp"

namespace spedn::model {

struct GraphEncoderConfig {
  std::size_t hops = 3;
  std::size_t node_dim = 100;
  /// Max-pool over final node states; mean-pool when false.
  bool max_pool = true;
  void validate() const;
};

struct DecoderConfig {
  std::size_t hidden = 256;
  std::size_t symbol_dim = 100;
  std::size_t attention_dim = 100;
  double dropout = 0.2;
  OutputMode mode = OutputMode::Decomposed;
  void validate() const;
};

struct DecodeOptions {
  std::size_t beam = 5;
  bool controller = true;
  /// 0 uses the model's limit (8x the mean gold length seen in training).
  std::size_t step_limit = 0;
};

struct DecodeResult {
  blocks::BlockSequence blocks;
  std::vector<std::string> symbols;
  double log_prob = 0;
  /// Log-probability divided by the symbol count.
  double score = 0;
  /// </s> was reached within the step limit.
  bool complete = false;
  /// Complete, well formed and assembled without error.
  bool assembles = false;
  std::string problem;
};

/// Node vocabulary over question-graph symbols; unknown symbols map to <unk>.
Vocab build_node_vocab(const std::vector<const prep::QuestionGraph*>& graphs, const kg::KnowledgeGraph& kg);

class Graph2Seq {
 public:
  struct Encoded {
    tensor::Var nodes;  // n x node_dim
    tensor::Var graph;  // 1 x hidden
    tensor::Var keys;   // n x attention_dim, nodes projected for attention
  };

  struct State {
    tensor::Var h;           // 1 x hidden
    tensor::Var context;     // 1 x node_dim
    tensor::Var prev_block;  // 1 x symbol_dim
    std::size_t prev_symbol = 0;
  };

  Graph2Seq(GraphEncoderConfig enc, DecoderConfig dec, Vocab nodes, OutputVocabulary out, std::uint64_t seed = 1);

  /// Throws Error(Model) for an empty graph.
  Encoded encode_graph(const prep::QuestionGraph& g) const;
  State initial_state(const Encoded& e) const;
  /// Attention weights (1 x n) and context (1 x node_dim) for hidden state h.
  std::pair<tensor::Var, tensor::Var> attend(const Encoded& e, const tensor::Var& h) const;
  /// One GRU step from `s`; returns the logits (1 x V) and the new state.
  /// `rng` drives dropout and is only read when `train` is set.
  tensor::Var decode_step(const Encoded& e, State& s, bool train, std::mt19937_64* rng) const;
  /// Input-feeding embedding of a finished block given its symbol ids
  /// (components without </b>, or the single atomic symbol).
  tensor::Var embed_block(const std::vector<std::size_t>& symbols) const;
  /// Applies an emitted symbol to the input side of the state.
  void feed(State& s, std::size_t symbol, const std::vector<std::size_t>& block_so_far) const;

  /// -log P(target | graph) under teacher forcing, summed over steps (1 x 1).
  tensor::Var sequence_nll(const prep::QuestionGraph& g, const std::vector<std::size_t>& target, bool train,
                           std::mt19937_64* rng) const;
  /// log P(gold | question) under teacher forcing, without dropout.
  double sequence_log_prob(const prep::QuestionGraph& g, const blocks::BlockSequence& gold,
                           const prep::QuestionContext& ctx) const;

  DecodeResult decode(const prep::QuestionGraph& g, const prep::QuestionContext& ctx, const kg::KnowledgeGraph& kg,
                      const DecodeOptions& opts) const;
  /// Argmax decoding, kept separate from the beam as a reference.
  DecodeResult greedy(const prep::QuestionGraph& g, const prep::QuestionContext& ctx, const kg::KnowledgeGraph& kg,
                      bool controller, std::size_t step_limit = 0) const;

  const GraphEncoderConfig& encoder_config() const { return enc_; }
  const DecoderConfig& decoder_config() const { return dec_; }
  const Vocab& node_vocab() const { return nodes_; }
  const OutputVocabulary& output_vocab() const { return out_; }
  tensor::ParameterStore& params() { return *store_; }
  const tensor::ParameterStore& params() const { return *store_; }

  std::size_t step_limit() const { return step_limit_; }
  void set_step_limit(std::size_t n) { step_limit_ = n; }

  /// Checkpoint plus `<file>.meta.json` with configs, vocabularies and templates.
  void save(const std::filesystem::path& file) const;
  static Graph2Seq load(const std::filesystem::path& file);

 private:
  std::size_t limit_for(const CandidateSet& cands, std::size_t requested) const;
  DecodeResult finish(const std::vector<std::size_t>& symbols, const DecodeTrack& track, double log_prob,
                      bool complete) const;

  GraphEncoderConfig enc_;
  DecoderConfig dec_;
  Vocab nodes_;
  OutputVocabulary out_;
  std::unique_ptr<tensor::ParameterStore> store_;
  std::size_t step_limit_ = 64;

  tensor::Var node_emb_;
  std::vector<tensor::Var> hop_w_;
  tensor::Var proj_w_, proj_b_;
  tensor::Var sym_emb_;
  tensor::Var gru_wx_, gru_wh_, gru_bx_, gru_bh_;
  tensor::Var att_w_, att_u_, att_v_;
  tensor::Var out_w_, out_b_;
};

}  // namespace spedn::model
