#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spedn/common/vocab.hpp"
#include "spedn/tensor/params.hpp"

namespace spedn::encoder {

using tensor::ParameterStore;
using tensor::Tensor;
using tensor::Var;

struct EncoderConfig {
  std::size_t d = 32;     // model width
  std::size_t d_k = 8;    // per-head width
  std::size_t heads = 4;
  std::size_t d_ff = 64;
  bool relative = true;   // relative-position attention instead of absolute
  bool fusion = true;     // gate the transformer and BiLSTM features together
  std::vector<std::string> labels{"B-ENT", "I-ENT", "O"};

  /// Throws Error(Model) unless d = heads * d_k, d is even and all sizes are positive.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Token embeddings

inline constexpr const char* kUnknown = "<unk>";
inline constexpr const char* kBoundary = "</w>";

/// Unigram and bigram lookups, concatenated per token. Bigram i pairs token i
/// with token i+1, and the last token pairs with the boundary symbol.
class TokenEmbedder {
 public:
  TokenEmbedder(ParameterStore& store, const std::string& prefix, const Vocab& unigrams, const Vocab& bigrams,
                std::size_t d);

  static std::string bigram(const std::vector<std::string>& tokens, std::size_t i);
  /// Collects both vocabularies from training sentences.
  static std::pair<Vocab, Vocab> build_vocabs(const std::vector<std::vector<std::string>>& sentences);

  Var operator()(const std::vector<std::string>& tokens) const;
  std::size_t width() const { return d_; }
  const Vocab& unigrams() const { return unigrams_; }
  const Vocab& bigrams() const { return bigrams_; }

 private:
  Vocab unigrams_;
  Vocab bigrams_;
  Var uni_, bi_;
  std::size_t d_;
};

// ---------------------------------------------------------------------------
// Position encodings

/// Interleaved sin/cos of t / 10000^(2i/d). `t` may be negative.
std::vector<double> sinusoid(double t, std::size_t d);
/// Rows sinusoid(first + r, d) for r in [0, n).
Tensor position_matrix(std::size_t n, std::size_t d, double first = 0);

// ---------------------------------------------------------------------------
// Attention

struct AttentionOutput {
  Var out;                       // n x d after the output projection
  std::vector<Tensor> weights;   // per head, n x n, rows sum to 1
  std::vector<Tensor> scores;    // per head, n x n, before the softmax
};

/// Scaled dot-product attention with per-head W_q, W_k, W_v and output W_m.
class MultiHeadAttention {
 public:
  MultiHeadAttention(ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg);
  AttentionOutput operator()(const Var& h) const;

 private:
  EncoderConfig cfg_;
  std::vector<Var> wq_, wk_, wv_;
  Var wm_;
};

/// How R_(t-j) is built in the relative attention.
enum class RelativeTable { Sinusoid, Zero };

/// Attention with untied keys (K is the head's slice of H) and the four-term
/// score Q_t K_j + Q_t R_(t-j) + u K_j + v R_(t-j), softmax without scaling.
class RelativeAttention {
 public:
  RelativeAttention(ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg);
  /// `first` is the absolute index of row 0; only differences of indices are used.
  AttentionOutput operator()(const Var& h, long first = 0, RelativeTable table = RelativeTable::Sinusoid) const;

  const Var& u(std::size_t head) const { return u_[head]; }
  const Var& v(std::size_t head) const { return v_[head]; }

 private:
  EncoderConfig cfg_;
  std::vector<Var> wq_, wv_, u_, v_;
  Var wm_;
};

/// Row-wise max(0, x W1 + b1) W2 + b2.
class FeedForward {
 public:
  FeedForward(ParameterStore& store, const std::string& prefix, std::size_t d, std::size_t d_ff);
  Var operator()(const Var& x) const;

 private:
  Var w1_, b1_, w2_, b2_;
};

/// Attention sub-layer then FFN sub-layer, each with a residual and layer norm.
class TransformerLayer {
 public:
  TransformerLayer(ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg);
  /// Adds absolute positions first when the layer is not relative.
  Var operator()(const Var& x) const;

 private:
  EncoderConfig cfg_;
  std::optional<MultiHeadAttention> abs_;
  std::optional<RelativeAttention> rel_;
  FeedForward ffn_;
  Var g1_, b1_, g2_, b2_;
};

// ---------------------------------------------------------------------------
// Recurrent and fusion layers

/// Single-direction LSTM over rows; gates i, f, g, o from [x_t; h_(t-1)].
class Lstm {
 public:
  Lstm(ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden);
  Var operator()(const Var& x, bool reverse = false) const;
  std::size_t hidden() const { return hidden_; }
  const Var& w() const { return w_; }
  const Var& b() const { return b_; }

 private:
  Var w_, b_;
  std::size_t hidden_;
};

/// Forward and backward LSTMs, outputs [h_fwd; h_bwd] per position.
class BiLstm {
 public:
  BiLstm(ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden);
  Var operator()(const Var& x) const;
  const Lstm& forward() const { return fwd_; }
  const Lstm& backward() const { return bwd_; }

 private:
  Lstm fwd_, bwd_;
};

/// Gate z = sigmoid(tanh(x_t W1 + x_b W2) W3), output z * x_t + (1 - z) * x_b.
class Fusion {
 public:
  Fusion(ParameterStore& store, const std::string& prefix, std::size_t d);
  Var operator()(const Var& xt, const Var& xb) const;
  Var gate(const Var& xt, const Var& xb) const;

 private:
  Var w1_, w2_, w3_;
};

}  // namespace spedn::encoder
