#include "spedn/encoder/layers.hpp"

#include <cmath>

#include "spedn/common/error.hpp"

namespace spedn::encoder {

using namespace spedn::tensor;

void EncoderConfig::validate() const {
  if (d == 0 || d_k == 0 || heads == 0 || d_ff == 0) throw Error(ErrorKind::Model, "encoder sizes must be positive");
  if (d != heads * d_k)
    throw Error(ErrorKind::Model, "d = " + std::to_string(d) + " is not heads * d_k = " +
                                      std::to_string(heads) + " * " + std::to_string(d_k));
  if (d % 2) throw Error(ErrorKind::Model, "d must be even");
  if (labels.empty()) throw Error(ErrorKind::Model, "no labels");
}

// ---------------------------------------------------------------------------

TokenEmbedder::TokenEmbedder(ParameterStore& store, const std::string& prefix, const Vocab& unigrams,
                             const Vocab& bigrams, std::size_t d)
    : unigrams_(unigrams), bigrams_(bigrams), d_(d) {
  uni_ = store.embedding(prefix + ".unigram", unigrams.size(), d / 2);
  bi_ = store.embedding(prefix + ".bigram", bigrams.size(), d - d / 2);
}

std::string TokenEmbedder::bigram(const std::vector<std::string>& tokens, std::size_t i) {
  return tokens[i] + " " + (i + 1 < tokens.size() ? tokens[i + 1] : std::string(kBoundary));
}

std::pair<Vocab, Vocab> TokenEmbedder::build_vocabs(const std::vector<std::vector<std::string>>& sentences) {
  Vocab uni({kUnknown}), bi({kUnknown});
  for (const auto& s : sentences)
    for (std::size_t i = 0; i < s.size(); ++i) {
      uni.add(s[i]);
      bi.add(bigram(s, i));
    }
  return {uni, bi};
}

Var TokenEmbedder::operator()(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> u, b;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    u.push_back(unigrams_.id(tokens[i]));
    b.push_back(bigrams_.id(bigram(tokens, i)));
  }
  return concat_cols({embedding(uni_, u), embedding(bi_, b)});
}

// ---------------------------------------------------------------------------

std::vector<double> sinusoid(double t, std::size_t d) {
  std::vector<double> pe(d);
  for (std::size_t c = 0; c < d; ++c) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * (c / 2)) / static_cast<double>(d));
    pe[c] = c % 2 == 0 ? std::sin(t / freq) : std::cos(t / freq);
  }
  return pe;
}

Tensor position_matrix(std::size_t n, std::size_t d, double first) {
  Tensor p(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = sinusoid(first + static_cast<double>(r), d);
    std::copy(row.begin(), row.end(), p.data() + r * d);
  }
  return p;
}

namespace {

// out[t][j] = m[t or 0][(t - j) + n - 1]: reads a per-offset score table
// (columns are offsets -(n-1) .. n-1) into an n x n score matrix.
Var gather_offsets(const Var& m, std::size_t n) {
  const std::size_t rows = m->value.rows(), w = m->value.cols();
  if (w != 2 * n - 1 || (rows != 1 && rows != n))
    throw Error(ErrorKind::Shape, "gather_offsets: " + m->value.shape_string() + " for length " + std::to_string(n));
  auto col = [n](std::size_t t, std::size_t j) { return t + n - 1 - j; };
  Tensor y(n, n);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < n; ++j) y[t * n + j] = m->value[(rows == 1 ? 0 : t) * w + col(t, j)];
  return make_op(std::move(y), {m}, [m, n, rows, w, col](Node& self) {
    if (!m->requires_grad) return;
    auto& g = m->ensure_grad();
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t j = 0; j < n; ++j) g[(rows == 1 ? 0 : t) * w + col(t, j)] += self.grad[t * n + j];
  });
}

}  // namespace

// ---------------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg)
    : cfg_(cfg) {
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const auto p = prefix + ".h" + std::to_string(h);
    wq_.push_back(store.weight(p + ".wq", cfg.d, cfg.d_k));
    wk_.push_back(store.weight(p + ".wk", cfg.d, cfg.d_k));
    wv_.push_back(store.weight(p + ".wv", cfg.d, cfg.d_k));
  }
  wm_ = store.weight(prefix + ".wm", cfg.heads * cfg.d_k, cfg.d);
}

AttentionOutput MultiHeadAttention::operator()(const Var& h) const {
  if (h->value.cols() != cfg_.d)
    throw Error(ErrorKind::Shape, "attention input " + h->value.shape_string() + " vs width " + std::to_string(cfg_.d));
  AttentionOutput r;
  std::vector<Var> heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(cfg_.d_k));
  for (std::size_t k = 0; k < cfg_.heads; ++k) {
    auto q = matmul(h, wq_[k]), key = matmul(h, wk_[k]), v = matmul(h, wv_[k]);
    auto s = scale(matmul(q, transpose(key)), inv);
    auto a = softmax_rows(s);
    r.scores.push_back(s->value);
    r.weights.push_back(a->value);
    heads.push_back(matmul(a, v));
  }
  r.out = matmul(concat_cols(heads), wm_);
  return r;
}

RelativeAttention::RelativeAttention(ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg)
    : cfg_(cfg) {
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const auto p = prefix + ".h" + std::to_string(h);
    wq_.push_back(store.weight(p + ".wq", cfg.d, cfg.d_k));
    wv_.push_back(store.weight(p + ".wv", cfg.d, cfg.d_k));
    u_.push_back(store.bias(p + ".u", cfg.d_k));
    v_.push_back(store.bias(p + ".v", cfg.d_k));
  }
  wm_ = store.weight(prefix + ".wm", cfg.heads * cfg.d_k, cfg.d);
}

AttentionOutput RelativeAttention::operator()(const Var& h, long first, RelativeTable table) const {
  if (h->value.cols() != cfg_.d)
    throw Error(ErrorKind::Shape, "attention input " + h->value.shape_string() + " vs width " + std::to_string(cfg_.d));
  const std::size_t n = h->value.rows();
  // R rows for offsets -(n-1) .. n-1, offsets taken as differences of absolute indices
  Tensor rel(2 * n - 1, cfg_.d_k);
  if (table == RelativeTable::Sinusoid) {
    const long last = first + static_cast<long>(n) - 1;
    for (std::size_t c = 0; c < 2 * n - 1; ++c) {
      const long t = first + static_cast<long>(c), j = last;  // t - j runs over -(n-1) .. n-1
      auto row = sinusoid(static_cast<double>(t - j), cfg_.d_k);
      std::copy(row.begin(), row.end(), rel.data() + c * cfg_.d_k);
    }
  }
  auto r = constant(std::move(rel));

  AttentionOutput out;
  std::vector<Var> heads;
  for (std::size_t k = 0; k < cfg_.heads; ++k) {
    auto q = matmul(h, wq_[k]);
    auto key = slice_cols(h, k * cfg_.d_k, (k + 1) * cfg_.d_k);
    auto v = matmul(h, wv_[k]);
    auto rt = transpose(r);
    auto s = matmul(q, transpose(key));                       // Q_t K_j
    s = add(s, gather_offsets(matmul(q, rt), n));             // Q_t R_(t-j)
    s = add_row(s, matmul(u_[k], transpose(key)));            // u K_j
    s = add(s, gather_offsets(matmul(v_[k], rt), n));         // v R_(t-j)
    auto a = softmax_rows(s);
    out.scores.push_back(s->value);
    out.weights.push_back(a->value);
    heads.push_back(matmul(a, v));
  }
  out.out = matmul(concat_cols(heads), wm_);
  return out;
}

FeedForward::FeedForward(ParameterStore& store, const std::string& prefix, std::size_t d, std::size_t d_ff) {
  w1_ = store.weight(prefix + ".w1", d, d_ff);
  b1_ = store.bias(prefix + ".b1", d_ff);
  w2_ = store.weight(prefix + ".w2", d_ff, d);
  b2_ = store.bias(prefix + ".b2", d);
}

Var FeedForward::operator()(const Var& x) const {
  return add_row(matmul(relu(add_row(matmul(x, w1_), b1_)), w2_), b2_);
}

TransformerLayer::TransformerLayer(ParameterStore& store, const std::string& prefix, const EncoderConfig& cfg)
    : cfg_(cfg), ffn_(store, prefix + ".ffn", cfg.d, cfg.d_ff) {
  if (cfg.relative)
    rel_.emplace(store, prefix + ".rel", cfg);
  else
    abs_.emplace(store, prefix + ".att", cfg);
  g1_ = store.bias(prefix + ".ln1.g", cfg.d, 1.0);
  b1_ = store.bias(prefix + ".ln1.b", cfg.d);
  g2_ = store.bias(prefix + ".ln2.g", cfg.d, 1.0);
  b2_ = store.bias(prefix + ".ln2.b", cfg.d);
}

Var TransformerLayer::operator()(const Var& x) const {
  Var h = x;
  Var a;
  if (rel_) {
    a = (*rel_)(h).out;
  } else {
    h = add(h, constant(position_matrix(x->value.rows(), cfg_.d)));
    a = (*abs_)(h).out;
  }
  auto x1 = layer_norm_rows(add(h, a), g1_, b1_);
  return layer_norm_rows(add(x1, ffn_(x1)), g2_, b2_);
}

// ---------------------------------------------------------------------------

Lstm::Lstm(ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden)
    : hidden_(hidden) {
  w_ = store.weight(prefix + ".w", input + hidden, 4 * hidden);
  b_ = store.bias(prefix + ".b", 4 * hidden);
}

Var Lstm::operator()(const Var& x, bool reverse) const {
  const std::size_t n = x->value.rows(), hd = hidden_;
  if (x->value.cols() + hd != w_->value.rows())
    throw Error(ErrorKind::Shape, "lstm input " + x->value.shape_string() + " vs weights " + w_->value.shape_string());
  Var h = constant(Tensor(1, hd)), c = constant(Tensor(1, hd));
  std::vector<Var> outs(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = reverse ? n - 1 - s : s;
    auto z = add_row(matmul(concat_cols({slice_rows(x, t, t + 1), h}), w_), b_);
    auto gates = split_cols(z, {hd, hd, hd, hd});
    auto i = sigmoid(gates[0]), f = sigmoid(gates[1]), g = tanh(gates[2]), o = sigmoid(gates[3]);
    c = add(mul(f, c), mul(i, g));
    h = mul(o, tanh(c));
    outs[t] = h;
  }
  if (n == 0) return constant(Tensor(0, hd));
  return concat_rows(outs);
}

BiLstm::BiLstm(ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden)
    : fwd_(store, prefix + ".fwd", input, hidden), bwd_(store, prefix + ".bwd", input, hidden) {}

Var BiLstm::operator()(const Var& x) const { return concat_cols({fwd_(x), bwd_(x, true)}); }

Fusion::Fusion(ParameterStore& store, const std::string& prefix, std::size_t d) {
  w1_ = store.weight(prefix + ".w1", d, d);
  w2_ = store.weight(prefix + ".w2", d, d);
  w3_ = store.weight(prefix + ".w3", d, d);
}

Var Fusion::gate(const Var& xt, const Var& xb) const {
  if (xt->value.shape() != xb->value.shape())
    throw Error(ErrorKind::Shape, "fusion inputs " + xt->value.shape_string() + " and " + xb->value.shape_string());
  return sigmoid(matmul(tanh(add(matmul(xt, w1_), matmul(xb, w2_))), w3_));
}

Var Fusion::operator()(const Var& xt, const Var& xb) const {
  // x_b + z (x_t - x_b): the same convex combination, exact when x_t == x_b
  return add(xb, mul(gate(xt, xb), sub(xt, xb)));
}

}  // namespace spedn::encoder
