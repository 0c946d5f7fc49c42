#include "spedn/model/graph2seq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "spedn/common/error.hpp"

namespace spedn::model {

using namespace spedn::tensor;
using nlohmann::json;

void GraphEncoderConfig::validate() const {
  if (hops < 1) throw Error(ErrorKind::Model, "graph encoder needs at least one hop");
  if (node_dim < 1) throw Error(ErrorKind::Model, "node dimension must be positive");
}

void DecoderConfig::validate() const {
  if (hidden < 1 || symbol_dim < 1 || attention_dim < 1) throw Error(ErrorKind::Model, "decoder sizes must be positive");
  if (dropout < 0 || dropout >= 1) throw Error(ErrorKind::Model, "dropout must be in [0, 1)");
}

Vocab build_node_vocab(const std::vector<const prep::QuestionGraph*>& graphs, const kg::KnowledgeGraph& kg) {
  Vocab v({"<unk>"});
  for (const auto& t : kg.types()) {
    v.add("T:" + t);
    v.add("@" + t);
  }
  for (const auto& r : kg.relations())
    if (r.is_entity_relation()) v.add("R:" + r.name);
  for (const auto* g : graphs)
    for (const auto& s : g->symbols) v.add(s);
  return v;
}

Graph2Seq::Graph2Seq(GraphEncoderConfig enc, DecoderConfig dec, Vocab nodes, OutputVocabulary out,
                     std::uint64_t seed)
    : enc_(enc), dec_(dec), nodes_(std::move(nodes)), out_(std::move(out)),
      store_(std::make_unique<ParameterStore>(seed)) {
  enc_.validate();
  dec_.validate();
  if (out_.mode() != dec_.mode) throw Error(ErrorKind::Model, "output vocabulary mode differs from decoder mode");
  auto& s = *store_;
  const std::size_t d = enc_.node_dim, H = dec_.hidden, E = dec_.symbol_dim, A = dec_.attention_dim;
  node_emb_ = s.embedding("g2s.node", nodes_.size(), d);
  for (std::size_t k = 0; k < enc_.hops; ++k) hop_w_.push_back(s.weight("g2s.hop" + std::to_string(k + 1), 2 * d, d));
  proj_w_ = s.weight("g2s.proj.w", d, H);
  proj_b_ = s.bias("g2s.proj.b", H);
  sym_emb_ = s.embedding("g2s.sym", out_.size(), E);
  gru_wx_ = s.weight("g2s.gru.wx", 2 * E + d, 3 * H);
  gru_wh_ = s.weight("g2s.gru.wh", H, 3 * H);
  gru_bx_ = s.bias("g2s.gru.bx", 3 * H);
  gru_bh_ = s.bias("g2s.gru.bh", 3 * H);
  att_w_ = s.weight("g2s.att.w", H, A);
  att_u_ = s.weight("g2s.att.u", d, A);
  att_v_ = s.weight("g2s.att.v", A, 1);
  out_w_ = s.weight("g2s.out.w", H + d, out_.size());
  out_b_ = s.bias("g2s.out.b", out_.size());
}

Graph2Seq::Encoded Graph2Seq::encode_graph(const prep::QuestionGraph& g) const {
  const std::size_t n = g.size();
  if (n == 0) throw Error(ErrorKind::Model, "cannot encode an empty question graph");
  std::vector<std::size_t> ids;
  for (const auto& s : g.symbols) ids.push_back(nodes_.id(s));
  Tensor mean(n, n);
  auto adj = g.adjacency();
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : adj[i]) mean.at(i, j) += 1.0 / static_cast<double>(adj[i].size());
  auto m = constant(std::move(mean));
  auto h = embedding(node_emb_, ids);
  for (const auto& w : hop_w_) h = relu(matmul(concat_cols({h, matmul(m, h)}), w));
  auto pooled = enc_.max_pool ? max_rows(h) : mean_rows(h);
  return {h, add_row(matmul(pooled, proj_w_), proj_b_), matmul(h, att_u_)};
}

Var Graph2Seq::embed_block(const std::vector<std::size_t>& symbols) const {
  return mean_rows(embedding(sym_emb_, symbols));
}

Graph2Seq::State Graph2Seq::initial_state(const Encoded& e) const {
  return {e.graph, constant(Tensor(1, enc_.node_dim)), embed_block({out_.bos()}), out_.bos()};
}

std::pair<Var, Var> Graph2Seq::attend(const Encoded& e, const Var& h) const {
  auto scores = matmul(tanh(add_row(e.keys, matmul(h, att_w_))), att_v_);
  auto weights = softmax_rows(transpose(scores));
  return {weights, matmul(weights, e.nodes)};
}

Var Graph2Seq::decode_step(const Encoded& e, State& s, bool train, std::mt19937_64* rng) const {
  const std::size_t H = dec_.hidden;
  auto x = concat_cols({embedding(sym_emb_, {s.prev_symbol}), s.prev_block, s.context});
  auto gx = split_cols(add_row(matmul(x, gru_wx_), gru_bx_), {H, H, H});
  auto gh = split_cols(add_row(matmul(s.h, gru_wh_), gru_bh_), {H, H, H});
  auto z = sigmoid(add(gx[0], gh[0]));
  auto r = sigmoid(add(gx[1], gh[1]));
  auto n = tanh(add(gx[2], mul(r, gh[2])));
  s.h = add(n, mul(z, sub(s.h, n)));
  s.context = attend(e, s.h).second;
  static thread_local std::mt19937_64 unused;
  auto o = dropout(concat_cols({s.h, s.context}), dec_.dropout, train, rng ? *rng : unused);
  return add_row(matmul(o, out_w_), out_b_);
}

void Graph2Seq::feed(State& s, std::size_t symbol, const std::vector<std::size_t>& block_so_far) const {
  s.prev_symbol = symbol;
  if (out_.mode() == OutputMode::Atomic) {
    if (symbol != out_.eos()) s.prev_block = embed_block({symbol});
  } else if (symbol == out_.eob() && !block_so_far.empty()) {
    s.prev_block = embed_block(block_so_far);
  }
}

Var Graph2Seq::sequence_nll(const prep::QuestionGraph& g, const std::vector<std::size_t>& target, bool train,
                            std::mt19937_64* rng) const {
  if (target.empty()) throw Error(ErrorKind::Model, "empty target sequence");
  auto e = encode_graph(g);
  auto s = initial_state(e);
  std::vector<Var> logits;
  std::vector<std::size_t> partial;
  for (auto t : target) {
    if (t >= out_.size()) throw Error(ErrorKind::Model, "target symbol id " + std::to_string(t) + " out of range");
    logits.push_back(decode_step(e, s, train, rng));
    feed(s, t, partial);
    if (t == out_.eob()) partial.clear();
    else partial.push_back(t);
  }
  return cross_entropy(concat_rows(logits), target);
}

double Graph2Seq::sequence_log_prob(const prep::QuestionGraph& g, const blocks::BlockSequence& gold,
                                    const prep::QuestionContext& ctx) const {
  NoGrad ng;
  return -sequence_nll(g, out_.encode(gold, ctx), false, nullptr)->value[0];
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log-softmax over the allowed entries; disallowed ones get -inf
std::vector<double> masked_log_softmax(const Tensor& logits, const std::vector<char>& allowed) {
  std::vector<double> out(logits.size(), kNegInf);
  double m = kNegInf;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (allowed[i]) m = std::max(m, logits[i]);
  if (m == kNegInf) return out;
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (allowed[i]) sum += std::exp(logits[i] - m);
  const double lse = m + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (allowed[i]) out[i] = logits[i] - lse;
  return out;
}

}  // namespace

std::size_t Graph2Seq::limit_for(const CandidateSet& cands, std::size_t requested) const {
  std::size_t limit = requested ? requested : step_limit_;
  return std::max(limit, std::min<std::size_t>(cands.min_sequence(), 4096));
}

DecodeResult Graph2Seq::finish(const std::vector<std::size_t>& symbols, const DecodeTrack& track, double log_prob,
                               bool complete) const {
  DecodeResult r;
  r.blocks = track.blocks;
  for (auto s : symbols) r.symbols.push_back(out_.symbols().symbol(s));
  r.log_prob = log_prob;
  r.score = symbols.empty() ? 0.0 : log_prob / static_cast<double>(symbols.size());
  r.complete = complete;
  r.assembles = complete && track.assembles();
  r.problem = complete ? track.problem : "no complete hypothesis within " + std::to_string(symbols.size()) + " steps";
  return r;
}

DecodeResult Graph2Seq::decode(const prep::QuestionGraph& g, const prep::QuestionContext& ctx,
                               const kg::KnowledgeGraph& kg, const DecodeOptions& opts) const {
  if (opts.beam < 1) throw Error(ErrorKind::Model, "beam size must be at least 1");
  NoGrad ng;
  CandidateSet cands(out_, ctx, kg);
  Controller ctrl(out_, cands, kg, opts.controller);
  const std::size_t limit = limit_for(cands, opts.step_limit);
  const auto enc = encode_graph(g);

  struct Hyp {
    State state;
    DecodeTrack track;
    std::vector<std::size_t> symbols;
    double log_prob = 0;
  };
  struct Ext {
    double log_prob;
    std::size_t hyp, symbol;
  };
  std::vector<Hyp> live{{initial_state(enc), ctrl.start(), {}, 0.0}};
  std::vector<Hyp> done;
  for (std::size_t step = 0; step < limit && !live.empty() && done.size() < opts.beam; ++step) {
    std::vector<Ext> exts;
    std::vector<State> stepped;
    for (std::size_t i = 0; i < live.size(); ++i) {
      State s = live[i].state;
      auto logits = decode_step(enc, s, false, nullptr);
      stepped.push_back(s);
      auto lp = masked_log_softmax(logits->value, ctrl.allowed(live[i].track, limit - step));
      for (std::size_t k = 0; k < lp.size(); ++k)
        if (lp[k] != kNegInf) exts.push_back({live[i].log_prob + lp[k], i, k});
    }
    std::stable_sort(exts.begin(), exts.end(), [](const Ext& a, const Ext& b) { return a.log_prob > b.log_prob; });
    const std::size_t width = std::min(exts.size(), opts.beam - done.size());
    std::vector<Hyp> next;
    for (std::size_t j = 0; j < width; ++j) {
      const auto& x = exts[j];
      Hyp h{stepped[x.hyp], live[x.hyp].track, live[x.hyp].symbols, x.log_prob};
      h.symbols.push_back(x.symbol);
      feed(h.state, x.symbol, h.track.partial);
      ctrl.advance(h.track, x.symbol);
      (x.symbol == out_.eos() ? done : next).push_back(std::move(h));
    }
    live = std::move(next);
  }
  if (!done.empty()) {
    const Hyp* best = &done[0];
    auto norm = [](const Hyp& h) { return h.log_prob / static_cast<double>(h.symbols.size()); };
    for (const auto& h : done)
      if (norm(h) > norm(*best)) best = &h;
    return finish(best->symbols, best->track, best->log_prob, true);
  }
  if (live.empty()) return finish({}, ctrl.start(), 0.0, false);
  const Hyp* best = &live[0];
  for (const auto& h : live)
    if (h.log_prob > best->log_prob) best = &h;
  return finish(best->symbols, best->track, best->log_prob, false);
}

DecodeResult Graph2Seq::greedy(const prep::QuestionGraph& g, const prep::QuestionContext& ctx,
                               const kg::KnowledgeGraph& kg, bool controller, std::size_t step_limit) const {
  NoGrad ng;
  CandidateSet cands(out_, ctx, kg);
  Controller ctrl(out_, cands, kg, controller);
  const std::size_t limit = limit_for(cands, step_limit);
  const auto enc = encode_graph(g);
  auto state = initial_state(enc);
  auto track = ctrl.start();
  std::vector<std::size_t> symbols;
  double total = 0;
  for (std::size_t step = 0; step < limit; ++step) {
    auto logits = decode_step(enc, state, false, nullptr);
    auto lp = masked_log_softmax(logits->value, ctrl.allowed(track, limit - step));
    auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    if (lp[best] == kNegInf) break;
    total += lp[best];
    symbols.push_back(best);
    feed(state, best, track.partial);
    ctrl.advance(track, best);
    if (best == out_.eos()) return finish(symbols, track, total, true);
  }
  return finish(symbols, track, total, false);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::filesystem::path meta_path(const std::filesystem::path& file) {
  return std::filesystem::path(file.string() + ".meta.json");
}

}  // namespace

void Graph2Seq::save(const std::filesystem::path& file) const {
  store_->save(file);
  std::vector<std::string> templates;
  for (const auto& t : out_.templates()) templates.push_back(atomic_symbol(t));
  json meta = {{"kind", "graph2seq"},
               {"seed", store_->seed()},
               {"hops", enc_.hops},
               {"node_dim", enc_.node_dim},
               {"max_pool", enc_.max_pool},
               {"hidden", dec_.hidden},
               {"symbol_dim", dec_.symbol_dim},
               {"attention_dim", dec_.attention_dim},
               {"dropout", dec_.dropout},
               {"mode", mode_name(dec_.mode)},
               {"step_limit", step_limit_},
               {"nodes", nodes_.symbols()},
               {"templates", templates}};
  std::ofstream out(meta_path(file));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + meta_path(file).string());
  out << meta.dump(1) << "\n";
}

Graph2Seq Graph2Seq::load(const std::filesystem::path& file) {
  std::ifstream in(meta_path(file));
  if (!in) throw Error(ErrorKind::Io, "missing model metadata " + meta_path(file).string());
  json meta;
  try {
    in >> meta;
    if (meta.at("kind") != "graph2seq") throw Error(ErrorKind::Model, file.string() + " is not a graph2seq checkpoint");
    GraphEncoderConfig enc;
    enc.hops = meta.at("hops");
    enc.node_dim = meta.at("node_dim");
    enc.max_pool = meta.at("max_pool");
    DecoderConfig dec;
    dec.hidden = meta.at("hidden");
    dec.symbol_dim = meta.at("symbol_dim");
    dec.attention_dim = meta.at("attention_dim");
    dec.dropout = meta.at("dropout");
    const std::string mode = meta.at("mode");
    if (mode != "atomic" && mode != "decomposed") throw Error(ErrorKind::Model, "unknown output mode " + mode);
    dec.mode = mode == "atomic" ? OutputMode::Atomic : OutputMode::Decomposed;
    std::vector<BlockTemplate> templates;
    for (const auto& s : meta.at("templates")) {
      auto t = from_atomic_symbol(s.get<std::string>());
      if (!t) throw Error(ErrorKind::Model, "bad template " + s.get<std::string>());
      templates.push_back(*t);
    }
    Graph2Seq m(enc, dec, Vocab::from_symbols(meta.at("nodes")), OutputVocabulary(dec.mode, std::move(templates)),
                meta.at("seed"));
    m.step_limit_ = meta.at("step_limit");
    m.store_->load(file);
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "bad model metadata: " + std::string(e.what()));
  }
}

}  // namespace spedn::model
