#include "spedn/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"
#include "spedn/logic/length.hpp"

namespace spedn::train {

using namespace spedn::tensor;
using model::Graph2Seq;

void TrainConfig::validate() const {
  if (!(lr >= 0) || batch < 1 || epochs < 1 || beam < 1 || !(clip > 0))
    throw Error(ErrorKind::Model, "training needs lr >= 0 and positive batch, epochs, beam and clip");
  if (dropout < 0 || dropout >= 1) throw Error(ErrorKind::Model, "dropout must be in [0, 1)");
  encoder.validate();
}

TrainConfig preset(const std::string& name) {
  TrainConfig c;
  if (name == "base") {
    c.mode = model::OutputMode::Atomic;
    c.controller = false;
  } else if (name == "mp") {
    c.controller = false;
  } else if (name != "mp+controller") {
    throw Error(ErrorKind::Model, "unknown preset " + name + " (base, mp, mp+controller)");
  }
  return c;
}

std::string preset_name(const TrainConfig& c) {
  if (c.mode == model::OutputMode::Atomic) return c.controller ? "base+controller" : "base";
  return c.controller ? "mp+controller" : "mp";
}

std::vector<GoldProblem> check_gold(const std::vector<CorpusEntry>& corpus, const Domain& d) {
  std::vector<GoldProblem> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& e = corpus[i];
    if (auto v = blocks::validate_blocks(e.gold, d.kg); !v.empty()) {
      out.push_back({i, e.question, "block " + std::to_string(v.front().index) + ": " + v.front().message});
      continue;
    }
    try {
      query::execute(query::assemble(e.gold, d.kg), d.kg, d.ordinals);
    } catch (const Error& err) {
      out.push_back({i, e.question, err.what()});
    }
  }
  return out;
}

std::vector<Prepared> prepare(const std::vector<CorpusEntry>& corpus, const Domain& d, prep::GraphMode mode) {
  if (auto bad = check_gold(corpus, d); !bad.empty()) {
    std::string msg = std::to_string(bad.size()) + " gold sequence(s) rejected:";
    for (const auto& b : bad) msg += "\n  example " + std::to_string(b.index + 1) + " (" + b.question + "): " + b.message;
    throw Error(ErrorKind::Schema, msg);
  }
  std::vector<Prepared> out;
  for (const auto& e : corpus) {
    Prepared p{e, prep::build_context(e.question, d.kg, d.entities), {}, {}};
    p.graph = prep::to_question_graph(p.ctx, mode);
    p.answer = query::execute(query::assemble(e.gold, d.kg), d.kg, d.ordinals);
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics and scoring

CorpusStats corpus_stats(const std::vector<CorpusEntry>& corpus) {
  CorpusStats s;
  s.examples = corpus.size();
  double q = 0, lf = 0, b = 0;
  for (const auto& e : corpus) {
    q += static_cast<double>(text::word_tokens(e.question).size());
    b += static_cast<double>(e.gold.size());
    if (!e.logical_form.empty()) {
      lf += static_cast<double>(logic::count_lf_tokens(e.logical_form));
      ++s.with_logical_form;
    }
    ++s.block_lengths[e.gold.size()];
    for (const auto& blk : e.gold) ++s.patterns[static_cast<std::size_t>(blocks::pattern_of(blk))];
  }
  if (s.examples) {
    s.mean_question_tokens = q / static_cast<double>(s.examples);
    s.mean_blocks = b / static_cast<double>(s.examples);
  }
  if (s.with_logical_form) s.mean_lf_tokens = lf / static_cast<double>(s.with_logical_form);
  return s;
}

ExampleResult score_prediction(const Prepared& gold, const blocks::BlockSequence& decoded, bool complete,
                               const Domain& d) {
  ExampleResult r{gold.entry.question, gold.entry.gold, decoded, false, false, false, ""};
  if (!complete) {
    r.problem = "incomplete decode";
    return r;
  }
  r.exact = blocks::print_blocks(decoded) == blocks::print_blocks(gold.entry.gold);
  try {
    auto graph = query::assemble(decoded, d.kg);
    r.assembles = true;
    r.execution = query::answers_equal(query::execute(graph, d.kg, d.ordinals), gold.answer);
  } catch (const Error& e) {
    r.problem = e.what();
  }
  return r;
}

EvalReport summarize(const std::vector<Prepared>& corpus, std::vector<ExampleResult> results) {
  EvalReport rep;
  std::vector<CorpusEntry> entries;
  for (const auto& p : corpus) entries.push_back(p.entry);
  rep.stats = corpus_stats(entries);
  rep.examples = results.size();
  std::size_t em = 0, ex = 0, as = 0;
  for (const auto& r : results) em += r.exact, ex += r.execution, as += r.assembles;
  if (rep.examples) {
    const double n = static_cast<double>(rep.examples);
    rep.exact_match = static_cast<double>(em) / n;
    rep.execution = static_cast<double>(ex) / n;
    rep.assemblability = static_cast<double>(as) / n;
  }
  rep.results = std::move(results);
  return rep;
}

EvalReport evaluate(const Graph2Seq& m, const std::vector<Prepared>& corpus, const Domain& d,
                    const model::DecodeOptions& opts) {
  std::vector<ExampleResult> results(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& p = corpus[static_cast<std::size_t>(i)];
    auto out = m.decode(p.graph, p.ctx, d.kg, opts);
    results[static_cast<std::size_t>(i)] = score_prediction(p, out.blocks, out.complete, d);
    if (!out.problem.empty() && results[static_cast<std::size_t>(i)].problem.empty())
      results[static_cast<std::size_t>(i)].problem = out.problem;
  }
  return summarize(corpus, std::move(results));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string stats_summary(const CorpusStats& s) {
  std::ostringstream os;
  os << "mean_question_tokens=" << fmt(s.mean_question_tokens) << "\n"
     << "mean_lf_tokens=" << fmt(s.mean_lf_tokens) << "\n"
     << "mean_blocks=" << fmt(s.mean_blocks) << "\n";
  for (std::size_t i = 0; i < s.patterns.size(); ++i)
    os << "pattern." << blocks::pattern_name(blocks::kAllPatterns[i]) << "=" << s.patterns[i] << "\n";
  for (const auto& [len, count] : s.block_lengths) os << "blocks." << len << "=" << count << "\n";
  return os.str();
}

std::string EvalReport::summary() const {
  std::ostringstream os;
  os << "examples=" << examples << "\n"
     << "exact_match=" << fmt(exact_match) << "\n"
     << "execution=" << fmt(execution) << "\n"
     << "assemblability=" << fmt(assemblability) << "\n"
     << stats_summary(stats);
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["examples"] = examples;
  j["exact_match"] = exact_match;
  j["execution"] = execution;
  j["assemblability"] = assemblability;
  j["mean_question_tokens"] = stats.mean_question_tokens;
  j["mean_lf_tokens"] = stats.mean_lf_tokens;
  j["mean_blocks"] = stats.mean_blocks;
  for (std::size_t i = 0; i < stats.patterns.size(); ++i)
    j["patterns"][blocks::pattern_name(blocks::kAllPatterns[i])] = stats.patterns[i];
  for (const auto& [len, count] : stats.block_lengths) j["block_lengths"][std::to_string(len)] = count;
  j["results"] = nlohmann::json::array();
  for (const auto& r : results)
    j["results"].push_back({{"question", r.question},
                            {"gold", blocks::print_blocks(r.gold)},
                            {"decoded", r.decoded.empty() ? "" : blocks::print_blocks(r.decoded)},
                            {"exact", r.exact},
                            {"execution", r.execution},
                            {"assembles", r.assembles},
                            {"problem", r.problem}});
  return j.dump(1);
}

std::string EpochLog::line() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.6f em=%.4f exec=%.4f", epoch, loss, em, exec);
  return buf;
}

// ---------------------------------------------------------------------------
// Training

std::unique_ptr<Graph2Seq> build_model(const std::vector<Prepared>& train_set, const Domain& d,
                                       const TrainConfig& cfg) {
  std::vector<const prep::QuestionGraph*> graphs;
  std::vector<model::GoldExample> gold;
  for (const auto& p : train_set) {
    graphs.push_back(&p.graph);
    gold.push_back({&p.entry.gold, &p.ctx});
  }
  model::DecoderConfig dec;
  dec.hidden = cfg.hidden;
  dec.symbol_dim = cfg.symbol_dim;
  dec.attention_dim = cfg.attention_dim;
  dec.dropout = cfg.dropout;
  dec.mode = cfg.mode;
  auto m = std::make_unique<Graph2Seq>(cfg.encoder, dec, model::build_node_vocab(graphs, d.kg),
                                       model::OutputVocabulary::build(cfg.mode, d.kg, d.ordinals, gold), cfg.seed);
  std::size_t symbols = 0;
  for (const auto& p : train_set) symbols += m->output_vocab().encode(p.entry.gold, p.ctx).size();
  if (!train_set.empty())
    m->set_step_limit(static_cast<std::size_t>(
        std::ceil(8.0 * static_cast<double>(symbols) / static_cast<double>(train_set.size()))));
  return m;
}

TrainResult train(const std::vector<CorpusEntry>& train_set, const std::vector<CorpusEntry>& heldout, const Domain& d,
                  const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw Error(ErrorKind::Model, "empty training corpus");
  const auto data = prepare(train_set, d, cfg.graph);
  const auto test = prepare(heldout, d, cfg.graph);

  TrainResult result;
  result.model = build_model(data, d, cfg);
  auto& m = *result.model;
  std::vector<std::vector<std::size_t>> targets;
  for (const auto& p : data) targets.push_back(m.output_vocab().encode(p.entry.gold, p.ctx));

  Adam adam({cfg.lr});
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::string best = m.params().serialize();
  result.best_em = -1;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::size_t end = std::min(order.size(), b + cfg.batch);
      m.params().zero_grad();
      std::vector<Var> losses;
      for (std::size_t i = b; i < end; ++i)
        losses.push_back(m.sequence_nll(data[order[i]].graph, targets[order[i]], true, &rng));
      auto sum = sum_all(concat_rows(losses));
      const double value = sum->value[0];
      if (!std::isfinite(value)) {
        clear_tape();
        throw Error(ErrorKind::Model, "non-finite training loss at epoch " + std::to_string(epoch));
      }
      total += value;
      backward(scale(sum, 1.0 / static_cast<double>(end - b)));
      clip_grad_norm(m.params(), cfg.clip);
      adam.step(m.params());
    }
    EpochLog log{epoch, total / static_cast<double>(data.size()), 0, 0};
    if (!test.empty()) {
      auto rep = evaluate(m, test, d, cfg.decode_options());
      log.em = rep.exact_match;
      log.exec = rep.execution;
      if (cfg.track_unguided && cfg.controller) {
        auto opts = cfg.decode_options();
        opts.controller = false;
        log.unguided_em = evaluate(m, test, d, opts).exact_match;
        result.best_unguided_em = std::max(result.best_unguided_em.value_or(0.0), *log.unguided_em);
      }
    }
    result.history.push_back(log);
    if (log.em > result.best_em) {
      result.best_em = log.em;
      result.best_epoch = epoch;
      best = m.params().serialize();
      if (!cfg.checkpoint.empty()) m.save(cfg.checkpoint);
    }
    if (on_epoch) on_epoch(log);
    if (cfg.stop_when_perfect && log.em >= 1.0) break;
  }
  m.params().deserialize(best);
  return result;
}

}  // namespace spedn::train
