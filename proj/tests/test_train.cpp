#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "fixtures.hpp"
#include "spedn/common/error.hpp"
#include "spedn/train/pipeline.hpp"

using namespace spedn;
using namespace spedn::train;

namespace {

const Domain& geo() {
  static const Domain d = Domain::load(testing::data_path("geo"));
  return d;
}

const Domain& atis() {
  static const Domain d = Domain::load(testing::data_path("atis"));
  return d;
}

Split geo_split(std::size_t tr = 120, std::size_t te = 30, std::uint64_t seed = 1) {
  return generate_geo(geo(), logic::GeoPredicateTable::load(testing::data_path("geo/predicates.tsv")), {tr, te, seed});
}

TrainConfig small(model::OutputMode mode = model::OutputMode::Decomposed) {
  TrainConfig c;
  c.mode = mode;
  c.encoder.hops = 1;
  c.encoder.node_dim = 12;
  c.hidden = 16;
  c.symbol_dim = 12;
  c.attention_dim = 12;
  c.batch = 8;
  c.epochs = 2;
  c.beam = 2;
  return c;
}

std::vector<double> flatten(const model::Graph2Seq& m) {
  std::vector<double> out;
  for (const auto& p : m.params().all()) out.insert(out.end(), p->value.values().begin(), p->value.values().end());
  return out;
}

}  // namespace

TEST_CASE("generators give disjoint deterministic splits of the requested size") {
  auto a = geo_split();
  auto b = geo_split();
  CHECK(a.train.size() == 120);
  CHECK(a.test.size() == 30);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  std::set<std::string> seen;
  for (const auto& e : a.train) seen.insert(e.question);
  for (const auto& e : a.test) CHECK(seen.count(e.question) == 0);
  CHECK(check_gold(a.train, geo()).empty());
  CHECK(check_gold(a.test, geo()).empty());

  auto c = geo_split(120, 30, 7);
  CHECK(c.train != a.train);

  auto at = generate_atis(atis(), logic::AtisTable::load(testing::data_path("atis/predicates.tsv")), {200, 50, 1});
  CHECK(at.train.size() == 200);
  CHECK(at.test.size() == 50);
  CHECK(check_gold(at.train, atis()).empty());
}

TEST_CASE("corpus text round-trips and reports the failing line") {
  auto s = geo_split(20, 5);
  CHECK(parse_corpus(format_corpus(s.train)) == s.train);
  try {
    parse_corpus("# header\nwhat is texas\tentity(state, id, 'texas')\nbroken line without tab\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("corpus statistics") {
  auto empty = corpus_stats({});
  CHECK(empty.examples == 0);
  CHECK(empty.mean_blocks == 0);
  CHECK(empty.block_lengths.empty());

  auto s = geo_split();
  auto st = corpus_stats(s.train);
  CHECK(st.examples == 120);
  CHECK(st.with_logical_form == 120);
  std::size_t examples = 0, blocks = 0, total = 0;
  for (const auto& [len, n] : st.block_lengths) examples += n, blocks += len * n;
  for (auto n : st.patterns) total += n;
  CHECK(examples == st.examples);
  CHECK(total == blocks);
  CHECK(st.mean_blocks == doctest::Approx(static_cast<double>(blocks) / 120.0));
  CHECK(st.mean_lf_tokens > st.mean_blocks);
  // entity and relation blocks dominate question-style corpora
  auto top = std::max_element(st.patterns.begin(), st.patterns.end()) - st.patterns.begin();
  CHECK((top == 0 || top == 1));
}

TEST_CASE("scoring: gold predictions score 1, reordered joins keep execution") {
  auto s = geo_split(40, 10);
  auto prepared = prepare(s.train, geo(), prep::GraphMode::Chain);
  std::vector<ExampleResult> results;
  for (const auto& p : prepared) results.push_back(score_prediction(p, p.entry.gold, true, geo()));
  auto rep = summarize(prepared, results);
  CHECK(rep.exact_match == 1.0);
  CHECK(rep.execution == 1.0);
  CHECK(rep.assemblability == 1.0);

  auto gold = blocks::parse_blocks(
      "join(union, :state, :state) relation(state, next_to, :state) entity(state, id, 'texas') "
      "relation(state, next_to, :state) entity(state, id, 'oregon')");
  auto swapped = blocks::parse_blocks(
      "join(union, :state, :state) relation(state, next_to, :state) entity(state, id, 'oregon') "
      "relation(state, next_to, :state) entity(state, id, 'texas')");
  auto p = prepare({{"states bordering texas or oregon", gold, ""}}, geo(), prep::GraphMode::Chain);
  auto r = score_prediction(p[0], swapped, true, geo());
  CHECK_FALSE(r.exact);
  CHECK(r.execution);
  CHECK(r.assembles);

  auto cut = score_prediction(p[0], swapped, false, geo());
  CHECK_FALSE(cut.execution);
  CHECK(cut.problem == "incomplete decode");

  auto loose = score_prediction(p[0], blocks::parse_blocks("relation(state, next_to, :state)"), true, geo());
  CHECK_FALSE(loose.assembles);
  CHECK_FALSE(loose.problem.empty());
}

TEST_CASE("bad gold sequences are listed, not silently dropped") {
  std::vector<CorpusEntry> corpus = {
      {"what is texas", blocks::parse_blocks("entity(state, id, 'texas')"), ""},
      {"rivers of mars", blocks::parse_blocks("relation(river, traverse, :planet) entity(planet)"), ""},
      {"dangling", blocks::parse_blocks("relation(river, traverse, :state)"), ""},
  };
  auto bad = check_gold(corpus, geo());
  REQUIRE(bad.size() == 2);
  CHECK(bad[0].index == 1);
  CHECK(bad[1].index == 2);
  try {
    prepare(corpus, geo(), prep::GraphMode::Chain);
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Schema);
    CHECK(std::string(e.what()).find("rivers of mars") != std::string::npos);
  }
}

TEST_CASE("presets and config validation") {
  CHECK(preset_name(preset("base")) == "base");
  CHECK(preset_name(preset("mp")) == "mp");
  CHECK(preset_name(preset("mp+controller")) == "mp+controller");
  CHECK_THROWS_AS(preset("bogus"), Error);
  auto c = small();
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small();
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  auto s = geo_split(16, 4);
  auto c = small();
  c.lr = 0;
  c.epochs = 1;
  auto prepared = prepare(s.train, geo(), c.graph);
  auto before = flatten(*build_model(prepared, geo(), c));
  auto r = train::train(s.train, s.test, geo(), c);
  CHECK(flatten(*r.model) == before);
}

TEST_CASE("training is reproducible and lowers the loss") {
  auto s = geo_split(40, 10);
  for (auto mode : {model::OutputMode::Atomic, model::OutputMode::Decomposed}) {
    CAPTURE(model::mode_name(mode));
    auto c = small(mode);
    c.epochs = 6;
    c.lr = 0.02;
    std::vector<std::string> lines;
    auto a = train::train(s.train, s.test, geo(), c, [&](const EpochLog& l) { lines.push_back(l.line()); });
    auto b = train::train(s.train, s.test, geo(), c);
    REQUIRE(a.history.size() == 6);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].loss == b.history[i].loss);
      CHECK(a.history[i].em == b.history[i].em);
      CHECK(lines[i].rfind("epoch=" + std::to_string(i + 1) + " loss=", 0) == 0);
    }
    CHECK(a.history.back().loss < a.history.front().loss);
    CHECK(flatten(*a.model) == flatten(*b.model));
    // the returned model is the strictly best epoch
    double best = -1;
    std::size_t at = 0;
    for (const auto& h : a.history)
      if (h.em > best) best = h.em, at = h.epoch;
    CHECK(a.best_epoch == at);
    CHECK(a.best_em == best);
    auto test = prepare(s.test, geo(), c.graph);
    CHECK(evaluate(*a.model, test, geo(), c.decode_options()).exact_match == doctest::Approx(best));
  }
}

TEST_CASE("evaluation report formats") {
  auto s = geo_split(16, 4);
  auto c = small();
  auto prepared = prepare(s.test, geo(), c.graph);
  auto m = build_model(prepare(s.train, geo(), c.graph), geo(), c);
  auto rep = evaluate(*m, prepared, geo(), c.decode_options());
  CHECK(rep.examples == 4);
  CHECK(rep.assemblability == 1.0);  // controller on
  auto text = rep.summary();
  CHECK(text.find("exact_match=") != std::string::npos);
  CHECK(text.find("pattern.entity=") != std::string::npos);
  auto j = nlohmann::json::parse(rep.to_json());
  CHECK(j["results"].size() == 4);
}

TEST_CASE("asking each question reproduces evaluate") {
  auto s = geo_split(16, 8);
  auto c = small();
  auto r = train::train(s.train, s.test, geo(), c);
  auto a = ask_corpus(*r.model, s.test, geo(), c.decode_options(), c.graph);
  auto e = evaluate(*r.model, prepare(s.test, geo(), c.graph), geo(), c.decode_options());
  CHECK(a.summary() == e.summary());
  for (std::size_t i = 0; i < a.results.size(); ++i) CHECK(a.results[i].decoded == e.results[i].decoded);

  auto one = ask(*r.model, s.test[0].question, geo(), c.decode_options(), c.graph);
  CHECK(one.decoded.complete);
  CHECK(one.query.has_value());
  CHECK(one.decoded.blocks == e.results[0].decoded);
}

TEST_CASE("tagged data marks linked spans") {
  std::vector<CorpusEntry> corpus = {
      {"which states border rhode island", blocks::parse_blocks("relation(state, next_to, :state) entity(state, id, 'rhode island')"), ""}};
  auto t = tagged_from_corpus(corpus, geo());
  REQUIRE(t.size() == 1);
  CHECK(t[0].labels == std::vector<std::string>{"O", "O", "O", "B-ENT", "I-ENT"});
}
