#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "spedn/common/error.hpp"
#include "spedn/model/graph2seq.hpp"

using namespace spedn;
using namespace spedn::model;
using namespace spedn::tensor;

namespace {

struct Pair {
  const char* question;
  const char* blocks;
};

const Pair kPairs[] = {
    {"how many rivers does alaska have", "aggr(count, :river) relation(river, traverse, :state) entity(state, id, 'alaska')"},
    {"what is the capital of texas", "relation(capital, loc, :state) entity(state, id, 'texas')"},
    {"which states border oregon", "relation(state, next_to, :state) entity(state, id, 'oregon')"},
    {"what is the largest city", "ordinal(largest, :city) entity(city)"},
    {"what is the population of california", "literal(population, :state) entity(state, id, 'california')"},
    {"major cities in texas", "literal(major, :city) relation(city, loc, :state) entity(state, id, 'texas')"},
    {"average population of cities in the us",
     "aggr(average, :city) literal(population, :city) relation(city, loc, :state) relation(state, loc, :country) "
     "entity(country, id, 'usa')"},
    {"states bordering texas or oregon",
     "join(union, :state, :state) relation(state, next_to, :state) entity(state, id, 'texas') "
     "relation(state, next_to, :state) entity(state, id, 'oregon')"},
};

struct Example {
  std::string question;
  blocks::BlockSequence gold;
  prep::QuestionContext ctx;
  prep::QuestionGraph graph;
};

struct Fixture {
  const kg::KnowledgeGraph& kg = testing::mini_geo();
  prep::EntityLexicon lexicon = prep::EntityLexicon::load(testing::data_path("geo/lexicon.tsv"), kg);
  query::OrdinalLexicon ordinals = query::OrdinalLexicon::load(testing::data_path("geo/ordinals.tsv"));
  std::vector<Example> examples;

  Fixture() {
    for (const auto& p : kPairs) {
      Example e{p.question, blocks::parse_blocks(p.blocks), prep::build_context(p.question, kg, lexicon), {}};
      e.graph = prep::to_question_graph(e.ctx, prep::GraphMode::Chain);
      examples.push_back(std::move(e));
    }
  }

  OutputVocabulary vocab(OutputMode mode) const {
    std::vector<GoldExample> gold;
    for (const auto& e : examples) gold.push_back({&e.gold, &e.ctx});
    return OutputVocabulary::build(mode, kg, ordinals, gold);
  }

  Vocab nodes() const {
    std::vector<const prep::QuestionGraph*> gs;
    for (const auto& e : examples) gs.push_back(&e.graph);
    return build_node_vocab(gs, kg);
  }

  Graph2Seq model(OutputMode mode, std::uint64_t seed = 1, std::size_t dim = 8) const {
    GraphEncoderConfig enc;
    enc.hops = 2;
    enc.node_dim = dim;
    DecoderConfig dec;
    dec.hidden = dim + 4;
    dec.symbol_dim = dim;
    dec.attention_dim = dim - 2;
    dec.mode = mode;
    return Graph2Seq(enc, dec, nodes(), vocab(mode), seed);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void randomize(ParameterStore& s, std::mt19937_64& rng, double scale) {
  for (const auto& p : s.all())
    for (auto& v : p->value.values()) v = std::uniform_real_distribution<double>(-scale, scale)(rng);
}

double cosine(const Tensor& a, const Tensor& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i], aa += a[i] * a[i], bb += b[i] * b[i];
  return ab / std::sqrt(aa * bb);
}

prep::QuestionGraph tiny_graph(std::vector<std::string> symbols, std::vector<std::pair<std::size_t, std::size_t>> edges) {
  prep::QuestionGraph g;
  g.symbols = std::move(symbols);
  g.kinds.assign(g.symbols.size(), prep::QuestionGraph::NodeKind::Token);
  g.edges = std::move(edges);
  g.token_count = g.symbols.size();
  return g;
}

}  // namespace

TEST_CASE("decomposed components and pointers") {
  const auto& f = fixture();
  const auto& usa = f.examples[6];
  auto t = to_template(usa.gold.back(), usa.ctx);
  REQUIRE(t.pointer == std::size_t{0});
  CHECK(components(t) == std::vector<std::string>{"P:entity", "T:country", "A:id", "PTR0"});
  CHECK(atomic_symbol(t) == "entity(country, id, PTR0)");
  CHECK(from_atomic_symbol(atomic_symbol(t)) == t);
  CHECK(from_components(components(t)) == t);
  CHECK(instantiate(t, pointer_targets(usa.ctx)) == usa.gold.back());

  // the second linked entity gets the second pointer
  const auto& two = f.examples[7];
  CHECK(to_template(two.gold[4], two.ctx).pointer == std::size_t{1});

  // an unlinked id stays a literal value
  auto lit = to_template(blocks::parse_block("entity(state, id, 'ohio')"), usa.ctx);
  CHECK(!lit.pointer);
  CHECK(components(lit).back() == "V:'ohio'");
  CHECK(from_components(components(lit)) == lit);

  for (const auto& e : f.examples)
    for (const auto& b : e.gold) {
      auto tb = to_template(b, e.ctx);
      CHECK(from_components(components(tb)) == tb);
      CHECK(from_atomic_symbol(atomic_symbol(tb)) == tb);
    }

  CHECK(!from_components({}));
  CHECK(!from_components({"P:relation", "T:river", "R:loc"}));
  CHECK(!from_components({"P:entity", "T:state", "A:id"}));
  CHECK(!from_components({"T:state"}));
  CHECK(!from_components({"P:join", "J:union"}));
  CHECK(!from_atomic_symbol("entity(state"));
  // a pointer with no target of the block's type does not instantiate
  CHECK(!instantiate({blocks::EntityBlock{"river", blocks::Constraint{"id", blocks::BlockValue::text("")}}, 0},
                     pointer_targets(usa.ctx)));
}

TEST_CASE("output vocabulary covers the gold corpus") {
  const auto& f = fixture();
  for (auto mode : {OutputMode::Atomic, OutputMode::Decomposed}) {
    auto v = f.vocab(mode);
    CHECK(v.symbols().symbol(v.bos()) == kBos);
    CHECK(v.symbols().symbol(v.eos()) == kEos);
    for (const auto& e : f.examples) {
      auto ids = v.encode(e.gold, e.ctx);
      CHECK(ids.back() == v.eos());
      if (mode == OutputMode::Atomic) CHECK(ids.size() == e.gold.size() + 1);
    }
  }
  auto dec = f.vocab(OutputMode::Decomposed);
  // pattern names, relation names, attributes, types, ops, pointers
  for (const char* s : {"P:entity", "P:relation", "P:literal", "P:ordinal", "P:aggr", "P:join", "R:traverse", "A:major",
                        "T:river", "O:largest", "G:average", "J:exclude", "PTR0", "PTR2", "</b>"})
    CHECK_MESSAGE(dec.symbols().contains(s), s);
  CHECK(dec.size() < f.vocab(OutputMode::Atomic).size());

  OutputVocabulary empty(OutputMode::Decomposed, {});
  try {
    empty.encode(f.examples[0].gold, f.examples[0].ctx);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("P:aggr") != std::string::npos);
  }
}

TEST_CASE("graph encoder") {
  const auto& f = fixture();
  auto m = f.model(OutputMode::Decomposed);
  CHECK_THROWS_AS(m.encode_graph(prep::QuestionGraph{}), Error);

  // isolated node: each hop sees a zero neighbour mean
  auto g = tiny_graph({"river"}, {});
  auto enc = m.encode_graph(g);
  const std::size_t d = m.encoder_config().node_dim;
  auto h = embedding(m.params().get("g2s.node"), {m.node_vocab().id("river")});
  for (std::size_t k = 1; k <= m.encoder_config().hops; ++k)
    h = relu(matmul(concat_cols({h, constant(Tensor(1, d))}), m.params().get("g2s.hop" + std::to_string(k))));
  for (std::size_t i = 0; i < d; ++i) CHECK(enc.nodes->value[i] == doctest::Approx(h->value[i]).epsilon(1e-12));
  CHECK(enc.graph->value.cols() == m.decoder_config().hidden);

  // mirror-image nodes end up identical
  auto sym = tiny_graph({"river", "state", "river"}, {{0, 1}, {1, 2}});
  auto es = m.encode_graph(sym);
  for (std::size_t i = 0; i < d; ++i) CHECK(es.nodes->value.at(0, i) == es.nodes->value.at(2, i));

  // mean pooling is available behind the flag
  GraphEncoderConfig mean_cfg = m.encoder_config();
  mean_cfg.max_pool = false;
  Graph2Seq mm(mean_cfg, m.decoder_config(), m.node_vocab(), m.output_vocab(), 1);
  auto em = mm.encode_graph(sym);
  auto manual = add_row(matmul(mean_rows(em.nodes), mm.params().get("g2s.proj.w")), mm.params().get("g2s.proj.b"));
  for (std::size_t i = 0; i < em.graph->value.size(); ++i) CHECK(em.graph->value[i] == doctest::Approx(manual->value[i]));
}

TEST_CASE("graph encoder and decoder step gradients") {
  const auto& f = fixture();
  std::mt19937_64 rng(5);
  for (std::size_t dim : {4, 5, 6}) {
    for (auto mode : {OutputMode::Atomic, OutputMode::Decomposed}) {
      auto m = f.model(mode, dim, dim);
      randomize(m.params(), rng, 0.4);
      const auto& e = f.examples[dim % 3];
      auto target = m.output_vocab().encode(e.gold, e.ctx);
      // short prefix keeps the check fast; the whole chain is covered
      target.resize(std::min<std::size_t>(target.size(), 5));
      auto r = grad_check_leaves([&] { return m.sequence_nll(e.graph, target, false, nullptr); }, m.params().all());
      CHECK_MESSAGE(r.max_rel_error <= 1e-4, "dim=" << dim << " rel=" << r.max_rel_error << " at " << r.worst);
    }
  }
}

TEST_CASE("additive attention") {
  const auto& f = fixture();
  auto m = f.model(OutputMode::Decomposed);
  auto one = m.encode_graph(tiny_graph({"texas"}, {}));
  auto [w1, c1] = m.attend(one, one.graph);
  CHECK(w1->value[0] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < c1->value.size(); ++i) CHECK(c1->value[i] == doctest::Approx(one.nodes->value[i]));

  const auto& e = f.examples[0];
  auto enc = m.encode_graph(e.graph);
  auto [w, c] = m.attend(enc, enc.graph);
  double sum = 0;
  for (auto v : w->value.values()) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w->value.cols() == e.graph.size());
}

TEST_CASE("decomposed block embedding") {
  const auto& f = fixture();
  auto m = f.model(OutputMode::Decomposed);
  const auto& v = m.output_vocab().symbols();
  const auto& table = m.params().get("g2s.sym")->value;
  auto row = [&](std::size_t id) { return std::vector<double>(table.data() + id * table.cols(), table.data() + (id + 1) * table.cols()); };

  auto same = m.embed_block({v.id("T:state"), v.id("T:state"), v.id("T:state")});
  auto ts = row(v.id("T:state"));
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(same->value[i] == doctest::Approx(ts[i]));

  std::vector<std::size_t> usa{v.id("P:entity"), v.id("T:country"), v.id("A:id"), v.id("PTR0")};
  auto eu = m.embed_block(usa);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double mean = 0;
    for (auto id : usa) mean += row(id)[i] / 4.0;
    CHECK(eu->value[i] == doctest::Approx(mean));
  }

  // shared relation name vs disjoint components, averaged over seeds
  double shared = 0, disjoint = 0;
  const int seeds = 120;
  for (int s = 1; s <= seeds; ++s) {
    auto ms = f.model(OutputMode::Decomposed, static_cast<std::uint64_t>(s));
    auto a = ms.embed_block({v.id("P:relation"), v.id("T:river"), v.id("R:traverse"), v.id("T:state")});
    auto b = ms.embed_block({v.id("P:relation"), v.id("T:state"), v.id("R:traverse"), v.id("T:river")});
    auto c = ms.embed_block({v.id("P:aggr"), v.id("G:count"), v.id("T:city")});
    shared += cosine(a->value, b->value);
    disjoint += cosine(a->value, c->value);
  }
  CHECK(shared / seeds > disjoint / seeds);
}

TEST_CASE("sequence log-probability") {
  const auto& f = fixture();
  const auto& e = f.examples[2];
  for (auto mode : {OutputMode::Atomic, OutputMode::Decomposed}) {
    auto m = f.model(mode);
    m.params().get("g2s.out.w")->value = Tensor(m.params().get("g2s.out.w")->value.shape(), 0.0);
    const double V = static_cast<double>(m.output_vocab().size());
    const double L = static_cast<double>(m.output_vocab().encode(e.gold, e.ctx).size());
    CHECK(m.sequence_log_prob(e.graph, e.gold, e.ctx) == doctest::Approx(-L * std::log(V)).epsilon(1e-12));
  }

  auto m = f.model(OutputMode::Decomposed);
  CHECK_THROWS_AS(m.sequence_nll(prep::QuestionGraph{}, {1}, false, nullptr), Error);

  // a few Adam steps on one example raise its own log-probability each time
  Adam adam({0.01});
  auto target = m.output_vocab().encode(e.gold, e.ctx);
  double prev = m.sequence_log_prob(e.graph, e.gold, e.ctx);
  for (int step = 0; step < 10; ++step) {
    m.params().zero_grad();
    backward(m.sequence_nll(e.graph, target, false, nullptr));
    adam.step(m.params());
    double now = m.sequence_log_prob(e.graph, e.gold, e.ctx);
    CHECK(now > prev);
    prev = now;
  }
}

TEST_CASE("beam of one is greedy") {
  const auto& f = fixture();
  std::mt19937_64 rng(9);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 26; ++seed)
    for (auto mode : {OutputMode::Atomic, OutputMode::Decomposed}) {
      auto m = f.model(mode, seed);
      randomize(m.params(), rng, 1.0);
      m.set_step_limit(30);
      for (bool ctrl : {false, true}) {
        const auto& e = f.examples[seed % std::size(kPairs)];
        auto b = m.decode(e.graph, e.ctx, f.kg, {1, ctrl, 0});
        auto g = m.greedy(e.graph, e.ctx, f.kg, ctrl);
        CHECK(b.symbols == g.symbols);
        CHECK(b.blocks == g.blocks);
        CHECK(b.log_prob == g.log_prob);
        ++checked;
      }
    }
  CHECK(checked >= 100);
}

TEST_CASE("controller guarantees assembly") {
  const auto& f = fixture();
  std::mt19937_64 rng(3);
  std::size_t guided = 0, unguided_ok = 0, unguided = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed)
    for (auto mode : {OutputMode::Atomic, OutputMode::Decomposed}) {
      auto m = f.model(mode, seed, 6);
      randomize(m.params(), rng, 2.0);
      m.set_step_limit(24);
      for (const auto& e : f.examples) {
        auto r = m.decode(e.graph, e.ctx, f.kg, {3, true, 0});
        CHECK_MESSAGE(r.assembles, r.problem << " " << blocks::print_blocks(r.blocks));
        if (r.assembles) CHECK_NOTHROW(query::assemble(r.blocks, f.kg));
        ++guided;
        auto u = m.decode(e.graph, e.ctx, f.kg, {3, false, 0});
        ++unguided;
        if (u.assembles) ++unguided_ok;
      }
    }
  CHECK(guided == 640);
  MESSAGE("unguided assemblability " << unguided_ok << "/" << unguided);
}

TEST_CASE("controller masks agree with the legality oracle") {
  const auto& f = fixture();
  for (auto mode : {OutputMode::Atomic, OutputMode::Decomposed}) {
    auto vocab = f.vocab(mode);
    for (const auto& e : f.examples) {
      CandidateSet cands(vocab, e.ctx, f.kg);
      Controller ctrl(vocab, cands, f.kg, true);
      auto track = ctrl.start();
      const auto ids = vocab.encode(e.gold, e.ctx);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        auto mask = ctrl.allowed(track, 64);
        // the gold symbol is never masked
        CHECK_MESSAGE(mask[ids[i]], e.question << " step " << i);
        if (track.partial.empty()) {
          auto legal = query::legal_next(track.assembly, f.kg);
          CHECK(static_cast<bool>(mask[vocab.eos()]) == legal.may_end);
          // every unmasked start symbol leads to some block legal_next admits
          for (std::size_t s = 0; s < mask.size(); ++s) {
            if (!mask[s] || s == vocab.eos()) continue;
            bool some = false;
            for (const auto& c : cands.candidates())
              some = some || (c.symbols[0] == s && legal.admits(c.block, f.kg));
            CHECK_MESSAGE(some, vocab.symbols().symbol(s));
          }
        }
        ctrl.advance(track, ids[i]);
      }
      CHECK(track.assembles());
      CHECK(track.blocks == e.gold);
    }
  }

  // after literal(major, :city) only city-producing blocks remain
  auto vocab = f.vocab(OutputMode::Atomic);
  const auto& e = f.examples[5];
  CandidateSet cands(vocab, e.ctx, f.kg);
  Controller ctrl(vocab, cands, f.kg, true);
  auto track = ctrl.start();
  ctrl.advance(track, vocab.symbols().id("literal(major, :city)"));
  auto mask = ctrl.allowed(track, 64);
  std::size_t open = 0;
  for (const auto& c : cands.candidates()) {
    const bool city = blocks::satisfies(c.output, {blocks::SlotNeed::Kind::Entities, "city"});
    CHECK(static_cast<bool>(mask[c.symbols[0]]) == city);
    open += city;
  }
  CHECK(open > 3);
  CHECK(!mask[vocab.eos()]);
}

TEST_CASE("tight step budgets still finish") {
  const auto& f = fixture();
  std::mt19937_64 rng(17);
  auto m = f.model(OutputMode::Decomposed, 4, 6);
  randomize(m.params(), rng, 3.0);
  for (const auto& e : f.examples) {
    CandidateSet cands(m.output_vocab(), e.ctx, f.kg);
    const std::size_t min = cands.min_sequence();
    CHECK(min == 4);  // P:entity T:x </b> </s>
    for (std::size_t limit : {min, min + 1, min + 5}) {
      auto r = m.decode(e.graph, e.ctx, f.kg, {2, true, limit});
      CHECK(r.assembles);
      CHECK(r.symbols.size() <= limit);
    }
  }
}

TEST_CASE("decoding is deterministic and survives a checkpoint") {
  const auto& f = fixture();
  auto path = std::filesystem::temp_directory_path() / "spedn_g2s.ckpt";
  for (auto mode : {OutputMode::Atomic, OutputMode::Decomposed}) {
    auto a = f.model(mode, 11);
    auto b = f.model(mode, 11);
    CHECK(a.params().serialize() == b.params().serialize());
    a.set_step_limit(40);
    a.save(path);
    auto c = Graph2Seq::load(path);
    CHECK(c.params().serialize() == a.params().serialize());
    CHECK(c.output_vocab().symbols() == a.output_vocab().symbols());
    CHECK(c.node_vocab() == a.node_vocab());
    CHECK(c.step_limit() == 40);
    for (const auto& e : f.examples) {
      auto ra = a.decode(e.graph, e.ctx, f.kg, {});
      auto rc = c.decode(e.graph, e.ctx, f.kg, {});
      CHECK(ra.symbols == rc.symbols);
      CHECK(ra.log_prob == rc.log_prob);
    }
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".meta.json");
  CHECK_THROWS_AS(Graph2Seq::load(path), Error);
}
