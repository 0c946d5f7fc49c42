#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"
#include "spedn/encoder/crf.hpp"
#include "spedn/encoder/layers.hpp"
#include "spedn/encoder/tagger.hpp"
#include "spedn/prep/context.hpp"

using namespace spedn;
using namespace spedn::encoder;
using namespace spedn::tensor;

namespace {

Tensor rand_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t(r, c);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

void randomize(ParameterStore& s, std::mt19937_64& rng, double scale = 0.5) {
  for (const auto& p : s.all())
    for (auto& v : p->value.values()) v = std::uniform_real_distribution<double>(-scale, scale)(rng);
}

Var probe(const Var& y, std::uint64_t seed = 41) {
  std::mt19937_64 rng(seed);
  return sum_all(mul(y, constant(rand_tensor(y->value.rows(), y->value.cols(), rng))));
}

EncoderConfig small(bool relative) {
  EncoderConfig c;
  c.d = 4;
  c.d_k = 2;
  c.heads = 2;
  c.d_ff = 3;
  c.relative = relative;
  return c;
}

// Checks the parameters of a layer together with its input.
void check_layer(ParameterStore& store, const Var& x, const std::function<Var()>& fn, double tol = 1e-4) {
  auto leaves = store.all();
  leaves.push_back(x);
  auto r = grad_check_leaves(fn, leaves);
  CHECK_MESSAGE(r.max_rel_error <= tol, "rel=" << r.max_rel_error << " at " << r.worst);
  CHECK(r.checked > 0);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Every label sequence of length T over L labels, in lexicographic order.
std::vector<std::vector<std::size_t>> all_paths(std::size_t T, std::size_t L) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> y(T, 0);
  while (true) {
    out.push_back(y);
    std::size_t i = T;
    while (i > 0 && ++y[i - 1] == L) y[--i] = 0;
    if (i == 0) break;
  }
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  EncoderConfig c;
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small(true);
  c.d_ff = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("token embeddings") {
  auto [uni, bi] = TokenEmbedder::build_vocabs({{"a", "b", "c", "d", "e"}, {"x"}});
  ParameterStore store(5);
  TokenEmbedder emb(store, "e", uni, bi, 6);
  const auto& U = store.get("e.unigram")->value;
  const auto& B = store.get("e.bigram")->value;

  auto one = emb({"x"})->value;
  REQUIRE(one.shape() == Shape{1, 6});
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(one.at(0, j) == U.at(uni.id("x"), j));
    CHECK(one.at(0, 3 + j) == B.at(bi.id("x </w>"), j));
  }
  CHECK(emb({"a", "b", "c"})->value == emb({"a", "b", "c"})->value);

  // swapping tokens 1 and 3 touches unigram rows 1, 3 and bigram rows 0..3
  auto base = emb({"a", "b", "c", "d", "e"})->value;
  auto swapped = emb({"a", "d", "c", "b", "e"})->value;
  for (std::size_t i = 0; i < 5; ++i) {
    bool uni_same = true, bi_same = true;
    for (std::size_t j = 0; j < 3; ++j) {
      uni_same = uni_same && base.at(i, j) == swapped.at(i, j);
      bi_same = bi_same && base.at(i, 3 + j) == swapped.at(i, 3 + j);
    }
    CHECK(uni_same == (i != 1 && i != 3));
    CHECK(bi_same == (i == 4));
  }
  // unknown words share the reserved row
  CHECK(emb({"zzz"})->value.at(0, 0) == U.at(0, 0));
}

TEST_CASE("sinusoidal positions") {
  auto p0 = sinusoid(0, 8);
  for (std::size_t c = 0; c < 8; ++c) CHECK(p0[c] == (c % 2 ? 1.0 : 0.0));

  const std::size_t d = 16;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = static_cast<double>(rng() % 500), k = static_cast<double>(rng() % 50);
    CHECK(std::fabs(dot(sinusoid(t, d), sinusoid(t + k, d)) - dot(sinusoid(0, d), sinusoid(k, d))) <= 1e-9);
  }
  // component 2i has period 2 pi 10000^(2i/d)
  const double period = 2 * M_PI * std::pow(10000.0, 4.0 / d);
  CHECK(sinusoid(3.7, d)[4] == doctest::Approx(std::sin(3.7 / std::pow(10000.0, 4.0 / d))).epsilon(1e-15));
  CHECK(sinusoid(3.7 + period, d)[4] == doctest::Approx(sinusoid(3.7, d)[4]).epsilon(1e-9));

  auto pm = position_matrix(3, 4, 2);
  CHECK(pm.at(1, 0) == std::sin(3.0));
}

TEST_CASE("absolute attention") {
  std::mt19937_64 rng(9);
  auto cfg = small(false);
  ParameterStore store(1);
  MultiHeadAttention att(store, "a", cfg);

  auto single = att(constant(rand_tensor(1, 4, rng)));
  for (const auto& w : single.weights) CHECK(w[0] == 1.0);

  auto row = rand_tensor(1, 4, rng);
  Tensor same(5, 4);
  for (std::size_t i = 0; i < 5; ++i) std::copy_n(row.data(), 4, same.data() + i * 4);
  for (const auto& w : att(constant(same)).weights)
    for (auto v : w.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-14));

  auto many = att(constant(rand_tensor(6, 4, rng, 3.0)));
  for (const auto& w : many.weights)
    for (std::size_t i = 0; i < 6; ++i) {
      double z = 0;
      for (std::size_t j = 0; j < 6; ++j) z += w.at(i, j);
      CHECK(std::fabs(z - 1) <= 1e-12);
    }

  for (std::size_t n : {1, 3, 5}) {
    CAPTURE(n);
    auto x = leaf(rand_tensor(n, 4, rng));
    check_layer(store, x, [&] { return probe(att(x).out); });
  }
}

TEST_CASE("relative attention") {
  std::mt19937_64 rng(10);
  auto cfg = small(true);
  ParameterStore store(2);
  RelativeAttention att(store, "r", cfg);
  randomize(store, rng);

  SUBCASE("scores depend on offsets only") {
    auto h = constant(rand_tensor(5, 4, rng));
    auto base = att(h, 0);
    for (long shift : {1L, 17L, -5L, 100000L}) {
      auto moved = att(h, shift);
      for (std::size_t k = 0; k < cfg.heads; ++k) CHECK(std::memcmp(base.scores[k].data(), moved.scores[k].data(), 25 * 8) == 0);
      CHECK(base.out->value == moved.out->value);
    }
  }

  SUBCASE("with u = v = 0 and R = 0 the score is the raw Q K^T") {
    ParameterStore s(3);
    RelativeAttention plain(s, "p", cfg);
    auto h = constant(rand_tensor(4, 4, rng));
    auto out = plain(h, 0, RelativeTable::Zero);
    for (std::size_t k = 0; k < cfg.heads; ++k) {
      const auto& wq = s.get("p.h" + std::to_string(k) + ".wq")->value;
      for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t j = 0; j < 4; ++j) {
          double want = 0;
          for (std::size_t c = 0; c < cfg.d_k; ++c) {
            double q = 0;
            for (std::size_t r = 0; r < 4; ++r) q += h->value.at(t, r) * wq.at(r, c);
            want += q * h->value.at(j, k * cfg.d_k + c);
          }
          CHECK(out.scores[k].at(t, j) == doctest::Approx(want).epsilon(1e-13));
        }
    }
  }

  SUBCASE("four-term score against a direct evaluation") {
    auto h = constant(rand_tensor(3, 4, rng));
    auto out = att(h);
    for (std::size_t k = 0; k < cfg.heads; ++k) {
      const auto& wq = store.get("r.h" + std::to_string(k) + ".wq")->value;
      const auto& u = store.get("r.h" + std::to_string(k) + ".u")->value.values();
      const auto& v = store.get("r.h" + std::to_string(k) + ".v")->value.values();
      for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t j = 0; j < 3; ++j) {
          std::vector<double> q(cfg.d_k), key(cfg.d_k);
          for (std::size_t c = 0; c < cfg.d_k; ++c) {
            for (std::size_t r = 0; r < 4; ++r) q[c] += h->value.at(t, r) * wq.at(r, c);
            key[c] = h->value.at(j, k * cfg.d_k + c);
          }
          auto rel = sinusoid(static_cast<double>(t) - static_cast<double>(j), cfg.d_k);
          const double want = dot(q, key) + dot(q, rel) + dot(u, key) + dot(v, rel);
          CHECK(out.scores[k].at(t, j) == doctest::Approx(want).epsilon(1e-13));
        }
    }
  }

  SUBCASE("single position returns its value row") {
    auto h = constant(rand_tensor(1, 4, rng));
    auto out = att(h);
    std::vector<Var> vs;
    for (std::size_t k = 0; k < cfg.heads; ++k) {
      CHECK(out.weights[k][0] == 1.0);
      vs.push_back(matmul(h, store.get("r.h" + std::to_string(k) + ".wv")));
    }
    auto want = matmul(concat_cols(vs), store.get("r.wm"))->value;
    for (std::size_t c = 0; c < 4; ++c) CHECK(out.out->value[c] == doctest::Approx(want[c]).epsilon(1e-14));
  }

  SUBCASE("gradients including u and v") {
    for (std::size_t n : {1, 2, 4}) {
      CAPTURE(n);
      auto x = leaf(rand_tensor(n, 4, rng));
      check_layer(store, x, [&] { return probe(att(x).out); });
    }
  }
}

TEST_CASE("transformer layers") {
  std::mt19937_64 rng(11);
  for (bool rel : {false, true}) {
    ParameterStore store(4);
    TransformerLayer layer(store, "t", small(rel));
    randomize(store, rng);
    for (std::size_t n : {1, 2, 3}) {
      CAPTURE(n);
      auto x = leaf(rand_tensor(n, 4, rng));
      check_layer(store, x, [&] { return probe(layer(x)); });
    }
  }
  ParameterStore store(4);
  FeedForward ffn(store, "f", 4, 3);
  auto x = leaf(rand_tensor(3, 4, rng));
  check_layer(store, x, [&] { return probe(ffn(x)); });
}

TEST_CASE("bilstm") {
  std::mt19937_64 rng(12);
  ParameterStore store(6);
  BiLstm lstm(store, "l", 3, 2);
  randomize(store, rng);

  SUBCASE("reversal mirrors the halves") {
    ParameterStore swapped_store(6);
    BiLstm swapped(swapped_store, "l", 3, 2);
    swapped_store.get("l.fwd.w")->value = store.get("l.bwd.w")->value;
    swapped_store.get("l.fwd.b")->value = store.get("l.bwd.b")->value;
    swapped_store.get("l.bwd.w")->value = store.get("l.fwd.w")->value;
    swapped_store.get("l.bwd.b")->value = store.get("l.fwd.b")->value;
    auto x = rand_tensor(5, 3, rng);
    Tensor rx(5, 3);
    for (std::size_t t = 0; t < 5; ++t) std::copy_n(x.data() + t * 3, 3, rx.data() + (4 - t) * 3);
    auto a = lstm(constant(x))->value, b = swapped(constant(rx))->value;
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(a.at(t, c) == b.at(4 - t, 2 + c));
        CHECK(a.at(t, 2 + c) == b.at(4 - t, c));
      }
  }

  SUBCASE("zero weights give zero outputs") {
    ParameterStore z(1);
    BiLstm zero(z, "z", 3, 2);
    for (const auto& p : z.all()) std::fill(p->value.values().begin(), p->value.values().end(), 0.0);
    for (auto v : zero(constant(rand_tensor(4, 3, rng)))->value.values()) CHECK(v == 0.0);
  }

  SUBCASE("gradients through the gates") {
    for (std::size_t n : {1, 3, 4}) {
      CAPTURE(n);
      auto x = leaf(rand_tensor(n, 3, rng));
      check_layer(store, x, [&] { return probe(lstm(x)); });
    }
  }
}

TEST_CASE("gated fusion") {
  std::mt19937_64 rng(13);
  ParameterStore store(7);
  Fusion fuse(store, "f", 4);
  randomize(store, rng, 2.0);

  auto x = constant(rand_tensor(3, 4, rng, 5.0));
  CHECK(fuse(x, x)->value == x->value);

  auto z = fuse.gate(constant(rand_tensor(6, 4, rng)), constant(rand_tensor(6, 4, rng)))->value;
  for (auto v : z.values()) CHECK((v > 0 && v < 1));

  CHECK_THROWS_AS(fuse(x, constant(Tensor(2, 4))), Error);

  for (std::size_t n : {1, 2, 5}) {
    CAPTURE(n);
    auto xt = leaf(rand_tensor(n, 4, rng)), xb = leaf(rand_tensor(n, 4, rng));
    auto leaves = store.all();
    leaves.push_back(xt);
    leaves.push_back(xb);
    auto r = grad_check_leaves([&] { return probe(fuse(xt, xb)); }, leaves);
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("crf against enumeration") {
  std::mt19937_64 rng(14);
  std::size_t instances = 0;
  for (std::size_t L = 1; L <= 4; ++L)
    for (std::size_t T = 1; T <= 6; ++T)
      for (int rep = 0; rep < 3; ++rep) {
        auto e = rand_tensor(T, L, rng, 2.0), tr = rand_tensor(L + 2, L + 2, rng, 2.0);
        std::vector<double> scores;
        double best = -std::numeric_limits<double>::infinity();
        std::vector<std::size_t> arg;
        for (const auto& y : all_paths(T, L)) {
          const double s = crf::score(e, tr, y);
          scores.push_back(s);
          if (s > best) best = s, arg = y;
        }
        double m = *std::max_element(scores.begin(), scores.end()), z = 0;
        for (auto s : scores) z += std::exp(s - m);
        CHECK(std::fabs(crf::log_partition(e, tr) - (m + std::log(z))) <= 1e-6);
        CHECK(crf::viterbi(e, tr) == arg);
        ++instances;
      }
  CHECK(instances == 72);
}

TEST_CASE("crf closed forms") {
  // uniform scores: every path has probability L^-T
  for (std::size_t L : {2, 3}) {
    const std::size_t T = 4;
    auto nll = crf::neg_log_likelihood(constant(Tensor(T, L, 0.3)), constant(Tensor(L + 2, L + 2, -0.1)),
                                       std::vector<std::size_t>(T, 1));
    CHECK(-nll->value[0] == doctest::Approx(-static_cast<double>(T) * std::log(static_cast<double>(L))));
  }
  // strongly dominant O emissions decode to all O
  Tensor e(5, 3, -5.0);
  for (std::size_t t = 0; t < 5; ++t) e.at(t, 2) = 20;
  std::mt19937_64 rng(15);
  CHECK(crf::viterbi(e, rand_tensor(5, 5, rng)) == std::vector<std::size_t>(5, 2));
  CHECK(crf::viterbi(Tensor(0, 3), Tensor(5, 5)).empty());
  CHECK_THROWS_AS(crf::log_partition(Tensor(2, 3), Tensor(4, 4)), Error);
}

TEST_CASE("crf log-likelihood gradient") {
  std::mt19937_64 rng(16);
  for (auto [T, L] : {std::pair<std::size_t, std::size_t>{1, 2}, {3, 3}, {6, 4}}) {
    std::vector<std::size_t> gold;
    for (std::size_t t = 0; t < T; ++t) gold.push_back(rng() % L);
    auto r = grad_check([&](const auto& in) { return crf::neg_log_likelihood(in[0], in[1], gold); },
                        {rand_tensor(T, L, rng), rand_tensor(L + 2, L + 2, rng)});
    CHECK(r.max_rel_error <= 1e-4);
  }
}

TEST_CASE("bio helpers and tagged data") {
  CHECK(bio_spans({"O", "B-ENT", "I-ENT", "O", "B-ENT", "B-ENT", "I-ENT"}) ==
        std::vector<std::pair<std::size_t, std::size_t>>{{1, 3}, {4, 5}, {5, 7}});
  CHECK(bio_spans({"I-ENT", "O"}) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});
  CHECK(bio_labels(4, {{1, 3}}) == std::vector<std::string>{"O", "B-ENT", "I-ENT", "O"});

  auto data = parse_tagged("# comment\nrivers in rhode island ?\tO O B-ENT I-ENT\n");
  REQUIRE(data.size() == 1);
  CHECK(data[0].tokens.size() == 4);
  CHECK(parse_tagged(format_tagged(data[0])) == data);
  CHECK_THROWS_AS(parse_tagged("rivers in texas\tO O\n"), ParseError);
  CHECK_THROWS_AS(parse_tagged("rivers\tX\n"), ParseError);
  CHECK_THROWS_AS(parse_tagged("rivers O\n"), ParseError);
}

TEST_CASE("mention tagger trains, tags and round-trips") {
  const auto& g = testing::mini_geo();
  auto lex = prep::EntityLexicon::load(testing::data_path("geo/lexicon.tsv"), g);
  const char* templates[] = {"how many rivers does {} have", "what is the capital of {}",
                             "which states border {}",        "what is the population of {}",
                             "name the major cities in {}",   "how big is {}"};
  std::vector<TaggedSentence> data;
  std::size_t k = 0;
  for (const auto& e : g.entities()) {
    if (e.type != "state") continue;
    std::string tmpl = templates[k++ % 6];
    auto q = tmpl.replace(tmpl.find("{}"), 2, e.id);
    auto tokens = text::word_tokens(q);
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& m : prep::link_entities(tokens, g, lex)) spans.emplace_back(m.begin, m.end);
    data.push_back({tokens, bio_labels(tokens.size(), spans)});
  }
  REQUIRE(data.size() >= 10);

  EncoderConfig cfg;
  cfg.d = 16;
  cfg.d_k = 4;
  cfg.heads = 4;
  cfg.d_ff = 16;
  TaggerTraining opts;
  opts.epochs = 25;
  opts.batch = 8;
  double first = -1, last = 0;
  auto tagger = train_tagger(data, cfg, opts, [&](std::size_t, double loss) {
    if (first < 0) first = loss;
    last = loss;
  });
  CHECK(last < first);

  auto alaska = text::word_tokens("how many rivers does alaska have");
  CHECK(tagger.spans(alaska) == std::vector<std::pair<std::size_t, std::size_t>>{{4, 5}});
  CHECK(tagger.tag({}).empty());

  auto path = std::filesystem::temp_directory_path() / "spedn_tagger.ckpt";
  tagger.save(path);
  auto back = MentionTagger::load(path);
  CHECK(back.params().serialize() == tagger.params().serialize());
  for (const auto& s : data) CHECK(back.tag(s.tokens) == tagger.tag(s.tokens));
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".meta.json");
  CHECK_THROWS_AS(MentionTagger::load(path), Error);

  // the tagger's spans feed the linker as hints
  auto ctx = prep::build_context("how many rivers does alaska have", g, lex, tagger.spans(alaska));
  CHECK(ctx.entities.size() == 1);
}
