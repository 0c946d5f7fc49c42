#include <queue>

#include "doctest.h"
#include "fixtures.hpp"
#include "spedn/common/text.hpp"
#include "spedn/prep/context.hpp"
#include "spedn/prep/stem.hpp"

using namespace spedn;
using namespace spedn::prep;
using spedn::testing::data_path;
using spedn::testing::mini_geo;

namespace {

const EntityLexicon& geo_lexicon() {
  static const auto lex = EntityLexicon::load(data_path("geo/lexicon.tsv"), mini_geo());
  return lex;
}

bool connected(const QuestionGraph& g) {
  if (g.size() == 0) return true;
  auto adj = g.adjacency();
  std::vector<bool> seen(g.size());
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (!seen[v]) seen[v] = true, ++count, q.push(v);
  }
  return count == g.size();
}

}  // namespace

TEST_CASE("stemmer exemplars") {
  CHECK(stem("cities") == "citi");
  CHECK(stem("city") == "citi");
  CHECK(stem("usa") == "usa");
}

TEST_CASE("porter reference vocabulary") {
  const std::pair<const char*, const char*> cases[] = {
      {"caresses", "caress"},   {"ponies", "poni"},       {"ties", "ti"},           {"caress", "caress"},
      {"cats", "cat"},          {"feed", "feed"},         {"agreed", "agre"},       {"plastered", "plaster"},
      {"bled", "bled"},         {"motoring", "motor"},    {"sing", "sing"},         {"conflated", "conflat"},
      {"troubled", "troubl"},   {"sized", "size"},        {"hopping", "hop"},       {"tanned", "tan"},
      {"falling", "fall"},      {"hissing", "hiss"},      {"fizzed", "fizz"},       {"failing", "fail"},
      {"filing", "file"},       {"happy", "happi"},       {"sky", "sky"},           {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"},  {"valenci", "valenc"},    {"digitizer", "digit"},
      {"vileli", "vile"},       {"operator", "oper"},     {"feudalism", "feudal"},  {"hopefulness", "hope"},
      {"callousness", "callous"}, {"formaliti", "formal"}, {"triplicate", "triplic"}, {"formative", "form"},
      {"electrical", "electr"}, {"hopeful", "hope"},      {"goodness", "good"},     {"revival", "reviv"},
      {"allowance", "allow"},   {"inference", "infer"},   {"airliner", "airlin"},   {"adjustable", "adjust"},
      {"defensible", "defens"}, {"irritant", "irrit"},    {"replacement", "replac"}, {"adjustment", "adjust"},
      {"dependent", "depend"},  {"adoption", "adopt"},    {"communism", "commun"},  {"activate", "activ"},
      {"effective", "effect"},  {"bowdlerize", "bowdler"}, {"probate", "probat"},   {"rate", "rate"},
      {"cease", "ceas"},        {"controll", "control"},  {"roll", "roll"},         {"rivers", "river"},
      {"populations", "popul"}, {"flights", "flight"},    {"states", "state"},      {"border", "border"},
  };
  for (const auto& [w, s] : cases) CHECK_MESSAGE(porter_stem(w) == s, w);
}

TEST_CASE("stem is idempotent on fixture and question words") {
  std::vector<std::string> words;
  for (const auto& e : mini_geo().entities())
    for (const auto& w : text::split_ws(e.id)) words.push_back(w);
  for (const auto& w : text::split_ws("what are the major cities in the smallest state in the us how many rivers does "
                                      "alaska have give me the number of populations of states which border texas "
                                      "agreed generalizations conditional"))
    words.push_back(w);
  for (const auto& w : words) CHECK(stem(stem(w)) == stem(w));
}

TEST_CASE("entity linking") {
  const auto& g = mini_geo();
  auto ri = link_entities({"in", "rhode", "island", "?"}, g, geo_lexicon());
  REQUIRE(ri.size() == 1);
  CHECK(ri[0] == EntityMention{1, 3, "rhode island", "state"});

  auto ny = link_entities(text::word_tokens("cities near new york city"), g, geo_lexicon());
  REQUIRE(ny.size() == 1);
  CHECK(ny[0].entity == "new york city");
  CHECK(ny[0].end - ny[0].begin == 3);

  CHECK(link_entities({"what", "is", "this"}, g, geo_lexicon()).empty());
  auto alias = link_entities(text::word_tokens("rivers in the united states"), g, geo_lexicon());
  REQUIRE(alias.size() == 1);
  CHECK(alias[0].entity == "usa");
  CHECK_THROWS(EntityLexicon::parse("alias\tatlantis\tnowhere\n", g));
}

TEST_CASE("context dictionary") {
  const auto& g = mini_geo();
  auto ctx = build_context("how many rivers does alaska have?", g, geo_lexicon());
  CHECK(ctx.types.count("river"));
  CHECK(ctx.types.at("river").surface);
  CHECK(ctx.types.at("state").linked);
  CHECK(std::count(ctx.relations.begin(), ctx.relations.end(), CandidateRelation{"loc", "river", "state"}) == 1);
  // R^in is every entity relation whose two ends are candidate types, read off the schema.
  std::size_t expected = 0;
  for (const auto& r : g.relations())
    if (r.is_entity_relation() && ctx.types.count(r.domain) && ctx.types.count(r.range_type())) ++expected;
  CHECK(ctx.relations.size() == expected);

  auto none = build_context("what is this", g, geo_lexicon());
  CHECK(none.types.empty());
  CHECK(none.relations.empty());
  CHECK(none.entities.empty());

  auto major = build_context("what are the major cities in texas", g, geo_lexicon());
  CHECK(major.tokens[4] == "citi");
  CHECK(major.types.at("city").surface);

  // "city" inside the linked span is not a type mention
  auto nyc = build_context("people in new york city", g, geo_lexicon());
  CHECK(nyc.type_mentions.empty());
  CHECK(nyc.types.size() == 1);

  CHECK(build_context("how many rivers does alaska have?", g, geo_lexicon()) == ctx);
}

TEST_CASE("tagger hints add stemmed matches only on free spans") {
  const auto& g = mini_geo();
  auto plain = build_context("towns in the mississippis", g, geo_lexicon());
  CHECK(plain.entities.empty());
  auto hinted = build_context("towns in the mississippis", g, geo_lexicon(), {{2, 4}});
  REQUIRE(hinted.entities.size() == 1);
  CHECK(hinted.entities[0].entity == "mississippi");
}

TEST_CASE("question graph sizes") {
  const auto& g = mini_geo();
  auto ctx = build_context("rivers in alaska please", g, geo_lexicon());
  REQUIRE(ctx.tokens.size() == 4);
  auto chain = to_question_graph(ctx, GraphMode::Chain);
  auto full = to_question_graph(ctx, GraphMode::Full);
  CHECK(chain.word_edges == 3);
  CHECK(full.word_edges == 6);
  for (const auto* q : {&chain, &full}) {
    CHECK(q->size() == ctx.tokens.size() + ctx.types.size() + ctx.relations.size());
    CHECK(q->edges.size() ==
          q->word_edges + ctx.entities.size() + ctx.type_mentions.size() + 2 * ctx.relations.size());
    CHECK(connected(*q));
  }
  CHECK(chain.symbols[2] == "@state");

  auto one = build_context("alaska", g, geo_lexicon());
  auto qg = to_question_graph(one, GraphMode::Chain);
  CHECK(qg.size() == 2 + one.relations.size());  // state -> state next_to joins R^in
  CHECK(qg.edges.size() - qg.word_edges - 2 * one.relations.size() == 1);
  CHECK(qg.symbols[1] == "T:state");
  CHECK(qg.kinds[1] == QuestionGraph::NodeKind::Type);
}

TEST_CASE("graph connectivity over many questions") {
  const auto& g = mini_geo();
  for (const char* q : {"what is the capital of texas", "which rivers traverse new york state",
                        "how many cities are in california", "name the major cities",
                        "what states border the state with the largest population", "hello"}) {
    auto ctx = build_context(q, g, geo_lexicon());
    CHECK(connected(to_question_graph(ctx, GraphMode::Chain)));
    CHECK(connected(to_question_graph(ctx, GraphMode::Full)));
  }
}
