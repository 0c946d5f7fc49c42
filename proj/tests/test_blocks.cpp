#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gen.hpp"
#include "spedn/blocks/block.hpp"
#include "spedn/common/error.hpp"

using namespace spedn;
using namespace spedn::blocks;
using spedn::testing::mini_atis;
using spedn::testing::mini_geo;

namespace {

const char* kGeoTable2 =
    "literal(major, :city) relation(city, loc, :state) ordinal(smallest, :state) relation(state, loc, :country) "
    "entity(country, id, 'usa')";
const char* kAtisTable2 =
    "entity(flight) relation(flight, from, :city) entity(city, id, 'dallas') relation(flight, to, :city) "
    "entity(city, id, 'pittsburgh') entity(flight, day_number, '08') entity(flight, month, 'july')";

// The same sequences as typeset, with the spaces the paper puts around '(' and ':'.
const char* kGeoTable2Typeset =
    "literal (major, : city) relation (city, loc, : state) ordinal (smallest, : state) relation (state, loc, : "
    "country) entity(country, id, 'usa')";

}  // namespace

TEST_CASE("the GEO exemplar parses into five blocks") {
  auto seq = parse_blocks(kGeoTable2);
  REQUIRE(seq.size() == 5);
  CHECK(std::get<LiteralBlock>(seq[0]) == LiteralBlock{"major", "city"});
  CHECK(std::get<RelationBlock>(seq[1]) == RelationBlock{"city", "loc", "state"});
  CHECK(std::get<OrdinalBlock>(seq[2]) == OrdinalBlock{"smallest", "state"});
  CHECK(std::get<EntityBlock>(seq[4]).constraint->value == BlockValue::text("usa"));
  CHECK(print_blocks(parse_blocks(kGeoTable2Typeset)) == kGeoTable2);
}

TEST_CASE("entity(flight) has no constraint") {
  auto seq = parse_blocks("entity(flight)");
  REQUIRE(seq.size() == 1);
  CHECK(std::get<EntityBlock>(seq[0]) == EntityBlock{"flight", std::nullopt});
}

TEST_CASE("arity and syntax errors") {
  try {
    parse_blocks("relation(city, loc)");
    FAIL("expected arity error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::Arity);
  }
  try {
    parse_blocks("entity(city) relation(city loc, :state)");
    FAIL("expected syntax error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(e.offset() >= 13);
  }
  CHECK_THROWS_AS(parse_blocks(""), ParseError);
  CHECK_THROWS_AS(parse_blocks("entity(city"), ParseError);
  CHECK_THROWS_AS(parse_blocks("entity(city, id, 'x)"), ParseError);
  CHECK_THROWS_AS(parse_blocks("galaxy(city)"), ParseError);
  CHECK_THROWS_AS(parse_blocks("aggr(sum, :city)"), ParseError);
  CHECK_THROWS_AS(parse_blocks("join(intersection, :city)"), ParseError);
  CHECK_THROWS_AS(parse_blocks("relation(city, loc, state)"), ParseError);
}

TEST_CASE("canonical printing") {
  CHECK(print_blocks({}) == "");
  CHECK(print_blocks(parse_blocks("aggr( count , :river )")) == "aggr(count, :river)");
  CHECK(print_blocks(parse_blocks(kGeoTable2)) == kGeoTable2);
  CHECK(print_blocks(parse_blocks(kAtisTable2)) == kAtisTable2);
  CHECK(print_blocks(parse_blocks("entity(city,major,1)\n\tjoin(union,:city,:city,:city)")) ==
        "entity(city, major, 1) join(union, :city, :city, :city)");
}

TEST_CASE("validation against the fixtures") {
  CHECK(validate_blocks(parse_blocks(kGeoTable2), mini_geo()).empty());
  CHECK(validate_blocks(parse_blocks(kAtisTable2), mini_atis()).empty());
  CHECK(validate_blocks(parse_blocks("entity(city, id, 'dallas')"), mini_atis()).empty());

  auto v = validate_blocks(parse_blocks("relation(city, population, :state)"), mini_geo());
  REQUIRE(v.size() == 1);
  CHECK(v[0].message.find("population") != std::string::npos);
  CHECK(v[0].message.find("R^e") != std::string::npos);

  CHECK_FALSE(validate_blocks(parse_blocks("entity(galaxy)"), mini_geo()).empty());
  CHECK_FALSE(validate_blocks(parse_blocks("literal(area, :city)"), mini_geo()).empty());
  CHECK_FALSE(validate_blocks(parse_blocks("literal(loc, :city)"), mini_geo()).empty());
  CHECK_FALSE(validate_blocks(parse_blocks("relation(river, next_to, :state)"), mini_geo()).empty());
  CHECK_FALSE(validate_blocks(parse_blocks("join(union, :city, :state)"), mini_geo()).empty());
  CHECK_FALSE(validate_blocks(parse_blocks("entity(state, area, 'big')"), mini_geo()).empty());
  CHECK_FALSE(validate_blocks(parse_blocks("aggr(average, :country)"), mini_geo()).empty());
  // Inverted signature direction is accepted.
  CHECK(validate_blocks(parse_blocks("relation(state, loc, :city)"), mini_geo()).empty());

  auto two = validate_blocks(parse_blocks("entity(state) entity(galaxy) literal(loc, :city)"), mini_geo());
  REQUIRE(two.size() == 2);
  CHECK(two[0].index == 1);
  CHECK(two[1].index == 2);
}

TEST_CASE("output types") {
  const auto& g = mini_geo();
  CHECK(block_output_type(parse_block("aggr(count, :city)"), g) == OutputType{ScalarOut{}});
  CHECK(block_output_type(parse_block("entity(state, id, 'texas')"), g) == OutputType{EntitySetOut{"state"}});
  CHECK(block_output_type(parse_block("literal(len, :river)"), g) ==
        OutputType{ValuesOut{kg::LiteralKind::Decimal, "river"}});
  CHECK(block_output_type(parse_block("literal(major, :city)"), g) == OutputType{EntitySetOut{"city"}});
  CHECK(block_output_type(parse_block("ordinal(smallest, :state)"), g) == OutputType{EntitySetOut{"state"}});
  CHECK(block_output_type(parse_block("join(exclude, :city, :city)"), g) == OutputType{EntitySetOut{"city"}});
  CHECK(describe(OutputType{ScalarOut{}}) == "scalar-number");
}

TEST_CASE("slots") {
  CHECK(slots_of(parse_block("entity(city)")).empty());
  auto s = slots_of(parse_block("aggr(average, :river)"));
  REQUIRE(s.size() == 1);
  CHECK(s[0].kind == SlotNeed::Kind::Values);
  CHECK(slots_of(parse_block("join(union, :city, :city, :city)")).size() == 3);
}

TEST_CASE("property: parse . print is the identity on random schema-valid sequences") {
  for (const auto* g : {&mini_geo(), &mini_atis()}) {
    auto lex = query::OrdinalLexicon::load(spedn::testing::data_path(g == &mini_geo() ? "geo/ordinals.tsv"
                                                                                       : "atis/ordinals.tsv"));
    auto pool = spedn::testing::full_pool(*g);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
      BlockSequence seq;
      std::size_t n = 1 + rng() % 7;
      for (std::size_t k = 0; k < n; ++k) seq.push_back(spedn::testing::random_block(*g, lex, pool, rng));
      CHECK(validate_blocks(seq, *g).empty());
      auto text = print_blocks(seq);
      auto back = parse_blocks(text);
      CHECK(back == seq);
      CHECK(print_blocks(back) == text);
    }
  }
}

TEST_CASE("property: print . parse is idempotent on messy accepted text") {
  std::mt19937_64 rng(3);
  const auto canon = print_blocks(parse_blocks(kAtisTable2));
  for (int i = 0; i < 300; ++i) {
    std::string messy;
    for (char c : canon) {
      if (c == ' ' || c == '(' || c == ',' || c == ':') {
        if (c != ' ') messy += c;
        messy += std::string(rng() % 3, " \t\n"[rng() % 3]);
        if (c == ' ') messy += ' ';
      } else {
        messy += c;
      }
    }
    auto once = print_blocks(parse_blocks(messy));
    CHECK(once == canon);
    CHECK(print_blocks(parse_blocks(once)) == once);
  }
}

TEST_CASE("property: single-field mutations that break the schema are rejected") {
  const auto& g = mini_geo();
  auto lex = query::OrdinalLexicon::load(spedn::testing::data_path("geo/ordinals.tsv"));
  auto pool = spedn::testing::full_pool(g);
  std::mt19937_64 rng(5);
  int mutated = 0;
  for (int i = 0; i < 2000; ++i) {
    auto b = spedn::testing::random_block(g, lex, pool, rng);
    SemanticBlock bad = b;
    std::visit(
        [&](auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, EntityBlock>) {
            if (v.constraint && rng() % 2) v.constraint->attr = "next_to";
            else v.type = "galaxy";
          } else if constexpr (std::is_same_v<T, RelationBlock>) {
            switch (rng() % 3) {
              case 0: v.rel = "population"; break;
              case 1: v.out_type = "galaxy"; break;
              default: v.in_type = v.in_type == "river" ? "country" : "river";
            }
            if (v.out_type == "river" && v.in_type == "river") v.in_type = "country";
          } else if constexpr (std::is_same_v<T, LiteralBlock>) {
            v.attr = rng() % 2 ? "loc" : "altitude";
          } else if constexpr (std::is_same_v<T, OrdinalBlock>) {
            v.type = "galaxy";
          } else if constexpr (std::is_same_v<T, AggrBlock>) {
            v.type = "galaxy";
          } else {
            v.types.back() = v.types.front() == "city" ? "state" : "city";
          }
        },
        bad);
    // A relation mutated onto another valid signature is still valid; skip those.
    if (auto* r = std::get_if<RelationBlock>(&bad)) {
      bool valid_sig = false;
      for (const auto* s : g.entity_signatures(r->rel))
        valid_sig = valid_sig || (s->domain == r->out_type && s->range_type() == r->in_type) ||
                    (s->domain == r->in_type && s->range_type() == r->out_type);
      if (valid_sig) continue;
    }
    CHECK_FALSE(validate_block(bad, g).empty());
    ++mutated;
  }
  CHECK(mutated > 1500);
}
