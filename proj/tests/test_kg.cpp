#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

using namespace spedn;
using spedn::testing::data_path;
using spedn::testing::mini_geo;

namespace {

// Raw records read straight from the fixture file, bypassing the loader.
std::vector<std::vector<std::string>> raw_records(const std::string& tag) {
  std::ifstream in(data_path("geo/kg.tsv"));
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    auto f = text::split(line, '\t');
    if (!f.empty() && f[0] == tag) out.push_back(f);
  }
  return out;
}

kg::EntitySet scan_neighbors(const kg::KnowledgeGraph& g, const std::string& rel, const kg::EntitySet& objs,
                             kg::Direction dir) {
  kg::EntitySet out;
  for (const auto& f : g.facts()) {
    if (f.rel != rel) continue;
    if (dir == kg::Direction::Forward && objs.count(f.object)) out.insert(f.subject);
    if (dir == kg::Direction::Inverse && objs.count(f.subject)) out.insert(f.object);
  }
  return out;
}

}  // namespace

TEST_CASE("mini-GEO loads with the expected type set") {
  const auto& g = mini_geo();
  for (const char* t : {"state", "city", "river", "capital", "country"}) CHECK(g.has_type(t));
  CHECK(g.entities().size() == raw_records("ent").size());
}

TEST_CASE("empty sections give a valid empty graph") {
  auto g = kg::parse_kg("type\tstate\n# nothing else\n");
  CHECK(g.entities().empty());
  CHECK(g.facts().empty());
  CHECK(g.entities_of_type("state").empty());
  auto none = kg::parse_kg("");
  CHECK(none.types().empty());
}

TEST_CASE("undeclared relation is a schema error naming it") {
  const std::string src = "type\tstate\nent\ttexas\tstate\nent\tutah\tstate\nfact\tborder\ttexas\tutah\n";
  try {
    kg::parse_kg(src);
    FAIL("expected schema error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::Schema);
    CHECK(std::string(e.what()).find("border") != std::string::npos);
    CHECK(e.line() == 4);
  }
}

TEST_CASE("schema errors: undeclared type, kind mismatch, duplicate id") {
  CHECK_THROWS_AS(kg::parse_kg("type\tstate\nent\tx\tgalaxy\n"), ParseError);
  CHECK_THROWS_AS(kg::parse_kg("type\tstate\nattr\tarea\tstate\t->\tdecimal\nent\tx\tstate\tarea='big'\n"),
                  ParseError);
  CHECK_THROWS_AS(kg::parse_kg("type\tstate\nent\tx\tstate\nent\tx\tstate\n"), ParseError);
  CHECK_THROWS_AS(kg::parse_kg("type\tstate\nrel\tloc\tstate\t->\tnowhere\n"), ParseError);
  CHECK_THROWS_AS(kg::parse_kg("type\ta\ntype\tb\nrel\tr\ta\t->\tb\nent\tx\tb\nent\ty\ta\nfact\tr\tx\ty\n"),
                  ParseError);
  CHECK_THROWS_AS(kg::parse_kg("bogus\trecord\n"), ParseError);
}

TEST_CASE("entities_of_type matches a scan of the fixture") {
  const auto& g = mini_geo();
  kg::EntitySet states;
  for (const auto& r : raw_records("ent"))
    if (r[2] == "state") states.insert(r[1]);
  CHECK(g.entities_of_type("state") == states);
  CHECK(g.entities_of_type("country") == kg::EntitySet{"usa"});
  CHECK_THROWS_AS(g.entities_of_type("galaxy"), Error);
}

TEST_CASE("entities_of_type partitions E") {
  const auto& g = mini_geo();
  std::size_t total = 0;
  for (const auto& t : g.types()) total += g.entities_of_type(t).size();
  CHECK(total == g.entities().size());
  for (const auto& e : g.entities()) {
    int hits = 0;
    for (const auto& t : g.types()) hits += static_cast<int>(g.entities_of_type(t).count(e.id));
    CHECK(hits == 1);
  }
}

TEST_CASE("neighbors of texas over next_to matches a scan of the raw fact lines") {
  kg::EntitySet expected;
  for (const auto& r : raw_records("fact"))
    if (r[1] == "next_to" && r[3] == "texas") expected.insert(r[2]);
  auto got = mini_geo().neighbors("next_to", {"texas"}, kg::Direction::Forward);
  CHECK(got == expected);
  CHECK(got == kg::EntitySet{"arkansas", "louisiana", "new mexico", "oklahoma"});
}

TEST_CASE("neighbors edge cases") {
  const auto& g = mini_geo();
  CHECK(g.neighbors("loc", {}, kg::Direction::Forward).empty());
  try {
    g.neighbors("population", {"texas"}, kg::Direction::Forward);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::WrongRelationKind);
  }
  CHECK_THROWS_AS(g.neighbors("border", {"texas"}, kg::Direction::Forward), Error);
}

TEST_CASE("index soundness: indexed neighbors equal a linear scan, exhaustively") {
  const auto& g = mini_geo();
  std::mt19937_64 rng(7);
  std::vector<std::string> ids;
  for (const auto& e : g.entities()) ids.push_back(e.id);
  std::set<std::string> rels;
  for (const auto& r : g.relations())
    if (r.is_entity_relation()) rels.insert(r.name);
  for (const auto& rel : rels) {
    for (auto dir : {kg::Direction::Forward, kg::Direction::Inverse}) {
      for (const auto& id : ids) CHECK(g.neighbors(rel, {id}, dir) == scan_neighbors(g, rel, {id}, dir));
      for (int trial = 0; trial < 20; ++trial) {
        kg::EntitySet s;
        for (int k = 0; k < 6; ++k) s.insert(ids[rng() % ids.size()]);
        CHECK(g.neighbors(rel, s, dir) == scan_neighbors(g, rel, s, dir));
      }
    }
  }
}

TEST_CASE("attr_values") {
  const auto& g = mini_geo();
  auto area = g.attr_values("area", {"texas"});
  REQUIRE(area.size() == 1);
  CHECK(std::get<double>(area[0]) == doctest::Approx(695.7));
  CHECK(g.attr_values("area", {}).empty());

  std::size_t rivers_with_len = 0;
  for (const auto& r : raw_records("ent"))
    if (r[2] == "river" && r.size() > 3 && r[3].rfind("len=", 0) == 0) ++rivers_with_len;
  auto lens = g.attr_values("len", g.entities_of_type("river"));
  CHECK(lens.size() == rivers_with_len);
  CHECK(lens.size() < g.entities_of_type("river").size());  // the fixture has one river without len

  CHECK_THROWS_AS(g.attr_values("next_to", {"texas"}), Error);
  CHECK_THROWS_AS(g.attr_values("height", {"texas"}), Error);
}

TEST_CASE("round trip: load, serialize, load gives the same graph and bytes") {
  const auto& g = mini_geo();
  auto text1 = kg::serialize_kg(g);
  auto g2 = kg::parse_kg(text1);
  CHECK(g2 == g);
  CHECK(kg::serialize_kg(g2) == text1);

  auto atis = kg::load_kg(data_path("atis/kg.tsv"));
  auto a1 = kg::serialize_kg(atis);
  CHECK(kg::parse_kg(a1) == atis);
  CHECK(kg::serialize_kg(kg::parse_kg(a1)) == a1);
}

TEST_CASE("relations may be reflexive and multi-valued") {
  auto g = kg::parse_kg(
      "type\tn\nrel\tr\tn\t->\tn\nent\ta\tn\nent\tb\tn\nfact\tr\ta\ta\nfact\tr\ta\tb\nfact\tr\ta\tb\n");
  CHECK(g.facts().size() == 2);
  CHECK(g.neighbors("r", {"a"}, kg::Direction::Inverse) == kg::EntitySet{"a", "b"});
}

TEST_CASE("attribute lookup is case-folded and kind-aware") {
  const auto& g = mini_geo();
  CHECK(g.lookup_attr("state", "id", kg::Literal(std::string("Texas"))) == kg::EntitySet{"texas"});
  auto majors = g.lookup_attr("city", "major", kg::Literal(std::int64_t{1}));
  CHECK(majors.count("houston"));
  CHECK_FALSE(majors.count("waco"));
}
