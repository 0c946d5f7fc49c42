#include "spedn/train/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"
#include "spedn/model/symbols.hpp"

namespace spedn::train {

Domain Domain::load(const std::filesystem::path& dir) {
  return load(dir / "kg.tsv", dir / "lexicon.tsv", dir / "ordinals.tsv");
}

Domain Domain::load(const std::filesystem::path& kg, const std::filesystem::path& lexicon,
                    const std::filesystem::path& ordinals) {
  Domain d{kg::load_kg(kg), {}, {}};
  d.entities = std::filesystem::exists(lexicon) ? prep::EntityLexicon::load(lexicon, d.kg)
                                                : prep::EntityLexicon::from_kg(d.kg);
  d.ordinals = std::filesystem::exists(ordinals) ? query::OrdinalLexicon::load(ordinals)
                                                 : query::OrdinalLexicon::defaults();
  return d;
}

std::vector<CorpusEntry> parse_corpus(std::string_view text) {
  std::vector<CorpusEntry> out;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(text, '\n')) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() < 2 || f.size() > 3)
      throw ParseError(ErrorKind::Parse, "expected question<TAB>blocks[<TAB>logical form]", 0, lineno);
    CorpusEntry e{text::trim(f[0]), {}, f.size() == 3 ? text::trim(f[2]) : ""};
    try {
      e.gold = blocks::parse_blocks(f[1]);
    } catch (const ParseError& p) {
      throw ParseError(p.kind(), p.what(), p.offset(), lineno);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str());
}

std::string format_corpus(const std::vector<CorpusEntry>& corpus) {
  std::string out;
  for (const auto& e : corpus) {
    out += e.question + "\t" + blocks::print_blocks(e.gold);
    if (!e.logical_form.empty()) out += "\t" + e.logical_form;
    out += "\n";
  }
  return out;
}

void save_corpus(const std::filesystem::path& file, const std::vector<CorpusEntry>& corpus) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << format_corpus(corpus);
}

// ---------------------------------------------------------------------------
// Templated generation

namespace {

using Fill = std::map<std::string, std::string>;

struct Template {
  std::vector<std::string> questions;
  std::string lf;
};

std::string substitute(std::string s, const Fill& fill) {
  for (const auto& [k, v] : fill)
    for (auto pos = s.find(k); pos != std::string::npos; pos = s.find(k, pos + v.size())) s.replace(pos, k.size(), v);
  return s;
}

// Keeps an instance only if the whole pipeline accepts it.
bool usable(const CorpusEntry& e, const Domain& d) {
  try {
    if (!blocks::validate_blocks(e.gold, d.kg).empty()) return false;
    query::execute(query::assemble(e.gold, d.kg), d.kg, d.ordinals);
    auto ctx = prep::build_context(e.question, d.kg, d.entities);
    for (const auto& b : e.gold) {
      const auto* eb = std::get_if<blocks::EntityBlock>(&b);
      if (eb && eb->constraint && eb->constraint->attr == "id" && !model::to_template(b, ctx).pointer) return false;
    }
    return true;
  } catch (const Error&) {
    return false;
  }
}

// Instances per template are shuffled, then templates are dealt round-robin.
Split deal(std::vector<std::vector<CorpusEntry>> groups, const GeneratorOptions& opts, std::mt19937_64& rng) {
  for (auto& g : groups) std::shuffle(g.begin(), g.end(), rng);
  std::vector<CorpusEntry> order;
  std::set<std::string> seen;
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (auto& g : groups) {
      if (i >= g.size()) continue;
      any = true;
      if (seen.insert(g[i].question).second) order.push_back(g[i]);
    }
    if (!any) break;
  }
  order.resize(std::min(order.size(), opts.train + opts.test));
  std::vector<std::size_t> idx(order.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> held(order.size(), 0);
  for (std::size_t i = 0; i < std::min(opts.test, idx.size()); ++i) held[idx[i]] = 1;
  Split s;
  for (std::size_t i = 0; i < order.size(); ++i) (held[i] ? s.test : s.train).push_back(order[i]);
  return s;
}

template <class Convert>
std::vector<std::vector<CorpusEntry>> instantiate_all(const std::vector<Template>& templates,
                                                      const std::function<std::vector<Fill>(const Template&)>& fills,
                                                      const Domain& d, std::mt19937_64& rng, Convert convert) {
  std::vector<std::vector<CorpusEntry>> groups;
  for (const auto& t : templates) {
    std::vector<CorpusEntry> g;
    for (const auto& f : fills(t)) {
      const auto& q = t.questions[std::uniform_int_distribution<std::size_t>(0, t.questions.size() - 1)(rng)];
      CorpusEntry e{substitute(q, f), {}, substitute(t.lf, f)};
      try {
        e.gold = convert(e.logical_form);
      } catch (const Error&) {
        continue;
      }
      if (usable(e, d)) g.push_back(std::move(e));
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<std::string> ids_of(const kg::KnowledgeGraph& kg, const std::string& type) {
  const auto& s = kg.entities_of_type(type);
  return {s.begin(), s.end()};
}

bool uses(const Template& t, const std::string& slot) {
  return t.lf.find(slot) != std::string::npos ||
         std::any_of(t.questions.begin(), t.questions.end(), [&](const auto& q) { return q.find(slot) != std::string::npos; });
}

const std::vector<Template>& geo_templates() {
  static const std::vector<Template> t = {
      {{"how many rivers does {S} have", "how many rivers are in {S}", "how many rivers run through {S}"},
       "answer(A, count(B, (river(B), traverse(B, C), const(C, stateid('{S}'))), A))"},
      {{"what is the capital of {S}", "what is the capital city of {S}", "name the capital of {S}"},
       "answer(A, (capital(A), loc(A, B), const(B, stateid('{S}'))))"},
      {{"which states border {S}", "what states are next to {S}", "name the states bordering {S}"},
       "answer(A, (state(A), next_to(A, B), const(B, stateid('{S}'))))"},
      {{"what is the population of {S}", "how many people live in {S}", "how many residents does {S} have"},
       "answer(A, (population(B, A), const(B, stateid('{S}'))))"},
      {{"what is the area of {S}", "how big is {S}", "how large is {S}"},
       "answer(A, (area(B, A), const(B, stateid('{S}'))))"},
      {{"what are the major cities in {S}", "name the major cities in {S}", "list the major cities of {S}"},
       "answer(A, (major(A), city(A), loc(A, B), const(B, stateid('{S}'))))"},
      {{"what cities are in {S}", "which cities are located in {S}", "list the cities in {S}"},
       "answer(A, (city(A), loc(A, B), const(B, stateid('{S}'))))"},
      {{"what rivers are in {S}", "which rivers run through {S}", "name the rivers in {S}"},
       "answer(A, (river(A), traverse(A, B), const(B, stateid('{S}'))))"},
      {{"what is the largest city in {S}", "which city in {S} is the largest", "name the largest city in {S}"},
       "answer(A, largest(A, (city(A), loc(A, B), const(B, stateid('{S}')))))"},
      {{"what is the longest river in {S}", "which river in {S} is the longest", "name the longest river in {S}"},
       "answer(A, longest(A, (river(A), traverse(A, B), const(B, stateid('{S}')))))"},
      {{"how many cities are in {S}", "how many cities does {S} have", "count the cities in {S}"},
       "answer(A, count(B, (city(B), loc(B, C), const(C, stateid('{S}'))), A))"},
      {{"how many states border {S}", "how many states are next to {S}", "how many neighbors does {S} have"},
       "answer(A, count(B, (state(B), next_to(B, C), const(C, stateid('{S}'))), A))"},
      {{"which states does the {R} run through", "what states does the {R} river traverse", "where does the {R} flow"},
       "answer(A, (state(A), traverse(B, A), const(B, riverid('{R}'))))"},
      {{"what is the population of {C}", "how many people live in {C}", "how many citizens does {C} have"},
       "answer(A, (population(B, A), const(B, cityid('{C}', _))))"},
      {{"what state is {C} in", "which state is {C} located in", "where is {C}"},
       "answer(A, (state(A), loc(B, A), const(B, cityid('{C}', _))))"},
      {{"how long is the {R}", "what is the length of the {R} river", "how long is the {R} river"},
       "answer(A, (len(B, A), const(B, riverid('{R}'))))"},
      {{"what is the average population of the states bordering {S}",
        "what is the average population of states next to {S}"},
       "answer(A, average(B, (population(C, B), state(C), next_to(C, D), const(D, stateid('{S}'))), A))"},
      {{"what is the population of the capital of {S}", "how many people live in the capital of {S}"},
       "answer(A, (population(B, A), capital(B), loc(B, C), const(C, stateid('{S}'))))"},
      {{"what rivers flow through states bordering {S}", "which rivers run through the states next to {S}"},
       "answer(A, (river(A), traverse(A, B), state(B), next_to(B, C), const(C, stateid('{S}'))))"},
      {{"which states border both {S} and {S2}", "what states are next to {S} and {S2}"},
       "answer(A, (state(A), next_to(A, B), const(B, stateid('{S}')), next_to(A, C), const(C, stateid('{S2}'))))"},
      {{"what is the smallest state", "which state is the smallest"}, "answer(A, smallest(A, state(A)))"},
      {{"what is the largest state", "which state is the largest"}, "answer(A, largest(A, state(A)))"},
      {{"what is the longest river", "which river is the longest"}, "answer(A, longest(A, river(A)))"},
      {{"what is the shortest river", "which river is the shortest"}, "answer(A, shortest(A, river(A)))"},
      {{"what is the largest city in the us", "which city in the usa is the largest"},
       "answer(A, largest(A, (city(A), loc(A, B), state(B), loc(B, C), const(C, countryid(usa)))))"},
      {{"how many states are in the us", "how many states does the usa have"},
       "answer(A, count(B, (state(B), loc(B, C), const(C, countryid(usa))), A))"},
  };
  return t;
}

}  // namespace

Split generate_geo(const Domain& d, const logic::GeoPredicateTable& table, const GeneratorOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  const auto states = ids_of(d.kg, "state");
  const auto cities = ids_of(d.kg, "city");
  const auto rivers = ids_of(d.kg, "river");
  auto fills = [&](const Template& t) {
    std::vector<Fill> out;
    if (uses(t, "{S2}")) {
      for (const auto& a : states)
        for (const auto& b : states)
          if (a < b) out.push_back({{"{S}", a}, {"{S2}", b}});
    } else if (uses(t, "{S}")) {
      for (const auto& s : states) out.push_back({{"{S}", s}});
    } else if (uses(t, "{C}")) {
      for (const auto& c : cities) out.push_back({{"{C}", c}});
    } else if (uses(t, "{R}")) {
      for (const auto& r : rivers) out.push_back({{"{R}", r}});
    } else {
      out.push_back({});
    }
    return out;
  };
  auto groups = instantiate_all(geo_templates(), fills, d, rng, [&](const std::string& lf) {
    return logic::geo_to_blocks(logic::parse_geo(lf), d.kg, table);
  });
  return deal(std::move(groups), opts, rng);
}

Split generate_atis(const Domain& d, const logic::AtisTable& table, const GeneratorOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  // fills come from actual flights so answers are never empty
  std::vector<Fill> flights;
  for (const auto& e : d.kg.entities()) {
    if (e.type != "flight") continue;
    Fill f;
    kg::EntitySet one{e.id};
    for (const char* rel : {"from", "to", "airline"}) {
      auto objs = d.kg.neighbors(rel, one, kg::Direction::Inverse);
      if (!objs.empty()) f[std::string("{") + rel + "}"] = *objs.begin();
    }
    for (const auto& [a, v] : e.attrs)
      if (std::holds_alternative<std::string>(v)) f["{" + a + "}"] = std::get<std::string>(v);
    if (f.count("{day_number}")) {
      auto day = f["{day_number}"];
      f["{day}"] = day.size() == 2 && day[0] == '0' ? day.substr(1) : day;
    }
    flights.push_back(std::move(f));
  }
  static const std::vector<Template> templates = {
      {{"flights from {from} to {to}", "show me flights from {from} to {to}", "list flights from {from} to {to}"},
       "(_lambda $0e (_and (_flight $0) (_from $0 {from}:_ci) (_to $0 {to}:_ci)))"},
      {{"nonstop flights from {from} to {to}", "show me nonstop flights from {from} to {to}"},
       "(_lambda $0e (_and (_flight $0) (_nonstop $0) (_from $0 {from}:_ci) (_to $0 {to}:_ci)))"},
      {{"{airline} flights from {from} to {to}", "show me {airline} flights from {from} to {to}"},
       "(_lambda $0e (_and (_flight $0) (_airline $0 {airline}:_al) (_from $0 {from}:_ci) (_to $0 {to}:_ci)))"},
      {{"flights from {from} to {to} on {month} {day}", "show me flights from {from} to {to} on {month} {day}"},
       "(_lambda $0e (_and (_flight $0) (_from $0 {from}:_ci) (_to $0 {to}:_ci) (_day_number $0 {day}:_dn) "
       "(_month $0 {month}:_mn)))"},
      {{"flights from {from}", "show me flights leaving {from}", "what flights depart from {from}"},
       "(_lambda $0e (_and (_flight $0) (_from $0 {from}:_ci)))"},
      {{"flights to {to}", "show me flights arriving in {to}", "what flights go to {to}"},
       "(_lambda $0e (_and (_flight $0) (_to $0 {to}:_ci)))"},
      {{"{airline} flights from {from}", "show me {airline} flights leaving {from}"},
       "(_lambda $0e (_and (_flight $0) (_airline $0 {airline}:_al) (_from $0 {from}:_ci)))"},
      {{"flights from {from} to {to} in {month}", "show me flights from {from} to {to} in {month}"},
       "(_lambda $0e (_and (_flight $0) (_from $0 {from}:_ci) (_to $0 {to}:_ci) (_month $0 {month}:_mn)))"},
  };
  auto fills = [&](const Template& t) {
    std::vector<Fill> out;
    for (const auto& f : flights) {
      bool ok = true;
      for (const char* k : {"{from}", "{to}", "{airline}", "{month}", "{day}"})
        if (uses(t, k) && !f.count(k)) ok = false;
      if (ok) out.push_back(f);
    }
    return out;
  };
  auto groups = instantiate_all(templates, fills, d, rng, [&](const std::string& lf) {
    return logic::atis_to_blocks(logic::parse_atis(lf), d.kg, table);
  });
  return deal(std::move(groups), opts, rng);
}

}  // namespace spedn::train
