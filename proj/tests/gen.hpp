#pragma once

// Random generators shared by the property tests and the acceptance binary.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "spedn/blocks/block.hpp"
#include "spedn/kg/knowledge_graph.hpp"
#include "spedn/query/query_graph.hpp"

namespace spedn::testing {

inline blocks::BlockValue value_of(const kg::Literal& v) {
  if (std::holds_alternative<std::string>(v)) return blocks::BlockValue::text(std::get<std::string>(v));
  if (std::holds_alternative<bool>(v)) return blocks::BlockValue::number(std::get<bool>(v) ? "1" : "0");
  return blocks::BlockValue::number(kg::format_literal(v));
}

/// Every (type, attr) value present in the graph, ids included, capped per key.
inline query::ValuePool full_pool(const kg::KnowledgeGraph& g, std::size_t cap = 40) {
  query::ValuePool pool;
  auto push = [&](const std::string& type, const std::string& attr, const kg::Literal& v) {
    auto& vec = pool[{type, attr}];
    auto bv = value_of(v);
    if (vec.size() < cap && std::find(vec.begin(), vec.end(), bv) == vec.end()) vec.push_back(bv);
  };
  for (const auto& e : g.entities()) {
    push(e.type, "id", kg::Literal(e.id));
    for (const auto& [a, v] : e.attrs) push(e.type, a, v);
  }
  return pool;
}

template <class T, class Rng>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

/// A random schema-valid block drawn straight from the schema records.
template <class Rng>
blocks::SemanticBlock random_block(const kg::KnowledgeGraph& g, const query::OrdinalLexicon& lex,
                                   const query::ValuePool& pool, Rng& rng) {
  using namespace blocks;
  std::vector<std::string> types(g.types().begin(), g.types().end());
  for (;;) {
    switch (std::uniform_int_distribution<int>(0, 5)(rng)) {
      case 0: {
        const auto& t = pick(types, rng);
        std::vector<std::pair<std::string, std::string>> keys;
        for (const auto& [k, vals] : pool)
          if (k.first == t && !vals.empty()) keys.push_back(k);
        if (keys.empty() || rng() % 3 == 0) return EntityBlock{t, std::nullopt};
        const auto& k = pick(keys, rng);
        return EntityBlock{t, Constraint{k.second, pick(pool.at(k), rng)}};
      }
      case 1: {
        std::vector<const kg::RelationSignature*> rels;
        for (const auto& r : g.relations())
          if (r.is_entity_relation()) rels.push_back(&r);
        if (rels.empty()) continue;
        const auto* r = pick(rels, rng);
        if (rng() % 2) return RelationBlock{r->domain, r->name, r->range_type()};
        return RelationBlock{r->range_type(), r->name, r->domain};
      }
      case 2: {
        std::vector<const kg::RelationSignature*> attrs;
        for (const auto& r : g.relations())
          if (!r.is_entity_relation()) attrs.push_back(&r);
        if (attrs.empty()) continue;
        const auto* a = pick(attrs, rng);
        return LiteralBlock{a->name, a->domain};
      }
      case 3: {
        std::vector<std::pair<std::string, std::string>> keys;
        for (const auto& [k, e] : lex.entries())
          if (g.has_type(k.second)) keys.push_back(k);
        if (keys.empty()) continue;
        const auto& k = pick(keys, rng);
        return OrdinalBlock{k.first, k.second};
      }
      case 4: {
        const auto& t = pick(types, rng);
        if (rng() % 2) return AggrBlock{"count", t};
        bool numeric = false;
        for (const auto* a : g.attributes_of(t)) numeric = numeric || kg::is_numeric(a->literal_kind());
        if (!numeric) continue;
        return AggrBlock{"average", t};
      }
      default: {
        static const std::vector<std::string> ops{"intersection", "union", "exclude"};
        const auto& t = pick(types, rng);
        std::size_t n = 2 + rng() % 2;
        return JoinBlock{pick(ops, rng), std::vector<std::string>(n, t)};
      }
    }
  }
}

/// A controller-guided walk: each block is drawn from the universe blocks the
/// controller admits. Past `budget` blocks, slot-free blocks are preferred and
/// the walk stops as soon as it may end.
template <class Rng>
blocks::BlockSequence controller_walk(const kg::KnowledgeGraph& g, const std::vector<blocks::SemanticBlock>& universe,
                                      Rng& rng, std::size_t budget = 6) {
  query::AssemblyState st;
  blocks::BlockSequence seq;
  for (;;) {
    auto legal = query::legal_next(st, g);
    if (legal.may_end && (seq.size() >= budget || rng() % 3 == 0)) break;
    std::vector<const blocks::SemanticBlock*> ok, leaves;
    for (const auto& b : universe) {
      if (!legal.admits(b, g)) continue;
      ok.push_back(&b);
      if (blocks::slots_of(b).empty()) leaves.push_back(&b);
    }
    if (ok.empty()) break;
    const auto& from = (seq.size() >= budget && !leaves.empty()) ? leaves : ok;
    const auto* b = pick(from, rng);
    st.push(*b, g);
    seq.push_back(*b);
  }
  return seq;
}

}  // namespace spedn::testing
