#include <algorithm>
#include <cmath>
#include <sstream>

#include "spedn/common/error.hpp"
#include "spedn/query/query_graph.hpp"

namespace spedn::query {

namespace {

using kg::EntitySet;

const EntitySet& as_entities(const AnswerSet& a, const blocks::SemanticBlock& parent) {
  if (auto* s = std::get_if<EntitySet>(&a)) return *s;
  throw Error(ErrorKind::Execution, blocks::print_block(parent) + " expects an entity set");
}

class Evaluator {
 public:
  Evaluator(const SemanticQueryGraph& g, const kg::KnowledgeGraph& kg, const OrdinalLexicon& lex)
      : g_(g), kg_(kg), lex_(lex) {}

  AnswerSet eval(std::size_t id) const {
    const auto& node = g_.nodes.at(id);
    std::vector<AnswerSet> kids;
    kids.reserve(node.children.size());
    for (auto c : node.children) kids.push_back(eval(c));
    return std::visit([&](const auto& b) { return apply(b, node.block, kids); }, node.block);
  }

 private:
  AnswerSet apply(const blocks::EntityBlock& b, const blocks::SemanticBlock&, const std::vector<AnswerSet>&) const {
    if (!b.constraint) return kg_.entities_of_type(b.type);
    return kg_.lookup_attr(b.type, b.constraint->attr, b.constraint->value.to_literal());
  }

  AnswerSet apply(const blocks::RelationBlock& b, const blocks::SemanticBlock& self,
                  const std::vector<AnswerSet>& kids) const {
    const auto& in = as_entities(kids.at(0), self);
    bool forward = false;
    for (const auto* sig : kg_.entity_signatures(b.rel))
      forward = forward || (sig->domain == b.out_type && sig->range_type() == b.in_type);
    auto found = kg_.neighbors(b.rel, in, forward ? kg::Direction::Forward : kg::Direction::Inverse);
    const auto& typed = kg_.entities_of_type(b.out_type);
    EntitySet out;
    std::set_intersection(found.begin(), found.end(), typed.begin(), typed.end(), std::inserter(out, out.end()));
    return out;
  }

  AnswerSet apply(const blocks::LiteralBlock& b, const blocks::SemanticBlock& self,
                  const std::vector<AnswerSet>& kids) const {
    const auto& in = as_entities(kids.at(0), self);
    auto kind = kg_.attribute_kind(b.attr, b.type);
    if (kind == kg::LiteralKind::Boolean) {
      EntitySet out;
      for (const auto& id : in) {
        auto vals = kg_.attr_values(b.attr, {id});
        if (!vals.empty() && std::get<bool>(vals.front())) out.insert(id);
      }
      return out;
    }
    auto values = kg_.attr_values(b.attr, in);
    canonicalize(values);
    return values;
  }

  AnswerSet apply(const blocks::OrdinalBlock& b, const blocks::SemanticBlock& self,
                  const std::vector<AnswerSet>& kids) const {
    const auto* entry = lex_.find(b.op, b.type);
    if (!entry) throw Error(ErrorKind::Execution, "no ordinal lexicon entry for (" + b.op + ", " + b.type + ")");
    const auto& in = as_entities(kids.at(0), self);
    const std::string* best = nullptr;
    double best_key = 0;
    // `in` is ordered by id, so keeping the first strict improvement breaks ties by id.
    for (const auto& id : in) {
      auto vals = kg_.attr_values(entry->attr, {id});
      if (vals.empty()) continue;
      auto key = kg::as_number(vals.front());
      if (!key) continue;
      if (!best || (entry->maximize ? *key > best_key : *key < best_key)) {
        best = &id;
        best_key = *key;
      }
    }
    EntitySet out;
    if (best) out.insert(*best);
    return out;
  }

  AnswerSet apply(const blocks::AggrBlock& b, const blocks::SemanticBlock& self,
                  const std::vector<AnswerSet>& kids) const {
    if (b.op == "count") return static_cast<double>(as_entities(kids.at(0), self).size());
    const auto* values = std::get_if<ValueList>(&kids.at(0));
    if (!values) throw Error(ErrorKind::Execution, "average needs a literal projection child, got an entity set");
    if (values->empty()) throw Error(ErrorKind::Execution, "average over an empty value set");
    double sum = 0;
    for (const auto& v : *values) {
      auto n = kg::as_number(v);
      if (!n) throw Error(ErrorKind::Execution, "average over non-numeric values");
      sum += *n;
    }
    return sum / static_cast<double>(values->size());
  }

  AnswerSet apply(const blocks::JoinBlock& b, const blocks::SemanticBlock& self,
                  const std::vector<AnswerSet>& kids) const {
    EntitySet acc = as_entities(kids.at(0), self);
    for (std::size_t i = 1; i < kids.size(); ++i) {
      const auto& rhs = as_entities(kids[i], self);
      EntitySet next;
      if (b.op == "intersection")
        std::set_intersection(acc.begin(), acc.end(), rhs.begin(), rhs.end(), std::inserter(next, next.end()));
      else if (b.op == "union")
        std::set_union(acc.begin(), acc.end(), rhs.begin(), rhs.end(), std::inserter(next, next.end()));
      else
        std::set_difference(acc.begin(), acc.end(), rhs.begin(), rhs.end(), std::inserter(next, next.end()));
      acc = std::move(next);
    }
    return acc;
  }

  const SemanticQueryGraph& g_;
  const kg::KnowledgeGraph& kg_;
  const OrdinalLexicon& lex_;
};

int value_rank(const kg::Literal& v) { return kg::as_number(v) ? 0 : 1; }

}  // namespace

AnswerSet execute(const SemanticQueryGraph& g, const kg::KnowledgeGraph& kg, const OrdinalLexicon& lexicon) {
  if (g.nodes.empty()) throw Error(ErrorKind::Execution, "empty query graph");
  Evaluator ev(g, kg, lexicon);
  AnswerSet result = ev.eval(g.root);
  if (g.conjuncts.empty()) return result;
  auto& root_set = std::get<EntitySet>(result);
  for (auto c : g.conjuncts) {
    auto part = ev.eval(c);
    const auto& s = std::get<EntitySet>(part);
    EntitySet next;
    std::set_intersection(root_set.begin(), root_set.end(), s.begin(), s.end(), std::inserter(next, next.end()));
    root_set = std::move(next);
  }
  return result;
}

void canonicalize(ValueList& values) {
  std::stable_sort(values.begin(), values.end(), [](const kg::Literal& a, const kg::Literal& b) {
    if (value_rank(a) != value_rank(b)) return value_rank(a) < value_rank(b);
    if (value_rank(a) == 0) return *kg::as_number(a) < *kg::as_number(b);
    return std::get<std::string>(a) < std::get<std::string>(b);
  });
}

bool answers_equal(const AnswerSet& a, const AnswerSet& b, double tol) {
  if (a.index() != b.index()) return false;
  if (auto* s = std::get_if<kg::EntitySet>(&a)) return *s == std::get<kg::EntitySet>(b);
  if (auto* x = std::get_if<double>(&a)) return std::abs(*x - std::get<double>(b)) <= tol;
  auto va = std::get<ValueList>(a);
  auto vb = std::get<ValueList>(b);
  if (va.size() != vb.size()) return false;
  canonicalize(va);
  canonicalize(vb);
  for (std::size_t i = 0; i < va.size(); ++i) {
    auto na = kg::as_number(va[i]);
    auto nb = kg::as_number(vb[i]);
    if (na && nb) {
      if (std::abs(*na - *nb) > tol) return false;
    } else if (na || nb || !kg::literal_matches(va[i], vb[i])) {
      return false;
    }
  }
  return true;
}

std::string format_answer(const AnswerSet& a) {
  std::ostringstream os;
  if (auto* s = std::get_if<kg::EntitySet>(&a)) {
    os << "{";
    bool first = true;
    for (const auto& id : *s) {
      os << (first ? "" : ", ") << id;
      first = false;
    }
    os << "}";
  } else if (auto* v = std::get_if<ValueList>(&a)) {
    os << "[";
    for (std::size_t i = 0; i < v->size(); ++i) os << (i ? ", " : "") << kg::format_literal((*v)[i]);
    os << "]";
  } else {
    double x = std::get<double>(a);
    if (x == std::floor(x) && std::abs(x) < 1e15)
      os << static_cast<long long>(x);
    else
      os << x;
  }
  return os.str();
}

}  // namespace spedn::query
