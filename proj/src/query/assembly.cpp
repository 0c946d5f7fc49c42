#include <algorithm>

#include "spedn/common/error.hpp"
#include "spedn/query/query_graph.hpp"

namespace spedn::query {

using blocks::SlotNeed;

AssemblyState::Expect AssemblyState::expect() const {
  if (!has_root()) return Expect::Anything;
  if (!open_.empty()) return Expect::Slot;
  return std::holds_alternative<blocks::EntitySetOut>(graph_.nodes[graph_.root].output) ? Expect::Slot
                                                                                       : Expect::Nothing;
}

SlotNeed AssemblyState::need() const {
  if (!open_.empty()) return open_.back().need;
  const auto& out = graph_.nodes.at(graph_.root).output;
  return {SlotNeed::Kind::Entities, std::get<blocks::EntitySetOut>(out).type};
}

bool AssemblyState::fits(const blocks::SemanticBlock& b, const kg::KnowledgeGraph& kg) const {
  switch (expect()) {
    case Expect::Anything: return true;
    case Expect::Nothing: return false;
    case Expect::Slot:
      return blocks::validate_block(b, kg).empty() && blocks::satisfies(blocks::block_output_type(b, kg), need());
  }
  return false;
}

void AssemblyState::push(const blocks::SemanticBlock& b, const kg::KnowledgeGraph& kg) {
  if (auto v = blocks::validate_block(b, kg); !v.empty()) throw Error(ErrorKind::Schema, v.front().message);
  const auto out = blocks::block_output_type(b, kg);
  const std::size_t id = graph_.nodes.size();
  switch (expect()) {
    case Expect::Anything:
      graph_.root = id;
      break;
    case Expect::Nothing:
      throw Error(ErrorKind::Assembly, "trailing block " + blocks::print_block(b) +
                                           " after a complete graph whose root yields " +
                                           blocks::describe(graph_.nodes[graph_.root].output));
    case Expect::Slot: {
      const SlotNeed n = need();
      if (!blocks::satisfies(out, n)) {
        const bool conj = open_.empty();
        throw Error(ErrorKind::Assembly,
                    std::string(conj ? "conjunction with non-matching type: " : "type mismatch at slot :") +
                        (conj ? "" : n.type + ": ") + blocks::print_block(b) + " yields " + blocks::describe(out));
      }
      if (open_.empty()) {
        graph_.conjuncts.push_back(id);
      } else {
        const auto top = open_.back();
        open_.pop_back();
        auto& parent = graph_.nodes[top.node];
        if (parent.children.size() <= top.slot) parent.children.resize(top.slot + 1);
        parent.children[top.slot] = id;
      }
      break;
    }
  }
  graph_.nodes.push_back({b, out, {}});
  auto slots = blocks::slots_of(b);
  graph_.nodes.back().children.assign(slots.size(), 0);
  for (std::size_t i = slots.size(); i-- > 0;) open_.push_back({id, i, slots[i]});
}

SemanticQueryGraph assemble(const blocks::BlockSequence& seq, const kg::KnowledgeGraph& kg) {
  if (seq.empty()) throw Error(ErrorKind::Assembly, "empty block sequence");
  AssemblyState state;
  for (const auto& b : seq) state.push(b, kg);
  if (!state.complete()) {
    const auto& top = state.open_slots().back();
    throw Error(ErrorKind::Assembly, "incomplete: " + std::to_string(state.open_slots().size()) +
                                         " open slot(s), top is :" + top.need.type + " of " +
                                         blocks::print_block(state.graph().nodes[top.node].block));
  }
  return state.graph();
}

std::string render_graph(const SemanticQueryGraph& g) {
  std::string out;
  auto rec = [&](auto&& self, std::size_t id, int depth, const char* tag) -> void {
    out += std::string(static_cast<std::size_t>(depth) * 2, ' ') + tag + blocks::print_block(g.nodes[id].block) +
           "  -> " + blocks::describe(g.nodes[id].output) + "\n";
    for (auto c : g.nodes[id].children) self(self, c, depth + 1, "");
  };
  if (g.nodes.empty()) return out;
  rec(rec, g.root, 0, "");
  for (auto c : g.conjuncts) rec(rec, c, 1, "& ");
  return out;
}

// ---------------------------------------------------------------------------

bool LegalNext::admits(const blocks::SemanticBlock& b, const kg::KnowledgeGraph& kg) const {
  const auto p = blocks::pattern_of(b);
  bool shape_ok = false;
  for (const auto& s : shapes) {
    if (s.pattern != p) continue;
    if (!s.need) {
      shape_ok = true;
      break;
    }
    if (!blocks::validate_block(b, kg).empty()) return false;
    if (blocks::satisfies(blocks::block_output_type(b, kg), *s.need)) {
      shape_ok = true;
      break;
    }
  }
  return shape_ok && blocks::validate_block(b, kg).empty();
}

LegalNext legal_next(const AssemblyState& state, const kg::KnowledgeGraph& kg) {
  using blocks::Pattern;
  LegalNext out;
  out.may_end = state.complete();
  switch (state.expect()) {
    case AssemblyState::Expect::Nothing:
      break;
    case AssemblyState::Expect::Anything:
      for (auto p : blocks::kAllPatterns) out.shapes.push_back({p, std::nullopt});
      break;
    case AssemblyState::Expect::Slot: {
      const auto need = state.need();
      const auto attrs = kg.attributes_of(need.type);
      if (need.kind == SlotNeed::Kind::Values) {
        if (std::any_of(attrs.begin(), attrs.end(), [](auto* a) { return kg::is_numeric(a->literal_kind()); }))
          out.shapes.push_back({Pattern::Literal, need});
        break;
      }
      out.shapes.push_back({Pattern::Entity, need});
      const bool related = std::any_of(kg.relations().begin(), kg.relations().end(), [&](const auto& r) {
        return r.is_entity_relation() && (r.domain == need.type || r.range_type() == need.type);
      });
      if (related) out.shapes.push_back({Pattern::Relation, need});
      if (std::any_of(attrs.begin(), attrs.end(),
                      [](auto* a) { return a->literal_kind() == kg::LiteralKind::Boolean; }))
        out.shapes.push_back({Pattern::Literal, need});
      out.shapes.push_back({Pattern::Ordinal, need});
      out.shapes.push_back({Pattern::Join, need});
      break;
    }
  }
  return out;
}

std::vector<blocks::SemanticBlock> block_universe(const kg::KnowledgeGraph& kg, const OrdinalLexicon& lexicon,
                                                  const ValuePool& values) {
  using namespace blocks;
  std::vector<SemanticBlock> out;
  auto add = [&](SemanticBlock b) {
    if (validate_block(b, kg).empty() && std::find(out.begin(), out.end(), b) == out.end())
      out.push_back(std::move(b));
  };
  for (const auto& t : kg.types()) {
    add(EntityBlock{t, std::nullopt});
    for (const auto& [key, vals] : values)
      if (key.first == t)
        for (const auto& v : vals) add(EntityBlock{t, Constraint{key.second, v}});
  }
  for (const auto& r : kg.relations()) {
    if (r.is_entity_relation()) {
      add(RelationBlock{r.domain, r.name, r.range_type()});
      add(RelationBlock{r.range_type(), r.name, r.domain});
    } else {
      add(LiteralBlock{r.name, r.domain});
    }
  }
  for (const auto& [key, entry] : lexicon.entries())
    if (kg.has_type(key.second) && kg.attribute_kind(entry.attr, key.second)) add(OrdinalBlock{key.first, key.second});
  for (const auto& t : kg.types()) {
    add(AggrBlock{"count", t});
    add(AggrBlock{"average", t});
  }
  for (const char* op : {"intersection", "union", "exclude"})
    for (const auto& t : kg.types()) add(JoinBlock{op, {t, t}});
  return out;
}

}  // namespace spedn::query
