#include "spedn/blocks/block.hpp"

#include <charconv>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::blocks {

const char* pattern_name(Pattern p) {
  switch (p) {
    case Pattern::Entity: return "entity";
    case Pattern::Relation: return "relation";
    case Pattern::Literal: return "literal";
    case Pattern::Ordinal: return "ordinal";
    case Pattern::Aggr: return "aggr";
    case Pattern::Join: return "join";
  }
  return "entity";
}

std::optional<Pattern> pattern_from(std::string_view name) {
  for (auto p : kAllPatterns)
    if (name == pattern_name(p)) return p;
  return std::nullopt;
}

kg::Literal BlockValue::to_literal() const {
  if (form == Form::Text) return kg::Literal(text::fold(lexeme));
  if (lexeme.find('.') != std::string::npos) {
    double d{};
    std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), d);
    return kg::Literal(d);
  }
  std::int64_t i{};
  std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), i);
  return kg::Literal(i);
}

Pattern pattern_of(const SemanticBlock& b) { return static_cast<Pattern>(b.index()); }

std::string describe(const OutputType& t) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EntitySetOut>) return "entity-set(" + v.type + ")";
        else if constexpr (std::is_same_v<T, ValuesOut>)
          return std::string("value-multiset(") + kg::to_string(v.kind) + " of " + v.source_type + ")";
        else return "scalar-number";
      },
      t);
}

std::vector<SlotNeed> slots_of(const SemanticBlock& b) {
  using K = SlotNeed::Kind;
  return std::visit(
      [](const auto& v) -> std::vector<SlotNeed> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EntityBlock>) return {};
        else if constexpr (std::is_same_v<T, RelationBlock>) return {{K::Entities, v.in_type}};
        else if constexpr (std::is_same_v<T, AggrBlock>)
          return {{v.op == "average" ? K::Values : K::Entities, v.type}};
        else if constexpr (std::is_same_v<T, JoinBlock>) {
          std::vector<SlotNeed> out;
          for (const auto& t : v.types) out.push_back({K::Entities, t});
          return out;
        } else return {{K::Entities, v.type}};
      },
      b);
}

bool satisfies(const OutputType& out, const SlotNeed& need) {
  if (need.kind == SlotNeed::Kind::Entities) {
    auto* e = std::get_if<EntitySetOut>(&out);
    return e && e->type == need.type;
  }
  auto* v = std::get_if<ValuesOut>(&out);
  return v && v->source_type == need.type && kg::is_numeric(v->kind);
}

OutputType block_output_type(const SemanticBlock& b, const kg::KnowledgeGraph& kg) {
  return std::visit(
      [&](const auto& v) -> OutputType {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EntityBlock>) return EntitySetOut{v.type};
        else if constexpr (std::is_same_v<T, RelationBlock>) return EntitySetOut{v.out_type};
        else if constexpr (std::is_same_v<T, LiteralBlock>) {
          auto kind = kg.attribute_kind(v.attr, v.type);
          if (!kind) throw Error(ErrorKind::Schema, v.attr + " is not an attribute of " + v.type);
          if (*kind == kg::LiteralKind::Boolean) return EntitySetOut{v.type};
          return ValuesOut{*kind, v.type};
        } else if constexpr (std::is_same_v<T, OrdinalBlock>) return EntitySetOut{v.type};
        else if constexpr (std::is_same_v<T, AggrBlock>) return ScalarOut{};
        else return EntitySetOut{v.types.empty() ? std::string() : v.types.front()};
      },
      b);
}

}  // namespace spedn::blocks
