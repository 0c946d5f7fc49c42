#include "spedn/blocks/block.hpp"

namespace spedn::blocks {

namespace {

bool value_fits(kg::LiteralKind kind, const BlockValue& v) {
  switch (kind) {
    case kg::LiteralKind::Text: return v.form == BlockValue::Form::Text;
    case kg::LiteralKind::Integer:
      return v.form == BlockValue::Form::Number && v.lexeme.find('.') == std::string::npos;
    case kg::LiteralKind::Decimal: return v.form == BlockValue::Form::Number;
    case kg::LiteralKind::Boolean:
      return v.form == BlockValue::Form::Number && (v.lexeme == "0" || v.lexeme == "1");
  }
  return false;
}

}  // namespace

std::vector<Violation> validate_block(const SemanticBlock& b, const kg::KnowledgeGraph& kg, std::size_t index) {
  std::vector<Violation> out;
  const std::string where = print_block(b) + ": ";
  auto bad = [&](std::string msg) { out.push_back({index, where + std::move(msg)}); };
  auto need_type = [&](const std::string& t) {
    if (!kg.has_type(t)) {
      bad(t + " is not a type (not in T)");
      return false;
    }
    return true;
  };

  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EntityBlock>) {
          if (!need_type(v.type) || !v.constraint) return;
          auto kind = kg.attribute_kind(v.constraint->attr, v.type);
          if (!kind) {
            if (kg.is_entity_relation(v.constraint->attr))
              bad(v.constraint->attr + " is not a literal relation (not in R^l)");
            else
              bad(v.constraint->attr + " is not an attribute of " + v.type);
            return;
          }
          if (!value_fits(*kind, v.constraint->value))
            bad("value does not match " + std::string(kg::to_string(*kind)) + " attribute " + v.constraint->attr);
        } else if constexpr (std::is_same_v<T, RelationBlock>) {
          bool types_ok = need_type(v.out_type);
          types_ok = need_type(v.in_type) && types_ok;
          if (!kg.is_entity_relation(v.rel)) {
            bad(v.rel + " is not an entity relation (not in R^e)");
            return;
          }
          if (!types_ok) return;
          bool matched = false;
          for (const auto* sig : kg.entity_signatures(v.rel)) {
            matched = matched || (sig->domain == v.out_type && sig->range_type() == v.in_type) ||
                      (sig->domain == v.in_type && sig->range_type() == v.out_type);
          }
          if (!matched) bad(v.rel + " does not connect " + v.out_type + " and " + v.in_type);
        } else if constexpr (std::is_same_v<T, LiteralBlock>) {
          if (!need_type(v.type)) return;
          if (!kg.attribute_kind(v.attr, v.type)) {
            if (kg.is_entity_relation(v.attr))
              bad(v.attr + " is not a literal relation (not in R^l)");
            else
              bad(v.attr + " is not an attribute of " + v.type);
          }
        } else if constexpr (std::is_same_v<T, OrdinalBlock>) {
          need_type(v.type);
        } else if constexpr (std::is_same_v<T, AggrBlock>) {
          if (!need_type(v.type)) return;
          if (v.op == "average") {
            bool numeric = false;
            for (const auto* a : kg.attributes_of(v.type)) numeric = numeric || kg::is_numeric(a->literal_kind());
            if (!numeric) bad(v.type + " has no numeric attribute to average");
          }
        } else {
          if (v.types.size() < 2) bad("join needs at least two slots");
          for (const auto& t : v.types) {
            if (t != v.types.front()) {
              bad("join slots must share one type");
              break;
            }
          }
          if (!v.types.empty()) need_type(v.types.front());
        }
      },
      b);
  return out;
}

std::vector<Violation> validate_blocks(const BlockSequence& seq, const kg::KnowledgeGraph& kg) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto v = validate_block(seq[i], kg, i);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace spedn::blocks
