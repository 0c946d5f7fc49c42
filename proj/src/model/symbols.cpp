#include "spedn/model/symbols.hpp"

#include <algorithm>
#include <cctype>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::model {

using namespace spedn::blocks;

const char* mode_name(OutputMode m) { return m == OutputMode::Atomic ? "atomic" : "decomposed"; }

std::vector<prep::EntityMention> pointer_targets(const prep::QuestionContext& ctx) {
  std::vector<prep::EntityMention> out;
  for (const auto& m : ctx.entities) {
    if (out.size() == kPointers) break;
    bool seen = std::any_of(out.begin(), out.end(), [&](const auto& o) { return o.entity == m.entity; });
    if (!seen) out.push_back(m);
  }
  return out;
}

BlockTemplate to_template(const SemanticBlock& b, const prep::QuestionContext& ctx) {
  if (const auto* e = std::get_if<EntityBlock>(&b); e && e->constraint && e->constraint->attr == "id") {
    auto targets = pointer_targets(ctx);
    for (std::size_t k = 0; k < targets.size(); ++k)
      if (targets[k].entity == e->constraint->value.lexeme && targets[k].type == e->type) {
        EntityBlock t{e->type, Constraint{"id", BlockValue::text("")}};
        return {t, k};
      }
  }
  return {b, std::nullopt};
}

std::optional<SemanticBlock> instantiate(const BlockTemplate& t, const std::vector<prep::EntityMention>& targets) {
  if (!t.pointer) return t.block;
  const auto& e = std::get<EntityBlock>(t.block);
  if (*t.pointer >= targets.size() || targets[*t.pointer].type != e.type) return std::nullopt;
  return EntityBlock{e.type, Constraint{"id", BlockValue::text(targets[*t.pointer].entity)}};
}

namespace {

std::string pointer_symbol(std::size_t k) { return "PTR" + std::to_string(k); }

std::optional<std::size_t> pointer_index(const std::string& s) {
  if (s.size() != 4 || !text::starts_with(s, "PTR") || !std::isdigit(static_cast<unsigned char>(s[3])))
    return std::nullopt;
  std::size_t k = static_cast<std::size_t>(s[3] - '0');
  if (k >= kPointers) return std::nullopt;
  return k;
}

std::string value_symbol(const BlockValue& v) {
  return v.form == BlockValue::Form::Text ? "V:'" + v.lexeme + "'" : "V:" + v.lexeme;
}

std::optional<BlockValue> parse_value_symbol(const std::string& s) {
  if (!text::starts_with(s, "V:") || s.size() < 3) return std::nullopt;
  std::string body = s.substr(2);
  if (body.front() == '\'') {
    if (body.size() < 2 || body.back() != '\'') return std::nullopt;
    return BlockValue::text(body.substr(1, body.size() - 2));
  }
  return BlockValue::number(body);
}

// Strips `prefix` from s; empty optional when it does not match.
std::optional<std::string> arg(const std::string& s, std::string_view prefix) {
  if (!text::starts_with(s, prefix) || s.size() == prefix.size()) return std::nullopt;
  return s.substr(prefix.size());
}

}  // namespace

std::vector<std::string> components(const BlockTemplate& t) {
  const auto& b = t.block;
  std::vector<std::string> c{std::string("P:") + pattern_name(pattern_of(b))};
  std::visit(
      [&](const auto& x) {
        using X = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<X, EntityBlock>) {
          c.push_back("T:" + x.type);
          if (x.constraint) {
            c.push_back("A:" + x.constraint->attr);
            c.push_back(t.pointer ? pointer_symbol(*t.pointer) : value_symbol(x.constraint->value));
          }
        } else if constexpr (std::is_same_v<X, RelationBlock>) {
          c.insert(c.end(), {"T:" + x.out_type, "R:" + x.rel, "T:" + x.in_type});
        } else if constexpr (std::is_same_v<X, LiteralBlock>) {
          c.insert(c.end(), {"A:" + x.attr, "T:" + x.type});
        } else if constexpr (std::is_same_v<X, OrdinalBlock>) {
          c.insert(c.end(), {"O:" + x.op, "T:" + x.type});
        } else if constexpr (std::is_same_v<X, AggrBlock>) {
          c.insert(c.end(), {"G:" + x.op, "T:" + x.type});
        } else {
          c.push_back("J:" + x.op);
          for (const auto& ty : x.types) c.push_back("T:" + ty);
        }
      },
      b);
  return c;
}

std::optional<BlockTemplate> from_components(const std::vector<std::string>& c) {
  if (c.empty()) return std::nullopt;
  auto p = arg(c[0], "P:");
  if (!p) return std::nullopt;
  auto pattern = pattern_from(*p);
  if (!pattern) return std::nullopt;
  auto at = [&](std::size_t i, std::string_view prefix) -> std::optional<std::string> {
    return i < c.size() ? arg(c[i], prefix) : std::nullopt;
  };
  switch (*pattern) {
    case Pattern::Entity: {
      auto t = at(1, "T:");
      if (!t) return std::nullopt;
      if (c.size() == 2) return BlockTemplate{EntityBlock{*t, std::nullopt}, std::nullopt};
      auto a = at(2, "A:");
      if (!a || c.size() != 4) return std::nullopt;
      if (auto k = pointer_index(c[3])) {
        if (*a != "id") return std::nullopt;
        return BlockTemplate{EntityBlock{*t, Constraint{*a, BlockValue::text("")}}, k};
      }
      auto v = parse_value_symbol(c[3]);
      if (!v) return std::nullopt;
      return BlockTemplate{EntityBlock{*t, Constraint{*a, *v}}, std::nullopt};
    }
    case Pattern::Relation: {
      auto o = at(1, "T:"), r = at(2, "R:"), i = at(3, "T:");
      if (!o || !r || !i || c.size() != 4) return std::nullopt;
      return BlockTemplate{RelationBlock{*o, *r, *i}, std::nullopt};
    }
    case Pattern::Literal: {
      auto a = at(1, "A:"), t = at(2, "T:");
      if (!a || !t || c.size() != 3) return std::nullopt;
      return BlockTemplate{LiteralBlock{*a, *t}, std::nullopt};
    }
    case Pattern::Ordinal: {
      auto o = at(1, "O:"), t = at(2, "T:");
      if (!o || !t || c.size() != 3) return std::nullopt;
      return BlockTemplate{OrdinalBlock{*o, *t}, std::nullopt};
    }
    case Pattern::Aggr: {
      auto g = at(1, "G:"), t = at(2, "T:");
      if (!g || !t || c.size() != 3) return std::nullopt;
      return BlockTemplate{AggrBlock{*g, *t}, std::nullopt};
    }
    case Pattern::Join: {
      auto j = at(1, "J:");
      if (!j || c.size() < 3) return std::nullopt;
      JoinBlock b{*j, {}};
      for (std::size_t i = 2; i < c.size(); ++i) {
        auto t = at(i, "T:");
        if (!t) return std::nullopt;
        b.types.push_back(*t);
      }
      return BlockTemplate{b, std::nullopt};
    }
  }
  return std::nullopt;
}

std::string atomic_symbol(const BlockTemplate& t) {
  if (!t.pointer) return print_block(t.block);
  const auto& e = std::get<EntityBlock>(t.block);
  return "entity(" + e.type + ", id, " + pointer_symbol(*t.pointer) + ")";
}

std::optional<BlockTemplate> from_atomic_symbol(const std::string& s) {
  const std::string head = "entity(", mid = ", id, ";
  auto pos = s.rfind(mid);
  if (text::starts_with(s, head) && pos != std::string::npos && pos > head.size() && s.back() == ')') {
    if (auto k = pointer_index(s.substr(pos + mid.size(), s.size() - pos - mid.size() - 1)))
      return BlockTemplate{EntityBlock{s.substr(head.size(), pos - head.size()), Constraint{"id", BlockValue::text("")}},
                           k};
  }
  try {
    return BlockTemplate{parse_block(s), std::nullopt};
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<std::string> target_symbols(const BlockSequence& gold, const prep::QuestionContext& ctx,
                                        OutputMode mode) {
  std::vector<std::string> out;
  for (const auto& b : gold) {
    auto t = to_template(b, ctx);
    if (mode == OutputMode::Atomic) {
      out.push_back(atomic_symbol(t));
    } else {
      for (auto& c : components(t)) out.push_back(std::move(c));
      out.push_back(kEob);
    }
  }
  out.push_back(kEos);
  return out;
}

// ---------------------------------------------------------------------------

OutputVocabulary::OutputVocabulary(OutputMode mode, std::vector<BlockTemplate> templates)
    : mode_(mode), vocab_({kBos, kEos, kEob}), templates_(std::move(templates)) {
  for (const auto& t : templates_) {
    std::vector<std::size_t> ids;
    if (mode_ == OutputMode::Atomic) {
      ids.push_back(vocab_.add(atomic_symbol(t)));
    } else {
      for (const auto& c : components(t)) ids.push_back(vocab_.add(c));
      ids.push_back(eob());
    }
    template_ids_.push_back(std::move(ids));
  }
}

OutputVocabulary OutputVocabulary::build(OutputMode mode, const kg::KnowledgeGraph& kg,
                                         const query::OrdinalLexicon& lexicon,
                                         const std::vector<GoldExample>& corpus) {
  std::vector<BlockTemplate> gold;
  query::ValuePool pool;
  for (const auto& ex : corpus)
    for (const auto& b : *ex.gold) {
      auto t = to_template(b, *ex.ctx);
      if (const auto* e = std::get_if<EntityBlock>(&t.block); e && e->constraint && !t.pointer) {
        auto& vals = pool[{e->type, e->constraint->attr}];
        if (std::find(vals.begin(), vals.end(), e->constraint->value) == vals.end())
          vals.push_back(e->constraint->value);
      }
      gold.push_back(std::move(t));
    }

  std::vector<BlockTemplate> all;
  auto add = [&](BlockTemplate t) {
    if (std::find(all.begin(), all.end(), t) == all.end()) all.push_back(std::move(t));
  };
  for (auto& b : query::block_universe(kg, lexicon, pool)) add({std::move(b), std::nullopt});
  for (const auto& t : kg.types())
    if (!kg.entities_of_type(t).empty())
      for (std::size_t k = 0; k < kPointers; ++k) add({EntityBlock{t, Constraint{"id", BlockValue::text("")}}, k});
  for (auto& t : gold) add(std::move(t));
  return OutputVocabulary(mode, std::move(all));
}

std::vector<std::size_t> OutputVocabulary::encode(const BlockSequence& gold, const prep::QuestionContext& ctx) const {
  std::vector<std::size_t> ids;
  for (const auto& s : target_symbols(gold, ctx, mode_)) {
    if (!vocab_.contains(s)) throw Error(ErrorKind::Model, "symbol " + s + " is not in the output vocabulary");
    ids.push_back(vocab_.id(s));
  }
  return ids;
}

}  // namespace spedn::model
