#include "spedn/kg/knowledge_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::kg {

namespace {

std::string canonical_key(const Literal& v) {
  if (auto n = as_number(v)) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, *n);
    return "n:" + std::string(buf, res.ptr);
  }
  return "t:" + text::fold(std::get<std::string>(v));
}

[[noreturn]] void schema_error(const std::string& msg, std::size_t line) {
  throw ParseError(ErrorKind::Schema, msg, 0, line);
}

std::size_t line_of(const std::vector<std::size_t>* lines, std::size_t i) {
  return lines && i < lines->size() ? (*lines)[i] : 0;
}

}  // namespace

const char* to_string(LiteralKind kind) {
  switch (kind) {
    case LiteralKind::Text: return "text";
    case LiteralKind::Integer: return "integer";
    case LiteralKind::Decimal: return "decimal";
    case LiteralKind::Boolean: return "boolean";
  }
  return "text";
}

std::optional<LiteralKind> literal_kind_from(std::string_view name) {
  if (name == "text") return LiteralKind::Text;
  if (name == "integer") return LiteralKind::Integer;
  if (name == "decimal") return LiteralKind::Decimal;
  if (name == "boolean") return LiteralKind::Boolean;
  return std::nullopt;
}

bool is_numeric(LiteralKind kind) {
  return kind == LiteralKind::Integer || kind == LiteralKind::Decimal;
}

LiteralKind kind_of(const Literal& v) {
  switch (v.index()) {
    case 0: return LiteralKind::Text;
    case 1: return LiteralKind::Integer;
    case 2: return LiteralKind::Decimal;
    default: return LiteralKind::Boolean;
  }
}

std::optional<double> as_number(const Literal& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  return std::nullopt;
}

std::string format_literal(const Literal& v) {
  if (auto* s = std::get_if<std::string>(&v)) return "'" + *s + "'";
  if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto* b = std::get_if<bool>(&v)) return *b ? "1" : "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::optional<Literal> parse_literal(std::string_view raw, LiteralKind kind) {
  switch (kind) {
    case LiteralKind::Text:
      if (raw.size() >= 2 && raw.front() == '\'' && raw.back() == '\'')
        return Literal(text::fold(raw.substr(1, raw.size() - 2)));
      return std::nullopt;
    case LiteralKind::Boolean:
      if (raw == "0") return Literal(false);
      if (raw == "1") return Literal(true);
      return std::nullopt;
    case LiteralKind::Integer: {
      std::int64_t v{};
      auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) return std::nullopt;
      return Literal(v);
    }
    case LiteralKind::Decimal: {
      if (raw.find('.') == std::string_view::npos) return std::nullopt;
      double v{};
      auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) return std::nullopt;
      return Literal(v);
    }
  }
  return std::nullopt;
}

bool literal_matches(const Literal& stored, const Literal& probe) {
  auto a = as_number(stored);
  auto b = as_number(probe);
  if (a && b) return *a == *b;
  if (!a && !b) return text::fold(std::get<std::string>(stored)) == text::fold(std::get<std::string>(probe));
  return false;
}

KnowledgeGraph::KnowledgeGraph(std::set<std::string> types, std::vector<RelationSignature> relations,
                               std::vector<Entity> entities, std::vector<Fact> facts,
                               const RecordLines* lines)
    : types_(std::move(types)),
      relations_(std::move(relations)),
      entities_(std::move(entities)),
      facts_(std::move(facts)) {
  validate_and_index(lines);
}

void KnowledgeGraph::validate_and_index(const RecordLines* lines) {
  // Relation catalogue.
  std::map<std::string, bool> name_is_entity;
  std::set<std::tuple<std::string, std::string, std::string>> seen_sig;
  for (std::size_t i = 0; i < relations_.size(); ++i) {
    const auto& r = relations_[i];
    const auto line = line_of(lines ? &lines->relations : nullptr, i);
    if (r.name == "id") schema_error("relation name 'id' is reserved", line);
    if (!has_type(r.domain)) schema_error("relation " + r.name + ": undeclared type " + r.domain, line);
    if (r.is_entity_relation() && !has_type(r.range_type()))
      schema_error("relation " + r.name + ": undeclared type " + r.range_type(), line);
    auto [it, fresh] = name_is_entity.emplace(r.name, r.is_entity_relation());
    if (!fresh && it->second != r.is_entity_relation())
      schema_error("relation " + r.name + " declared both as entity relation and literal attribute", line);
    std::string range = r.is_entity_relation() ? r.range_type() : std::string("#literal");
    if (!r.is_entity_relation() && !seen_sig.emplace(r.name, r.domain, range).second)
      schema_error("duplicate attribute " + r.name + " on " + r.domain, line);
    if (r.is_entity_relation() && !seen_sig.emplace(r.name, r.domain, range).second)
      schema_error("duplicate relation " + r.name + " " + r.domain + " -> " + range, line);
  }

  entity_pos_.clear();
  by_type_.clear();
  for (const auto& t : types_) by_type_[t];
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    const auto& e = entities_[i];
    const auto line = line_of(lines ? &lines->entities : nullptr, i);
    if (!has_type(e.type)) schema_error("entity " + e.id + ": undeclared type " + e.type, line);
    if (!entity_pos_.emplace(e.id, i).second) schema_error("duplicate entity id " + e.id, line);
    for (const auto& [attr, value] : e.attrs) {
      auto kind = attribute_kind(attr, e.type);
      if (!kind || attr == "id")
        schema_error("entity " + e.id + ": undeclared attribute " + attr + " for type " + e.type, line);
      if (*kind != kind_of(value))
        schema_error("entity " + e.id + ": attribute " + attr + " expects " + to_string(*kind), line);
    }
    by_type_[e.type].insert(e.id);
  }

  forward_.clear();
  inverse_.clear();
  std::set<Fact> seen;
  std::vector<Fact> unique;
  for (std::size_t i = 0; i < facts_.size(); ++i) {
    const auto& f = facts_[i];
    const auto line = line_of(lines ? &lines->facts : nullptr, i);
    if (!is_entity_relation(f.rel)) {
      if (is_literal_relation(f.rel))
        schema_error("fact " + f.rel + ": literal attributes belong on entities", line);
      schema_error("fact uses undeclared relation " + f.rel, line);
    }
    const Entity* s = find_entity(f.subject);
    const Entity* o = find_entity(f.object);
    if (!s) schema_error("fact " + f.rel + ": unknown subject " + f.subject, line);
    if (!o) schema_error("fact " + f.rel + ": unknown object " + f.object, line);
    bool typed = false;
    for (const auto* sig : entity_signatures(f.rel))
      typed = typed || (sig->domain == s->type && sig->range_type() == o->type);
    if (!typed)
      schema_error("fact " + f.rel + "(" + f.subject + ", " + f.object + "): no signature " + s->type +
                       " -> " + o->type,
                   line);
    if (!seen.insert(f).second) continue;
    unique.push_back(f);
    forward_[f.rel][f.object].insert(f.subject);
    inverse_[f.rel][f.subject].insert(f.object);
  }
  facts_ = std::move(unique);

  attr_index_.clear();
  for (const auto& e : entities_) {
    attr_index_["id"][canonical_key(Literal(e.id))].insert(e.id);
    for (const auto& [attr, value] : e.attrs) attr_index_[attr][canonical_key(value)].insert(e.id);
  }
}

const Entity* KnowledgeGraph::find_entity(std::string_view id) const {
  auto it = entity_pos_.find(std::string(id));
  return it == entity_pos_.end() ? nullptr : &entities_[it->second];
}

bool KnowledgeGraph::is_entity_relation(std::string_view name) const {
  return std::any_of(relations_.begin(), relations_.end(),
                     [&](const auto& r) { return r.name == name && r.is_entity_relation(); });
}

bool KnowledgeGraph::is_literal_relation(std::string_view name) const {
  if (name == "id") return true;
  return std::any_of(relations_.begin(), relations_.end(),
                     [&](const auto& r) { return r.name == name && !r.is_entity_relation(); });
}

std::vector<const RelationSignature*> KnowledgeGraph::entity_signatures(std::string_view name) const {
  std::vector<const RelationSignature*> out;
  for (const auto& r : relations_)
    if (r.name == name && r.is_entity_relation()) out.push_back(&r);
  return out;
}

std::optional<LiteralKind> KnowledgeGraph::attribute_kind(std::string_view name,
                                                          std::string_view domain) const {
  if (name == "id") return has_type(domain) ? std::optional(LiteralKind::Text) : std::nullopt;
  for (const auto& r : relations_)
    if (r.name == name && r.domain == domain && !r.is_entity_relation()) return r.literal_kind();
  return std::nullopt;
}

std::vector<const RelationSignature*> KnowledgeGraph::attributes_of(std::string_view type) const {
  std::vector<const RelationSignature*> out;
  for (const auto& r : relations_)
    if (r.domain == type && !r.is_entity_relation()) out.push_back(&r);
  return out;
}

const EntitySet& KnowledgeGraph::entities_of_type(std::string_view t) const {
  auto it = by_type_.find(std::string(t));
  if (it == by_type_.end()) throw Error(ErrorKind::UnknownType, "unknown type " + std::string(t));
  return it->second;
}

EntitySet KnowledgeGraph::neighbors(std::string_view rel, const EntitySet& objects, Direction dir) const {
  if (!is_entity_relation(rel)) {
    if (is_literal_relation(rel))
      throw Error(ErrorKind::WrongRelationKind, std::string(rel) + " is a literal-valued relation");
    throw Error(ErrorKind::UnknownRelation, "unknown relation " + std::string(rel));
  }
  const auto& index = dir == Direction::Forward ? forward_ : inverse_;
  EntitySet out;
  auto rit = index.find(rel);
  if (rit == index.end()) return out;
  for (const auto& key : objects) {
    auto it = rit->second.find(key);
    if (it != rit->second.end()) out.insert(it->second.begin(), it->second.end());
  }
  return out;
}

std::vector<Literal> KnowledgeGraph::attr_values(std::string_view attr, const EntitySet& entities) const {
  if (!is_literal_relation(attr)) {
    if (is_entity_relation(attr))
      throw Error(ErrorKind::WrongRelationKind, std::string(attr) + " is an entity-valued relation");
    throw Error(ErrorKind::UnknownRelation, "unknown attribute " + std::string(attr));
  }
  std::vector<Literal> out;
  for (const auto& id : entities) {
    const Entity* e = find_entity(id);
    if (!e) continue;
    if (attr == "id") {
      out.emplace_back(e->id);
      continue;
    }
    auto it = e->attrs.find(std::string(attr));
    if (it != e->attrs.end()) out.push_back(it->second);
  }
  return out;
}

EntitySet KnowledgeGraph::lookup_attr(std::string_view type, std::string_view attr,
                                      const Literal& value) const {
  EntitySet out;
  auto ait = attr_index_.find(attr);
  if (ait == attr_index_.end()) return out;
  Literal probe = value;
  if (auto* s = std::get_if<std::string>(&probe)) *s = text::fold(*s);
  auto vit = ait->second.find(canonical_key(probe));
  if (vit == ait->second.end()) return out;
  const auto& of_type = entities_of_type(type);
  for (const auto& id : vit->second)
    if (of_type.count(id)) out.insert(id);
  return out;
}

bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  auto sorted_rel = [](const KnowledgeGraph& g) {
    std::vector<std::string> v;
    for (const auto& r : g.relations_)
      v.push_back(r.name + "\t" + r.domain + "\t" +
                  (r.is_entity_relation() ? r.range_type() : std::string("#") + to_string(r.literal_kind())));
    std::sort(v.begin(), v.end());
    return v;
  };
  auto sorted_ent = [](const KnowledgeGraph& g) {
    std::vector<std::string> v;
    for (const auto& e : g.entities_) {
      std::string s = e.id + "\t" + e.type;
      for (const auto& [k, val] : e.attrs) s += "\t" + k + "=" + format_literal(val);
      v.push_back(std::move(s));
    }
    std::sort(v.begin(), v.end());
    return v;
  };
  auto sorted_facts = [](const KnowledgeGraph& g) {
    auto v = g.facts_;
    std::sort(v.begin(), v.end());
    return v;
  };
  return a.types_ == b.types_ && sorted_rel(a) == sorted_rel(b) && sorted_ent(a) == sorted_ent(b) &&
         sorted_facts(a) == sorted_facts(b);
}

KnowledgeGraph parse_kg(std::string_view content) {
  std::set<std::string> types;
  std::vector<RelationSignature> relations;
  std::vector<Entity> entities;
  std::vector<Fact> facts;
  KnowledgeGraph::RecordLines lines;
  // Entity attrs are parsed after all declarations so records may come in any order.
  struct PendingEntity {
    std::vector<std::string> fields;
    std::size_t line;
  };
  std::vector<PendingEntity> pending;

  std::size_t line_no = 0;
  for (const auto& raw_line : text::split(content, '\n')) {
    ++line_no;
    std::string_view line = raw_line;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty() || text::trim(line)[0] == '#') continue;
    auto fields = text::split(line, '\t');
    for (auto& f : fields) f = text::trim(f);
    const std::string& tag = fields[0];
    auto need = [&](std::size_t n) {
      if (fields.size() != n)
        throw ParseError(ErrorKind::Parse,
                         tag + " record expects " + std::to_string(n - 1) + " tab-separated fields", 0,
                         line_no);
    };
    if (tag == "type") {
      need(2);
      types.insert(text::fold(fields[1]));
    } else if (tag == "rel" || tag == "attr") {
      need(5);
      if (fields[3] != "->") throw ParseError(ErrorKind::Parse, "expected '->'", 0, line_no);
      RelationSignature sig{text::fold(fields[1]), text::fold(fields[2]), std::string()};
      if (tag == "rel") {
        sig.range = text::fold(fields[4]);
      } else {
        auto kind = literal_kind_from(text::fold(fields[4]));
        if (!kind) throw ParseError(ErrorKind::Parse, "unknown literal kind " + fields[4], 0, line_no);
        sig.range = *kind;
      }
      relations.push_back(std::move(sig));
      lines.relations.push_back(line_no);
    } else if (tag == "ent") {
      if (fields.size() < 3) throw ParseError(ErrorKind::Parse, "ent record expects id and type", 0, line_no);
      pending.push_back({std::move(fields), line_no});
    } else if (tag == "fact") {
      need(4);
      facts.push_back({text::fold(fields[1]), text::fold(fields[2]), text::fold(fields[3])});
      lines.facts.push_back(line_no);
    } else {
      throw ParseError(ErrorKind::Parse, "unknown record tag '" + tag + "'", 0, line_no);
    }
  }

  for (const auto& p : pending) {
    Entity e{text::fold(p.fields[1]), text::fold(p.fields[2]), {}};
    for (std::size_t i = 3; i < p.fields.size(); ++i) {
      const auto& f = p.fields[i];
      auto eq = f.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ParseError(ErrorKind::Parse, "expected attr=value, got '" + f + "'", 0, p.line);
      std::string attr = text::fold(f.substr(0, eq));
      std::optional<LiteralKind> kind;
      for (const auto& r : relations)
        if (r.name == attr && r.domain == e.type && !r.is_entity_relation()) kind = r.literal_kind();
      if (!kind)
        throw ParseError(ErrorKind::Schema, "entity " + e.id + ": undeclared attribute " + attr, 0, p.line);
      auto value = parse_literal(f.substr(eq + 1), *kind);
      if (!value)
        throw ParseError(ErrorKind::Schema,
                         "entity " + e.id + ": value of " + attr + " is not " + to_string(*kind), 0, p.line);
      if (!e.attrs.emplace(attr, *value).second)
        throw ParseError(ErrorKind::Schema, "entity " + e.id + ": duplicate attribute " + attr, 0, p.line);
    }
    entities.push_back(std::move(e));
    lines.entities.push_back(p.line);
  }
  return KnowledgeGraph(std::move(types), std::move(relations), std::move(entities), std::move(facts), &lines);
}

KnowledgeGraph load_kg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kg(ss.str());
}

std::string serialize_kg(const KnowledgeGraph& kg) {
  std::string out;
  for (const auto& t : kg.types()) out += "type\t" + t + "\n";
  for (const auto& r : kg.relations()) {
    if (r.is_entity_relation())
      out += "rel\t" + r.name + "\t" + r.domain + "\t->\t" + r.range_type() + "\n";
    else
      out += "attr\t" + r.name + "\t" + r.domain + "\t->\t" + to_string(r.literal_kind()) + "\n";
  }
  for (const auto& e : kg.entities()) {
    out += "ent\t" + e.id + "\t" + e.type;
    for (const auto& [k, v] : e.attrs) out += "\t" + k + "=" + format_literal(v);
    out += "\n";
  }
  for (const auto& f : kg.facts()) out += "fact\t" + f.rel + "\t" + f.subject + "\t" + f.object + "\n";
  return out;
}

}  // namespace spedn::kg
