#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace spedn::kg {

enum class LiteralKind { Text, Integer, Decimal, Boolean };

const char* to_string(LiteralKind kind);
std::optional<LiteralKind> literal_kind_from(std::string_view name);
bool is_numeric(LiteralKind kind);

/// A typed literal attribute value.
using Literal = std::variant<std::string, std::int64_t, double, bool>;

LiteralKind kind_of(const Literal& v);
/// Numeric reading of integer/decimal/boolean literals; nullopt for text.
std::optional<double> as_number(const Literal& v);
/// Canonical file spelling: 'text', 42, 3.5, 0|1.
std::string format_literal(const Literal& v);
/// Parses a file-format value for a declared kind; nullopt on kind mismatch.
std::optional<Literal> parse_literal(std::string_view raw, LiteralKind kind);

using EntitySet = std::set<std::string>;

struct RelationSignature {
  std::string name;
  std::string domain;
  /// Entity range (type name) for R^e, literal kind for R^l.
  std::variant<std::string, LiteralKind> range;

  bool is_entity_relation() const { return std::holds_alternative<std::string>(range); }
  const std::string& range_type() const { return std::get<std::string>(range); }
  LiteralKind literal_kind() const { return std::get<LiteralKind>(range); }

  friend bool operator==(const RelationSignature&, const RelationSignature&) = default;
};

struct Entity {
  std::string id;
  std::string type;
  std::map<std::string, Literal> attrs;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Fact {
  std::string rel;
  std::string subject;
  std::string object;

  friend auto operator<=>(const Fact&, const Fact&) = default;
};

enum class Direction { Forward, Inverse };

/// Typed knowledge graph G = (T, R, E, I). Immutable after construction.
///
/// Relation names may be overloaded by signature (`loc` is city->state and
/// state->country), but one name is never both an entity relation and a
/// literal attribute. `id` is an implicit text attribute of every type.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// File line of each record, parallel to relations/entities/facts.
  struct RecordLines {
    std::vector<std::size_t> relations, entities, facts;
  };

  /// Validates and indexes. Throws ParseError(Schema) naming the offending
  /// record, with its file line when `lines` is given.
  KnowledgeGraph(std::set<std::string> types, std::vector<RelationSignature> relations,
                 std::vector<Entity> entities, std::vector<Fact> facts,
                 const RecordLines* lines = nullptr);

  const std::set<std::string>& types() const { return types_; }
  const std::vector<RelationSignature>& relations() const { return relations_; }
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Fact>& facts() const { return facts_; }

  bool has_type(std::string_view t) const { return types_.count(std::string(t)) > 0; }
  const Entity* find_entity(std::string_view id) const;

  bool is_entity_relation(std::string_view name) const;
  bool is_literal_relation(std::string_view name) const;
  /// Entity-relation signatures named `name`.
  std::vector<const RelationSignature*> entity_signatures(std::string_view name) const;
  /// The literal attribute `name` declared on `domain` (or the implicit `id`).
  std::optional<LiteralKind> attribute_kind(std::string_view name, std::string_view domain) const;
  /// Literal attributes declared on a type, in declaration order (excluding `id`).
  std::vector<const RelationSignature*> attributes_of(std::string_view type) const;

  /// Entities whose type is t. Throws UnknownType.
  const EntitySet& entities_of_type(std::string_view t) const;

  /// forward: {s : (rel, s, o) in I, o in objects}; inverse: {o : (rel, s, o), s in objects}.
  EntitySet neighbors(std::string_view rel, const EntitySet& objects, Direction dir) const;

  /// attrs[attr] over the given entities; entities lacking the attr add nothing.
  std::vector<Literal> attr_values(std::string_view attr, const EntitySet& entities) const;

  /// Entities of `type` whose attribute equals `value` (case-folded text compare,
  /// numeric compare for numbers).
  EntitySet lookup_attr(std::string_view type, std::string_view attr, const Literal& value) const;

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b);

 private:
  void validate_and_index(const RecordLines* lines);

  std::set<std::string> types_;
  std::vector<RelationSignature> relations_;
  std::vector<Entity> entities_;
  std::vector<Fact> facts_;

  std::unordered_map<std::string, std::size_t> entity_pos_;
  std::map<std::string, EntitySet> by_type_;
  // rel -> object -> subjects, rel -> subject -> objects
  std::map<std::string, std::map<std::string, EntitySet>, std::less<>> forward_;
  std::map<std::string, std::map<std::string, EntitySet>, std::less<>> inverse_;
  // attr -> canonical value -> entities
  std::map<std::string, std::map<std::string, EntitySet>, std::less<>> attr_index_;
};

/// Literal equality used by the attr index and by EntityBlock constraints.
bool literal_matches(const Literal& stored, const Literal& probe);

KnowledgeGraph load_kg(const std::filesystem::path& path);
KnowledgeGraph parse_kg(std::string_view content);
std::string serialize_kg(const KnowledgeGraph& kg);

}  // namespace spedn::kg
