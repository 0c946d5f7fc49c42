#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spedn/kg/knowledge_graph.hpp"

namespace spedn::blocks {

enum class Pattern { Entity, Relation, Literal, Ordinal, Aggr, Join };

inline constexpr Pattern kAllPatterns[] = {Pattern::Entity,  Pattern::Relation, Pattern::Literal,
                                           Pattern::Ordinal, Pattern::Aggr,     Pattern::Join};

const char* pattern_name(Pattern p);
std::optional<Pattern> pattern_from(std::string_view name);

/// A constant argument as written: quoted text or a numeric lexeme. The
/// lexeme is kept verbatim so printing round-trips.
struct BlockValue {
  enum class Form { Text, Number };
  Form form = Form::Text;
  std::string lexeme;

  static BlockValue text(std::string s) { return {Form::Text, std::move(s)}; }
  static BlockValue number(std::string s) { return {Form::Number, std::move(s)}; }

  kg::Literal to_literal() const;

  friend bool operator==(const BlockValue&, const BlockValue&) = default;
};

struct Constraint {
  std::string attr;
  BlockValue value;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// entity(t) or entity(t, attr, value)
struct EntityBlock {
  std::string type;
  std::optional<Constraint> constraint;
  friend bool operator==(const EntityBlock&, const EntityBlock&) = default;
};

/// relation(out, rel, :in)
struct RelationBlock {
  std::string out_type;
  std::string rel;
  std::string in_type;
  friend bool operator==(const RelationBlock&, const RelationBlock&) = default;
};

/// literal(attr, :t) -- a filter when attr is boolean, a projection otherwise.
struct LiteralBlock {
  std::string attr;
  std::string type;
  friend bool operator==(const LiteralBlock&, const LiteralBlock&) = default;
};

/// ordinal(surface, :t); the surface name resolves through an ordinal lexicon.
struct OrdinalBlock {
  std::string op;
  std::string type;
  friend bool operator==(const OrdinalBlock&, const OrdinalBlock&) = default;
};

/// aggr(count|average, :t)
struct AggrBlock {
  std::string op;
  std::string type;
  friend bool operator==(const AggrBlock&, const AggrBlock&) = default;
};

/// join(intersection|union|exclude, :t, :t, ...); evaluated as a left fold.
struct JoinBlock {
  std::string op;
  std::vector<std::string> types;
  friend bool operator==(const JoinBlock&, const JoinBlock&) = default;
};

using SemanticBlock =
    std::variant<EntityBlock, RelationBlock, LiteralBlock, OrdinalBlock, AggrBlock, JoinBlock>;
using BlockSequence = std::vector<SemanticBlock>;

Pattern pattern_of(const SemanticBlock& b);

// ---------------------------------------------------------------------------
// Typing

struct EntitySetOut {
  std::string type;
  friend bool operator==(const EntitySetOut&, const EntitySetOut&) = default;
};
/// Projected attribute values; `source_type` is the type they were read from.
struct ValuesOut {
  kg::LiteralKind kind;
  std::string source_type;
  friend bool operator==(const ValuesOut&, const ValuesOut&) = default;
};
struct ScalarOut {
  friend bool operator==(const ScalarOut&, const ScalarOut&) = default;
};
using OutputType = std::variant<EntitySetOut, ValuesOut, ScalarOut>;

std::string describe(const OutputType& t);

/// What a slot accepts: an entity set of `type`, or (for average) the
/// numeric values projected from `type`.
struct SlotNeed {
  enum class Kind { Entities, Values };
  Kind kind = Kind::Entities;
  std::string type;
  friend bool operator==(const SlotNeed&, const SlotNeed&) = default;
};

std::vector<SlotNeed> slots_of(const SemanticBlock& b);
bool satisfies(const OutputType& out, const SlotNeed& need);

/// Output type of a schema-valid block. Throws Schema for a literal block
/// whose attribute is not declared on its type.
OutputType block_output_type(const SemanticBlock& b, const kg::KnowledgeGraph& kg);

// ---------------------------------------------------------------------------
// Text form

/// Parses `pattern(arg, ...)` blocks separated by whitespace. Throws
/// ParseError (Parse or Arity) with a character offset. Empty input is a
/// syntax error.
BlockSequence parse_blocks(std::string_view text);
SemanticBlock parse_block(std::string_view text);

std::string print_block(const SemanticBlock& b);
std::string print_blocks(const BlockSequence& seq);

// ---------------------------------------------------------------------------
// Schema validation

struct Violation {
  std::size_t index;  // block position in the sequence
  std::string message;
};

std::vector<Violation> validate_block(const SemanticBlock& b, const kg::KnowledgeGraph& kg,
                                      std::size_t index = 0);
std::vector<Violation> validate_blocks(const BlockSequence& seq, const kg::KnowledgeGraph& kg);

}  // namespace spedn::blocks
