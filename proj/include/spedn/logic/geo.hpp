#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spedn/blocks/block.hpp"
#include "spedn/kg/knowledge_graph.hpp"

namespace spedn::logic {

/// Prolog-style GEO term. Conjunctions are the parenthesised comma lists.
struct GeoTerm {
  enum class Kind { Var, Atom, Number, Compound, Conj };
  Kind kind = Kind::Atom;
  std::string name;  // variable letter, atom text, number lexeme or functor
  std::vector<GeoTerm> args;

  bool is_var() const { return kind == Kind::Var; }
  friend bool operator==(const GeoTerm&, const GeoTerm&) = default;
};

GeoTerm parse_geo(std::string_view text);
std::string print_geo(const GeoTerm& t);

struct GeoPredicate {
  enum class Kind { Type, Adjective, Relation, Attribute, Superlative, Aggregate, Constant };
  Kind kind;
  std::string target;  // KG type / relation / attribute, ordinal surface or aggr op
};

/// Functor -> conversion rule, from lines `geo-pred <functor> <kind> <mapping>`.
class GeoPredicateTable {
 public:
  static GeoPredicateTable parse(std::string_view content);
  static GeoPredicateTable load(const std::filesystem::path& path);

  const GeoPredicate* find(std::string_view functor) const;
  void add(std::string functor, GeoPredicate p) { table_[std::move(functor)] = std::move(p); }

 private:
  std::map<std::string, GeoPredicate, std::less<>> table_;
};

/// Preorder linearization of the variable tree rooted at the answer variable.
/// Throws Error(Conversion) naming an unmapped functor or a free variable.
blocks::BlockSequence geo_to_blocks(const GeoTerm& term, const kg::KnowledgeGraph& kg,
                                    const GeoPredicateTable& table);

}  // namespace spedn::logic
