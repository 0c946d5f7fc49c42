#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spedn/blocks/block.hpp"
#include "spedn/kg/knowledge_graph.hpp"

namespace spedn::logic {

struct LambdaTerm {
  enum class Kind { Lambda, And, Or, Pred, Const, Var };
  Kind kind = Kind::Pred;
  std::string name;  // lambda/var: variable number; pred: name with '_'; const: value
  std::string sort;  // const only, e.g. "_ci"
  std::vector<LambdaTerm> args;

  friend bool operator==(const LambdaTerm&, const LambdaTerm&) = default;
};

/// Accepts `$0`, `$ 0`, the `e` type suffix on the binder, and `value: _sort`
/// constants with or without the space.
LambdaTerm parse_atis(std::string_view text);

struct AtisSort {
  bool entity = false;
  std::string target;  // entity: KG type; literal: normalization ("pad2" | "plain")
};

/// Lines `atis-type <pred> <type>` and `atis-sort <sort> entity <type>|literal <norm>`.
class AtisTable {
 public:
  static AtisTable parse(std::string_view content);
  static AtisTable load(const std::filesystem::path& path);

  const std::string* type_of(std::string_view pred) const;
  const AtisSort* sort(std::string_view name) const;

 private:
  std::map<std::string, std::string, std::less<>> types_;
  std::map<std::string, AtisSort, std::less<>> sorts_;
};

blocks::BlockSequence atis_to_blocks(const LambdaTerm& term, const kg::KnowledgeGraph& kg, const AtisTable& table);

}  // namespace spedn::logic
