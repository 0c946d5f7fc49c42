#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spedn/blocks/block.hpp"
#include "spedn/kg/knowledge_graph.hpp"

namespace spedn::query {

// ---------------------------------------------------------------------------
// Ordinal lexicon: (surface name, type) -> (key attribute, direction)

struct OrdinalEntry {
  std::string attr;
  bool maximize = false;
};

class OrdinalLexicon {
 public:
  /// The shipped six-entry table (smallest/largest state by area, ...).
  static OrdinalLexicon defaults();
  static OrdinalLexicon parse(std::string_view content);
  static OrdinalLexicon load(const std::filesystem::path& path);

  void add(std::string surface, std::string type, OrdinalEntry entry);
  const OrdinalEntry* find(std::string_view surface, std::string_view type) const;
  const std::map<std::pair<std::string, std::string>, OrdinalEntry>& entries() const { return table_; }

 private:
  std::map<std::pair<std::string, std::string>, OrdinalEntry> table_;
};

// ---------------------------------------------------------------------------
// Semantic query graph

struct GraphNode {
  blocks::SemanticBlock block;
  blocks::OutputType output;
  /// One child per slot, in slot order.
  std::vector<std::size_t> children;
};

struct SemanticQueryGraph {
  std::vector<GraphNode> nodes;  // nodes[0] is the root
  std::size_t root = 0;
  /// Nodes merged with the root by implicit intersection.
  std::vector<std::size_t> conjuncts;
};

/// Indented tree rendering used by the CLI and REPL.
std::string render_graph(const SemanticQueryGraph& g);

/// Incremental stack-based assembly. The first block becomes the root and
/// pushes its slots (leftmost on top); each later block fills the top slot
/// or, with an empty stack, joins the root's conjunction group.
class AssemblyState {
 public:
  struct OpenSlot {
    std::size_t node;
    std::size_t slot;
    blocks::SlotNeed need;
  };

  enum class Expect { Anything, Slot, Nothing };

  /// What the next block must produce. With Expect::Slot, `need()` holds the
  /// required slot (the top slot, or the root type for a conjunction).
  Expect expect() const;
  blocks::SlotNeed need() const;

  bool fits(const blocks::SemanticBlock& b, const kg::KnowledgeGraph& kg) const;

  /// Appends a block. Throws Error(Assembly) when its output type does not fit.
  void push(const blocks::SemanticBlock& b, const kg::KnowledgeGraph& kg);

  bool has_root() const { return !graph_.nodes.empty(); }
  bool complete() const { return has_root() && open_.empty(); }
  const std::vector<OpenSlot>& open_slots() const { return open_; }
  const SemanticQueryGraph& graph() const { return graph_; }

 private:
  std::vector<OpenSlot> open_;  // back() is the top
  SemanticQueryGraph graph_;
};

SemanticQueryGraph assemble(const blocks::BlockSequence& seq, const kg::KnowledgeGraph& kg);

// ---------------------------------------------------------------------------
// Legality controller

struct BlockShape {
  blocks::Pattern pattern;
  /// Required output; nullopt means any schema-valid block of the pattern.
  std::optional<blocks::SlotNeed> need;
};

struct LegalNext {
  bool may_end = false;
  std::vector<BlockShape> shapes;

  bool admits(const blocks::SemanticBlock& b, const kg::KnowledgeGraph& kg) const;
};

LegalNext legal_next(const AssemblyState& state, const kg::KnowledgeGraph& kg);

/// Constant arguments available when enumerating EntityBlock constraints:
/// (type, attr) -> candidate values.
using ValuePool = std::map<std::pair<std::string, std::string>, std::vector<blocks::BlockValue>>;

/// Every schema-valid block over kg's schema: entity(t), entity(t, a, v) for
/// pooled values, relations in both signature directions, literal blocks,
/// ordinals from the lexicon, aggregates, and binary joins.
std::vector<blocks::SemanticBlock> block_universe(const kg::KnowledgeGraph& kg, const OrdinalLexicon& lexicon,
                                                  const ValuePool& values);

// ---------------------------------------------------------------------------
// Execution

using ValueList = std::vector<kg::Literal>;
using AnswerSet = std::variant<kg::EntitySet, ValueList, double>;

AnswerSet execute(const SemanticQueryGraph& g, const kg::KnowledgeGraph& kg, const OrdinalLexicon& lexicon);

/// Sorts a value multiset into canonical order (numbers before text).
void canonicalize(ValueList& values);

/// Entity sets as sets, value multisets as sorted lists with numeric
/// tolerance, scalars within tolerance.
bool answers_equal(const AnswerSet& a, const AnswerSet& b, double tol = 1e-9);
std::string format_answer(const AnswerSet& a);

}  // namespace spedn::query
