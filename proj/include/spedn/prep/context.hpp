#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spedn/kg/knowledge_graph.hpp"

namespace spedn::prep {

/// Surface n-gram -> entity id. Entity ids are implicit surfaces; alias
/// lines `alias <surface> <entity-id>` add more.
class EntityLexicon {
 public:
  static EntityLexicon from_kg(const kg::KnowledgeGraph& kg);
  /// from_kg plus the alias file; aliases to unknown ids are a schema error.
  static EntityLexicon load(const std::filesystem::path& aliases, const kg::KnowledgeGraph& kg);
  static EntityLexicon parse(std::string_view aliases, const kg::KnowledgeGraph& kg);

  void add(const std::string& surface, const std::string& id);
  const std::string* find(std::string_view surface) const;
  std::size_t max_words() const { return max_words_; }
  const std::map<std::string, std::string, std::less<>>& entries() const { return table_; }

 private:
  std::map<std::string, std::string, std::less<>> table_;
  std::size_t max_words_ = 0;
};

struct EntityMention {
  std::size_t begin = 0, end = 0;  // token span [begin, end)
  std::string entity;
  std::string type;
  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// Greedy left-to-right longest match over lowercase surface tokens.
std::vector<EntityMention> link_entities(const std::vector<std::string>& tokens, const kg::KnowledgeGraph& kg,
                                         const EntityLexicon& lexicon);

struct TypeSource {
  bool linked = false;   // contributed by a linked entity
  bool surface = false;  // mentioned by name in the question
  friend bool operator==(const TypeSource&, const TypeSource&) = default;
};

struct CandidateRelation {
  std::string rel, domain, range;
  friend auto operator<=>(const CandidateRelation&, const CandidateRelation&) = default;
};

/// X^C: the question plus candidate types T^in and candidate relations R^in.
struct QuestionContext {
  std::vector<std::string> surface;  // lowercase words
  std::vector<std::string> tokens;   // stems
  std::vector<EntityMention> entities;
  std::vector<std::pair<std::size_t, std::string>> type_mentions;  // (token index, type)
  std::map<std::string, TypeSource> types;
  std::vector<CandidateRelation> relations;

  friend bool operator==(const QuestionContext&, const QuestionContext&) = default;
};

/// `hints` are extra [begin, end) spans (from the mention tagger); a hinted
/// span not already linked is looked up by its stemmed words.
QuestionContext build_context(std::string_view question, const kg::KnowledgeGraph& kg, const EntityLexicon& lexicon,
                              const std::vector<std::pair<std::size_t, std::size_t>>& hints = {});

// ---------------------------------------------------------------------------

enum class GraphMode { Chain, Full };

struct QuestionGraph {
  enum class NodeKind { Token, Type, Relation };
  std::vector<std::string> symbols;
  std::vector<NodeKind> kinds;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // undirected
  std::size_t word_edges = 0;
  std::size_t token_count = 0;

  std::size_t size() const { return symbols.size(); }
  /// Neighbour lists; an edge listed twice counts twice.
  std::vector<std::vector<std::size_t>> adjacency() const;
};

/// Tokens inside a linked span become "@<type>"; type nodes are "T:<type>",
/// relation nodes "R:<rel>". Node order: tokens, types, relations.
QuestionGraph to_question_graph(const QuestionContext& ctx, GraphMode mode);

}  // namespace spedn::prep
