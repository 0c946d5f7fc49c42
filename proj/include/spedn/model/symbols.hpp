#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spedn/blocks/block.hpp"
#include "spedn/common/vocab.hpp"
#include "spedn/prep/context.hpp"
#include "spedn/query/query_graph.hpp"

namespace spedn::model {

enum class OutputMode { Atomic, Decomposed };

const char* mode_name(OutputMode m);

/// Linked-entity candidates a pointer symbol can address.
inline constexpr std::size_t kPointers = 3;

inline const std::string kBos = "<s>";
inline const std::string kEos = "</s>";
inline const std::string kEob = "</b>";

/// A block with its id value optionally replaced by a pointer into the
/// question's linked entities. With `pointer` set the constraint value is
/// ignored and filled per question.
struct BlockTemplate {
  blocks::SemanticBlock block;
  std::optional<std::size_t> pointer;
  friend bool operator==(const BlockTemplate&, const BlockTemplate&) = default;
};

/// Distinct linked entities in order of first mention, at most kPointers.
std::vector<prep::EntityMention> pointer_targets(const prep::QuestionContext& ctx);

/// Gold block -> template: an id value naming a pointer target becomes that
/// pointer; anything else stays a literal value.
BlockTemplate to_template(const blocks::SemanticBlock& b, const prep::QuestionContext& ctx);
/// Template -> block for this question; nullopt when the pointer has no
/// target of the block's type.
std::optional<blocks::SemanticBlock> instantiate(const BlockTemplate& t,
                                                 const std::vector<prep::EntityMention>& targets);

/// Component symbols of a template, without the boundary symbol:
/// P:entity T:state A:id PTR0, P:relation T:river R:loc T:state, ...
std::vector<std::string> components(const BlockTemplate& t);
/// Inverse of components; nullopt for a malformed component list.
std::optional<BlockTemplate> from_components(const std::vector<std::string>& comps);

/// Atomic symbol: the printed block, pointer written as PTRk.
std::string atomic_symbol(const BlockTemplate& t);
std::optional<BlockTemplate> from_atomic_symbol(const std::string& s);

/// Output symbols of a block sequence, ending with </s>.
std::vector<std::string> target_symbols(const blocks::BlockSequence& gold, const prep::QuestionContext& ctx,
                                        OutputMode mode);

struct GoldExample {
  const blocks::BlockSequence* gold;
  const prep::QuestionContext* ctx;
};

/// Symbol table plus the block templates the controller draws candidates
/// from. Ids 0..2 are <s>, </s>, </b> in both modes.
class OutputVocabulary {
 public:
  OutputVocabulary() = default;
  OutputVocabulary(OutputMode mode, std::vector<BlockTemplate> templates);

  /// Templates: the schema universe with pointer entity constraints for
  /// every type that has entities, literal values pooled from the gold
  /// corpus, and every gold block.
  static OutputVocabulary build(OutputMode mode, const kg::KnowledgeGraph& kg, const query::OrdinalLexicon& lexicon,
                                const std::vector<GoldExample>& corpus);

  OutputMode mode() const { return mode_; }
  const Vocab& symbols() const { return vocab_; }
  std::size_t size() const { return vocab_.size(); }
  const std::vector<BlockTemplate>& templates() const { return templates_; }
  /// Symbol ids of each template (components then </b>, or the atomic symbol).
  const std::vector<std::vector<std::size_t>>& template_symbols() const { return template_ids_; }

  std::size_t bos() const { return 0; }
  std::size_t eos() const { return 1; }
  std::size_t eob() const { return 2; }

  /// Ids for a gold sequence. Throws Error(Model) naming the first symbol
  /// outside the vocabulary.
  std::vector<std::size_t> encode(const blocks::BlockSequence& gold, const prep::QuestionContext& ctx) const;

 private:
  OutputMode mode_ = OutputMode::Decomposed;
  Vocab vocab_;
  std::vector<BlockTemplate> templates_;
  std::vector<std::vector<std::size_t>> template_ids_;
};

}  // namespace spedn::model
