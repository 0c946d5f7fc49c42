#pragma once

#include <limits>
#include <map>
#include <vector>

#include "spedn/model/symbols.hpp"

namespace spedn::model {

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max() / 4;

/// One block the decoder may emit for a given question.
struct Candidate {
  blocks::SemanticBlock block;
  std::size_t template_index = 0;
  std::vector<std::size_t> symbols;
  blocks::OutputType output;
  std::vector<blocks::SlotNeed> slots;
  /// Symbols of this block plus the cheapest fill of all its slots.
  std::size_t cost = kUnreachable;
};

/// The vocabulary's templates instantiated against one question: pointer
/// templates with no matching linked entity drop out.
class CandidateSet {
 public:
  CandidateSet(const OutputVocabulary& vocab, const prep::QuestionContext& ctx, const kg::KnowledgeGraph& kg);

  const std::vector<Candidate>& candidates() const { return cands_; }
  const std::vector<prep::EntityMention>& targets() const { return targets_; }
  /// Fewest symbols that fill a slot with `need`; kUnreachable if none can.
  std::size_t fill_cost(const blocks::SlotNeed& need) const;
  /// Fewest symbols of any complete sequence, </s> included.
  std::size_t min_sequence() const;

 private:
  std::vector<prep::EntityMention> targets_;
  std::vector<Candidate> cands_;
  std::map<std::pair<int, std::string>, std::size_t> fill_;
};

/// Bookkeeping for one partial output: the blocks grouped so far, the
/// assembly state they build, and the open block's symbols.
struct DecodeTrack {
  query::AssemblyState assembly;
  blocks::BlockSequence blocks;
  std::vector<std::size_t> partial;
  /// Candidates consistent with `partial` (guided decoding only).
  std::vector<std::size_t> live;
  std::size_t emitted = 0;
  bool ended = false;
  /// A malformed, unlinkable or ill-typed block was emitted.
  bool broken = false;
  std::string problem;

  bool assembles() const { return ended && !broken && assembly.complete(); }
};

/// Groups symbols into blocks and, when guided, masks every symbol that
/// cannot continue to a complete, assemblable sequence within the step
/// budget.
class Controller {
 public:
  Controller(const OutputVocabulary& vocab, const CandidateSet& cands, const kg::KnowledgeGraph& kg, bool guided);

  DecodeTrack start() const;
  /// Allowed next symbols when `remaining` steps (this one included) are
  /// left. Unguided, everything but <s> is allowed.
  std::vector<char> allowed(const DecodeTrack& t, std::size_t remaining) const;
  void advance(DecodeTrack& t, std::size_t symbol) const;
  bool guided() const { return guided_; }

 private:
  bool admitted(const Candidate& c, const query::AssemblyState& s) const;
  void reset_live(DecodeTrack& t) const;
  /// Symbols still owed after the open block for slots already on the stack.
  std::size_t pending(const query::AssemblyState& s) const;

  const OutputVocabulary* vocab_;
  const CandidateSet* cands_;
  const kg::KnowledgeGraph* kg_;
  bool guided_;
};

}  // namespace spedn::model
