#include "spedn/model/controller.hpp"

#include <algorithm>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::model {

using namespace spedn::blocks;

namespace {

std::pair<int, std::string> key(const SlotNeed& n) { return {static_cast<int>(n.kind), n.type}; }

std::size_t add_sat(std::size_t a, std::size_t b) { return std::min(kUnreachable, a + b); }

}  // namespace

CandidateSet::CandidateSet(const OutputVocabulary& vocab, const prep::QuestionContext& ctx,
                           const kg::KnowledgeGraph& kg)
    : targets_(pointer_targets(ctx)) {
  const auto& tmpls = vocab.templates();
  for (std::size_t i = 0; i < tmpls.size(); ++i) {
    auto b = instantiate(tmpls[i], targets_);
    if (!b) continue;
    Candidate c;
    try {
      c.output = block_output_type(*b, kg);
    } catch (const Error&) {
      continue;
    }
    c.block = std::move(*b);
    c.template_index = i;
    c.symbols = vocab.template_symbols()[i];
    c.slots = slots_of(c.block);
    for (const auto& s : c.slots) fill_.emplace(key(s), kUnreachable);
    cands_.push_back(std::move(c));
  }
  // Bellman-Ford style relaxation; every round fixes at least one more level
  // of nesting, so |needs| + 1 rounds suffice.
  for (std::size_t round = 0; round <= fill_.size() + 1; ++round) {
    bool changed = false;
    for (auto& c : cands_) {
      std::size_t cost = c.symbols.size();
      for (const auto& s : c.slots) cost = add_sat(cost, fill_.at(key(s)));
      c.cost = cost;
      for (auto& [k, v] : fill_) {
        if (cost < v && satisfies(c.output, SlotNeed{static_cast<SlotNeed::Kind>(k.first), k.second})) {
          v = cost;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
}

std::size_t CandidateSet::fill_cost(const SlotNeed& need) const {
  if (auto it = fill_.find(key(need)); it != fill_.end()) return it->second;
  std::size_t best = kUnreachable;
  for (const auto& c : cands_)
    if (satisfies(c.output, need)) best = std::min(best, c.cost);
  return best;
}

std::size_t CandidateSet::min_sequence() const {
  std::size_t best = kUnreachable;
  for (const auto& c : cands_) best = std::min(best, c.cost);
  return add_sat(best, 1);
}

// ---------------------------------------------------------------------------

Controller::Controller(const OutputVocabulary& vocab, const CandidateSet& cands, const kg::KnowledgeGraph& kg,
                       bool guided)
    : vocab_(&vocab), cands_(&cands), kg_(&kg), guided_(guided) {}

DecodeTrack Controller::start() const {
  DecodeTrack t;
  reset_live(t);
  return t;
}

bool Controller::admitted(const Candidate& c, const query::AssemblyState& s) const {
  switch (s.expect()) {
    case query::AssemblyState::Expect::Anything: return true;
    case query::AssemblyState::Expect::Nothing: return false;
    case query::AssemblyState::Expect::Slot: return satisfies(c.output, s.need());
  }
  return false;
}

void Controller::reset_live(DecodeTrack& t) const {
  t.live.clear();
  if (!guided_) return;
  const auto& cs = cands_->candidates();
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (admitted(cs[i], t.assembly)) t.live.push_back(i);
}

std::size_t Controller::pending(const query::AssemblyState& s) const {
  const auto& open = s.open_slots();
  std::size_t total = 0;
  // the open block fills the top slot
  for (std::size_t i = 0; i + 1 < open.size(); ++i) total = add_sat(total, cands_->fill_cost(open[i].need));
  return total;
}

std::vector<char> Controller::allowed(const DecodeTrack& t, std::size_t remaining) const {
  std::vector<char> mask(vocab_->size(), guided_ ? 0 : 1);
  mask[vocab_->bos()] = 0;
  if (!guided_ || t.ended || remaining == 0) return mask;
  const std::size_t p = t.partial.size();
  if (p == 0 && t.assembly.complete()) mask[vocab_->eos()] = 1;
  // after the next symbol: the rest of the block, its slots, slots already
  // open and the final </s>
  const std::size_t base = add_sat(pending(t.assembly), 1);
  const auto& cs = cands_->candidates();
  for (auto i : t.live) {
    const auto& c = cs[i];
    if (add_sat(c.cost - p - 1, base) <= remaining - 1) mask[c.symbols[p]] = 1;
  }
  return mask;
}

void Controller::advance(DecodeTrack& t, std::size_t symbol) const {
  ++t.emitted;
  auto fail = [&](std::string why) {
    if (!t.broken) t.problem = std::move(why);
    t.broken = true;
  };
  if (symbol == vocab_->eos()) {
    t.ended = true;
    if (!t.partial.empty()) fail("unterminated block");
    else if (!t.assembly.complete()) fail("incomplete query graph");
    return;
  }
  if (symbol == vocab_->bos()) {
    fail("start symbol emitted");
    return;
  }
  std::optional<BlockTemplate> tmpl;
  if (vocab_->mode() == OutputMode::Decomposed) {
    if (symbol != vocab_->eob()) {
      const std::size_t p = t.partial.size();
      t.partial.push_back(symbol);
      const auto& cs = cands_->candidates();
      std::erase_if(t.live, [&](std::size_t i) { return cs[i].symbols.size() <= p || cs[i].symbols[p] != symbol; });
      return;
    }
    std::vector<std::string> comps;
    for (auto id : t.partial) comps.push_back(vocab_->symbols().symbol(id));
    t.partial.clear();
    tmpl = from_components(comps);
    if (!tmpl) fail("malformed block " + text::join(comps, " "));
  } else {
    tmpl = from_atomic_symbol(vocab_->symbols().symbol(symbol));
    if (!tmpl) fail("malformed block " + vocab_->symbols().symbol(symbol));
  }
  if (tmpl) {
    auto b = instantiate(*tmpl, cands_->targets());
    if (!b) {
      fail("pointer PTR" + std::to_string(*tmpl->pointer) + " has no linked " +
           std::get<EntityBlock>(tmpl->block).type);
    } else {
      t.blocks.push_back(*b);
      if (!t.broken) {
        try {
          t.assembly.push(*b, *kg_);
        } catch (const Error& e) {
          fail(e.what());
        }
      }
    }
  }
  reset_live(t);
}

}  // namespace spedn::model
