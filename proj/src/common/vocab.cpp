#include "spedn/common/vocab.hpp"

namespace spedn {

Vocab::Vocab(std::vector<std::string> reserved) {
  for (const auto& s : reserved) add(s);
}

std::size_t Vocab::add(const std::string& symbol) {
  auto [it, fresh] = ids_.emplace(symbol, symbols_.size());
  if (fresh) symbols_.push_back(symbol);
  return it->second;
}

std::size_t Vocab::id(const std::string& symbol) const {
  auto it = ids_.find(symbol);
  return it == ids_.end() ? 0 : it->second;
}

Vocab Vocab::from_symbols(const std::vector<std::string>& symbols) {
  Vocab v;
  for (const auto& s : symbols) v.add(s);
  return v;
}

}  // namespace spedn
