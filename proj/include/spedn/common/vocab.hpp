#pragma once

#include <map>
#include <string>
#include <vector>

namespace spedn {

/// Symbol table with reserved entries at the front. Lookups of unknown
/// symbols return the id of the first reserved symbol.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> reserved);

  std::size_t add(const std::string& symbol);
  std::size_t id(const std::string& symbol) const;
  bool contains(const std::string& symbol) const { return ids_.count(symbol) > 0; }
  const std::string& symbol(std::size_t id) const { return symbols_.at(id); }
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  static Vocab from_symbols(const std::vector<std::string>& symbols);
  friend bool operator==(const Vocab& a, const Vocab& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, std::size_t> ids_;
};

}  // namespace spedn
