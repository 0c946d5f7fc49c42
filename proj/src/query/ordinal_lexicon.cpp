#include <fstream>
#include <sstream>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"
#include "spedn/query/query_graph.hpp"

namespace spedn::query {

OrdinalLexicon OrdinalLexicon::defaults() {
  OrdinalLexicon lex;
  lex.add("smallest", "state", {"area", false});
  lex.add("largest", "state", {"area", true});
  lex.add("smallest", "city", {"population", false});
  lex.add("biggest", "city", {"population", true});
  lex.add("longest", "river", {"len", true});
  lex.add("shortest", "river", {"len", false});
  return lex;
}

OrdinalLexicon OrdinalLexicon::parse(std::string_view content) {
  OrdinalLexicon lex;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    auto t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = text::split_ws(t);
    if (f.size() != 5 || f[0] != "ordinal" || (f[4] != "max" && f[4] != "min"))
      throw ParseError(ErrorKind::Parse, "expected 'ordinal <surface> <type> <attr> max|min'", 0, line_no);
    lex.add(text::fold(f[1]), text::fold(f[2]), {text::fold(f[3]), f[4] == "max"});
  }
  return lex;
}

OrdinalLexicon OrdinalLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void OrdinalLexicon::add(std::string surface, std::string type, OrdinalEntry entry) {
  table_[{std::move(surface), std::move(type)}] = std::move(entry);
}

const OrdinalEntry* OrdinalLexicon::find(std::string_view surface, std::string_view type) const {
  auto it = table_.find({std::string(surface), std::string(type)});
  return it == table_.end() ? nullptr : &it->second;
}

}  // namespace spedn::query
