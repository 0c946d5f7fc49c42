#include "spedn/prep/context.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"
#include "spedn/prep/stem.hpp"

namespace spedn::prep {

EntityLexicon EntityLexicon::from_kg(const kg::KnowledgeGraph& kg) {
  EntityLexicon lex;
  for (const auto& e : kg.entities()) lex.add(e.id, e.id);
  return lex;
}

EntityLexicon EntityLexicon::parse(std::string_view aliases, const kg::KnowledgeGraph& kg) {
  auto lex = from_kg(kg);
  std::size_t lineno = 0;
  for (const auto& raw : text::split(aliases, '\n')) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() != 3 || f[0] != "alias")
      throw ParseError(ErrorKind::Parse, "expected alias <surface> <entity-id>", 0, lineno);
    auto id = text::fold(f[2]);
    if (!kg.find_entity(id)) throw ParseError(ErrorKind::Schema, "alias to unknown entity " + id, 0, lineno);
    lex.add(f[1], id);
  }
  return lex;
}

EntityLexicon EntityLexicon::load(const std::filesystem::path& aliases, const kg::KnowledgeGraph& kg) {
  std::ifstream in(aliases);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + aliases.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), kg);
}

void EntityLexicon::add(const std::string& surface, const std::string& id) {
  auto words = text::split_ws(text::fold(surface));
  if (words.empty()) return;
  max_words_ = std::max(max_words_, words.size());
  table_[text::join(words, " ")] = id;
}

const std::string* EntityLexicon::find(std::string_view surface) const {
  auto it = table_.find(surface);
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<EntityMention> link_entities(const std::vector<std::string>& tokens, const kg::KnowledgeGraph& kg,
                                         const EntityLexicon& lexicon) {
  std::vector<EntityMention> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool hit = false;
    for (std::size_t n = std::min(lexicon.max_words(), tokens.size() - i); n >= 1; --n) {
      std::vector<std::string> span(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
      if (const auto* id = lexicon.find(text::join(span, " "))) {
        out.push_back({i, i + n, *id, kg.find_entity(*id)->type});
        i += n;
        hit = true;
        break;
      }
    }
    if (!hit) ++i;
  }
  return out;
}

QuestionContext build_context(std::string_view question, const kg::KnowledgeGraph& kg, const EntityLexicon& lexicon,
                              const std::vector<std::pair<std::size_t, std::size_t>>& hints) {
  QuestionContext ctx;
  ctx.surface = text::word_tokens(question);
  for (const auto& w : ctx.surface) ctx.tokens.push_back(stem(w));
  ctx.entities = link_entities(ctx.surface, kg, lexicon);

  auto covered = [&](std::size_t i) {
    return std::any_of(ctx.entities.begin(), ctx.entities.end(),
                       [&](const auto& m) { return i >= m.begin && i < m.end; });
  };

  if (!hints.empty()) {
    std::map<std::string, std::string> stemmed;  // stemmed surface -> id
    for (const auto& [surface, id] : lexicon.entries()) {
      std::vector<std::string> st;
      for (const auto& w : text::split_ws(surface)) st.push_back(stem(w));
      stemmed.emplace(text::join(st, " "), id);
    }
    for (const auto& [b, e] : hints) {
      if (b >= e || e > ctx.tokens.size()) continue;
      bool free = true;
      for (std::size_t i = b; i < e; ++i) free = free && !covered(i);
      if (!free) continue;
      std::vector<std::string> span(ctx.tokens.begin() + static_cast<std::ptrdiff_t>(b),
                                    ctx.tokens.begin() + static_cast<std::ptrdiff_t>(e));
      auto it = stemmed.find(text::join(span, " "));
      if (it != stemmed.end()) ctx.entities.push_back({b, e, it->second, kg.find_entity(it->second)->type});
    }
    std::sort(ctx.entities.begin(), ctx.entities.end(),
              [](const auto& x, const auto& y) { return x.begin < y.begin; });
  }

  for (const auto& m : ctx.entities) ctx.types[m.type].linked = true;

  std::map<std::string, std::string> type_stems;
  for (const auto& t : kg.types()) type_stems[stem(t)] = t;
  for (std::size_t i = 0; i < ctx.tokens.size(); ++i) {
    if (covered(i)) continue;
    auto it = type_stems.find(ctx.tokens[i]);
    if (it == type_stems.end()) continue;
    ctx.type_mentions.emplace_back(i, it->second);
    ctx.types[it->second].surface = true;
  }

  std::set<CandidateRelation> rels;
  for (const auto& r : kg.relations())
    if (r.is_entity_relation() && ctx.types.count(r.domain) && ctx.types.count(r.range_type()))
      rels.insert({r.name, r.domain, r.range_type()});
  ctx.relations.assign(rels.begin(), rels.end());
  return ctx;
}

std::vector<std::vector<std::size_t>> QuestionGraph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(symbols.size());
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

QuestionGraph to_question_graph(const QuestionContext& ctx, GraphMode mode) {
  QuestionGraph g;
  const std::size_t n = ctx.tokens.size();
  g.token_count = n;
  g.symbols = ctx.tokens;
  for (const auto& m : ctx.entities)
    for (std::size_t i = m.begin; i < m.end; ++i) g.symbols[i] = "@" + m.type;
  g.kinds.assign(n, QuestionGraph::NodeKind::Token);

  std::map<std::string, std::size_t> type_node;
  for (const auto& [t, src] : ctx.types) {
    type_node[t] = g.symbols.size();
    g.symbols.push_back("T:" + t);
    g.kinds.push_back(QuestionGraph::NodeKind::Type);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (mode == GraphMode::Chain) {
      if (i + 1 < n) g.edges.emplace_back(i, i + 1);
    } else {
      for (std::size_t j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
    }
  }
  g.word_edges = g.edges.size();

  for (const auto& m : ctx.entities) g.edges.emplace_back(m.begin, type_node.at(m.type));
  for (const auto& [i, t] : ctx.type_mentions) g.edges.emplace_back(i, type_node.at(t));

  for (const auto& r : ctx.relations) {
    const std::size_t id = g.symbols.size();
    g.symbols.push_back("R:" + r.rel);
    g.kinds.push_back(QuestionGraph::NodeKind::Relation);
    g.edges.emplace_back(id, type_node.at(r.domain));
    g.edges.emplace_back(id, type_node.at(r.range));
  }
  return g;
}

}  // namespace spedn::prep
