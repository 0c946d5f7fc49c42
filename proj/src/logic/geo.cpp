#include "spedn/logic/geo.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::logic {

namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class GeoParser {
 public:
  explicit GeoParser(std::string_view s) : s_(s) {}

  GeoTerm parse() {
    GeoTerm t = term();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "' after term");
    if (t.kind != GeoTerm::Kind::Compound || t.name != "answer" || t.args.size() != 2)
      throw ParseError(ErrorKind::Parse, "root must be answer/2", 0);
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(ErrorKind::Parse, msg, pos_); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip();
    if (pos_ >= s_.size()) fail(std::string("unbalanced input: expected '") + c + "' at end");
    if (s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::vector<GeoTerm> list(char close) {
    std::vector<GeoTerm> out;
    out.push_back(term());
    for (;;) {
      skip();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        out.push_back(term());
        continue;
      }
      expect(close);
      return out;
    }
  }

  GeoTerm term() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      return {GeoTerm::Kind::Conj, "", list(')')};
    }
    if (c == '\'') {
      auto end = s_.find('\'', pos_ + 1);
      if (end == std::string_view::npos) fail("unterminated quoted atom");
      GeoTerm t{GeoTerm::Kind::Atom, std::string(s_.substr(pos_ + 1, end - pos_ - 1)), {}};
      pos_ = end + 1;
      return t;
    }
    const std::size_t start = pos_;
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      ++pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
      return {GeoTerm::Kind::Number, std::string(s_.substr(start, pos_ - start)), {}};
    }
    if (!ident_char(c)) fail("unexpected '" + std::string(1, c) + "'");
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    std::string name(s_.substr(start, pos_ - start));
    if (std::isupper(static_cast<unsigned char>(name[0]))) {
      if (name.size() != 1) {
        pos_ = start;
        fail("variables are single uppercase letters, got " + name);
      }
      return {GeoTerm::Kind::Var, name, {}};
    }
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      return {GeoTerm::Kind::Compound, name, list(')')};
    }
    return {GeoTerm::Kind::Atom, name, {}};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void print_to(std::ostream& os, const GeoTerm& t) {
  auto args = [&](const char* open) {
    os << open;
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (i) os << ", ";
      print_to(os, t.args[i]);
    }
    os << ')';
  };
  switch (t.kind) {
    case GeoTerm::Kind::Var:
    case GeoTerm::Kind::Number: os << t.name; break;
    case GeoTerm::Kind::Atom: {
      bool plain = !t.name.empty() && std::islower(static_cast<unsigned char>(t.name[0]));
      for (char c : t.name) plain = plain && ident_char(c);
      if (plain) os << t.name;
      else os << '\'' << t.name << '\'';
      break;
    }
    case GeoTerm::Kind::Compound: os << t.name; args("("); break;
    case GeoTerm::Kind::Conj: args("("); break;
  }
}

// ---------------------------------------------------------------------------

struct Edge {
  std::string rel;
  std::string a, b;
  bool used = false;
};

struct VarInfo {
  std::optional<std::string> type;
  std::vector<std::string> adjectives;
  std::optional<std::string> superlative;
  std::optional<std::pair<std::string, std::string>> constant;  // (type, value)
  std::optional<std::pair<std::string, std::string>> projection;  // (attr, source var)
  std::optional<std::pair<std::string, std::string>> aggregate;   // (op, bound var)
};

class GeoConverter {
 public:
  GeoConverter(const kg::KnowledgeGraph& kg, const GeoPredicateTable& table) : kg_(kg), table_(table) {}

  blocks::BlockSequence run(const GeoTerm& root) {
    const auto& answer = root.args.at(0);
    if (!answer.is_var()) throw Error(ErrorKind::Conversion, "answer/2 must bind a variable");
    collect(root.args.at(1));
    const std::string a = answer.name;
    if (!vars_.count(a)) throw Error(ErrorKind::Conversion, "free variable " + a);
    infer_types();

    blocks::BlockSequence out;
    const auto& info = vars_.at(a);
    visited_.insert(a);
    if (info.aggregate) {
      const auto& [op, bound] = *info.aggregate;
      visited_.insert(bound);
      if (op == "count") {
        out.push_back(blocks::AggrBlock{op, type_of(bound)});
        append(out, lin(bound));
      } else {
        const auto& p = vars_.at(bound).projection;
        if (!p) throw Error(ErrorKind::Conversion, op + " needs an attribute-valued variable, got " + bound);
        const auto& src = p->second;
        visited_.insert(src);
        out.push_back(blocks::AggrBlock{op, type_of(src)});
        out.push_back(blocks::LiteralBlock{p->first, type_of(src)});
        append(out, lin(src));
      }
    } else if (info.projection) {
      const auto& [attr, src] = *info.projection;
      visited_.insert(src);
      out.push_back(blocks::LiteralBlock{attr, type_of(src)});
      append(out, lin(src));
    } else {
      append(out, lin(a));
    }
    for (const auto& [name, v] : vars_)
      if (!visited_.count(name)) throw Error(ErrorKind::Conversion, "variable " + name + " is not connected to " + a);
    return out;
  }

 private:
  static void append(blocks::BlockSequence& out, const blocks::BlockSequence& more) {
    out.insert(out.end(), more.begin(), more.end());
  }

  std::string var_arg(const GeoTerm& goal, std::size_t i) {
    if (i >= goal.args.size() || !goal.args[i].is_var())
      throw Error(ErrorKind::Conversion, goal.name + ": argument " + std::to_string(i + 1) + " must be a variable");
    vars_[goal.args[i].name];
    return goal.args[i].name;
  }

  void collect(const GeoTerm& goal) {
    if (goal.kind == GeoTerm::Kind::Conj) {
      for (const auto& g : goal.args) collect(g);
      return;
    }
    if (goal.kind != GeoTerm::Kind::Compound)
      throw Error(ErrorKind::Conversion, "expected a predicate, got " + goal.name);
    if (goal.name == "const") {
      const auto x = var_arg(goal, 0);
      if (goal.args.size() != 2 || goal.args[1].kind != GeoTerm::Kind::Compound || goal.args[1].args.empty())
        throw Error(ErrorKind::Conversion, "const/2 needs a kindid(value) term");
      const auto& k = goal.args[1];
      const auto* p = table_.find(k.name);
      if (!p || p->kind != GeoPredicate::Kind::Constant)
        throw Error(ErrorKind::Conversion, "unmapped predicate '" + k.name + "'");
      vars_[x].constant = {p->target, text::fold(k.args[0].name)};
      return;
    }
    const auto* p = table_.find(goal.name);
    if (!p) throw Error(ErrorKind::Conversion, "unmapped predicate '" + goal.name + "'");
    using K = GeoPredicate::Kind;
    switch (p->kind) {
      case K::Type: {
        auto& t = vars_[var_arg(goal, 0)].type;
        if (t && *t != p->target) throw Error(ErrorKind::Conversion, "conflicting types " + *t + " and " + p->target);
        t = p->target;
        break;
      }
      case K::Adjective: vars_[var_arg(goal, 0)].adjectives.push_back(p->target); break;
      case K::Relation: edges_.push_back({p->target, var_arg(goal, 0), var_arg(goal, 1)}); break;
      case K::Attribute: {
        const auto src = var_arg(goal, 0);
        vars_[var_arg(goal, 1)].projection = {{p->target, src}};
        break;
      }
      case K::Superlative:
        vars_[var_arg(goal, 0)].superlative = p->target;
        if (goal.args.size() != 2) throw Error(ErrorKind::Conversion, goal.name + "/2 expected");
        collect(goal.args[1]);
        break;
      case K::Aggregate: {
        if (goal.args.size() != 3) throw Error(ErrorKind::Conversion, goal.name + "/3 expected");
        const auto bound = var_arg(goal, 0);
        vars_[var_arg(goal, 2)].aggregate = {{p->target, bound}};
        collect(goal.args[1]);
        break;
      }
      case K::Constant: throw Error(ErrorKind::Conversion, goal.name + " may only appear inside const/2");
    }
  }

  void infer_types() {
    for (auto& [name, v] : vars_)
      if (!v.type && v.constant) v.type = v.constant->first;
    for (bool changed = true; changed;) {
      changed = false;
      for (auto& [name, v] : vars_) {
        if (v.type) continue;
        std::set<std::string> cands;
        for (const auto& e : edges_) {
          const bool left = e.a == name;
          const auto& other = left ? e.b : e.a;
          if ((!left && e.b != name) || !vars_.at(other).type) continue;
          for (const auto* sig : kg_.entity_signatures(e.rel)) {
            if (left && sig->range_type() == *vars_.at(other).type) cands.insert(sig->domain);
            if (!left && sig->domain == *vars_.at(other).type) cands.insert(sig->range_type());
          }
        }
        for (const auto& [n2, w] : vars_) {
          if (!w.projection || w.projection->second != name) continue;
          for (const auto& r : kg_.relations())
            if (!r.is_entity_relation() && r.name == w.projection->first) cands.insert(r.domain);
        }
        if (cands.size() == 1) {
          v.type = *cands.begin();
          changed = true;
        }
      }
    }
  }

  const std::string& type_of(const std::string& var) const {
    const auto& t = vars_.at(var).type;
    if (!t) throw Error(ErrorKind::Conversion, "free variable " + var + ": no type can be inferred");
    return *t;
  }

  blocks::BlockSequence lin(const std::string& x) {
    using namespace blocks;
    visited_.insert(x);
    const auto& info = vars_.at(x);
    const std::string t = type_of(x);
    std::vector<BlockSequence> pieces;
    if (info.constant) pieces.push_back({EntityBlock{t, Constraint{"id", BlockValue::text(info.constant->second)}}});
    for (auto& e : edges_) {
      if (e.used || (e.a != x && e.b != x)) continue;
      e.used = true;
      const std::string y = e.a == x ? e.b : e.a;
      if (visited_.count(y)) throw Error(ErrorKind::Conversion, "cyclic constraints between " + x + " and " + y);
      BlockSequence piece{RelationBlock{t, e.rel, type_of(y)}};
      append(piece, lin(y));
      pieces.push_back(std::move(piece));
    }
    BlockSequence out;
    if (info.superlative) out.push_back(OrdinalBlock{*info.superlative, t});
    const auto& adjs = info.adjectives;
    for (std::size_t i = 0; i < adjs.size(); ++i) {
      if (pieces.empty() && i + 1 == adjs.size())
        out.push_back(EntityBlock{t, Constraint{adjs[i], BlockValue::number("1")}});
      else
        out.push_back(LiteralBlock{adjs[i], t});
    }
    if (pieces.empty()) {
      if (adjs.empty()) out.push_back(EntityBlock{t, std::nullopt});
    } else if (pieces.size() == 1) {
      append(out, pieces[0]);
    } else {
      out.push_back(JoinBlock{"intersection", std::vector<std::string>(pieces.size(), t)});
      for (const auto& p : pieces) append(out, p);
    }
    return out;
  }

  const kg::KnowledgeGraph& kg_;
  const GeoPredicateTable& table_;
  std::map<std::string, VarInfo> vars_;
  std::vector<Edge> edges_;
  std::set<std::string> visited_;
};

}  // namespace

GeoTerm parse_geo(std::string_view text) { return GeoParser(text).parse(); }

std::string print_geo(const GeoTerm& t) {
  std::ostringstream os;
  print_to(os, t);
  return os.str();
}

GeoPredicateTable GeoPredicateTable::parse(std::string_view content) {
  static const std::map<std::string, GeoPredicate::Kind> kinds{
      {"type", GeoPredicate::Kind::Type},         {"adj", GeoPredicate::Kind::Adjective},
      {"rel", GeoPredicate::Kind::Relation},      {"attr", GeoPredicate::Kind::Attribute},
      {"sup", GeoPredicate::Kind::Superlative},   {"aggr", GeoPredicate::Kind::Aggregate},
      {"const", GeoPredicate::Kind::Constant}};
  GeoPredicateTable out;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(content, '\n')) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() != 4 || f[0] != "geo-pred")
      throw ParseError(ErrorKind::Parse, "expected geo-pred <functor> <kind> <mapping>", 0, lineno);
    auto k = kinds.find(f[2]);
    if (k == kinds.end()) throw ParseError(ErrorKind::Parse, "unknown predicate kind " + f[2], 0, lineno);
    out.add(f[1], {k->second, text::fold(f[3])});
  }
  return out;
}

GeoPredicateTable GeoPredicateTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const GeoPredicate* GeoPredicateTable::find(std::string_view functor) const {
  auto it = table_.find(functor);
  return it == table_.end() ? nullptr : &it->second;
}

blocks::BlockSequence geo_to_blocks(const GeoTerm& term, const kg::KnowledgeGraph& kg,
                                    const GeoPredicateTable& table) {
  if (term.kind != GeoTerm::Kind::Compound || term.name != "answer" || term.args.size() != 2)
    throw Error(ErrorKind::Conversion, "root must be answer/2");
  return GeoConverter(kg, table).run(term);
}

}  // namespace spedn::logic
