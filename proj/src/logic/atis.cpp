#include "spedn/logic/atis.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::logic {

namespace {

struct Token {
  enum class Kind { Open, Close, Var, Word, Colon, End };
  Kind kind;
  std::string text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto space = [&](std::size_t k) { return std::isspace(static_cast<unsigned char>(s[k])); };
  while (i < s.size()) {
    const char c = s[i];
    if (space(i)) {
      ++i;
    } else if (c == '(' || c == ')' || c == ':') {
      out.push_back({c == '(' ? Token::Kind::Open : c == ')' ? Token::Kind::Close : Token::Kind::Colon, {}, i});
      ++i;
    } else if (c == '$' || (c == '\\' && i + 1 < s.size() && s[i + 1] == '$')) {
      const std::size_t start = i;
      i += c == '$' ? 1 : 2;
      while (i < s.size() && space(i)) ++i;
      std::string num;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) num += s[i++];
      if (num.empty()) throw ParseError(ErrorKind::Parse, "expected a variable number after '$'", i);
      while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;  // binder type suffix
      out.push_back({Token::Kind::Var, num, start});
    } else {
      const std::size_t start = i;
      while (i < s.size() && !space(i) && s[i] != '(' && s[i] != ')' && s[i] != ':' && s[i] != '$') ++i;
      out.push_back({Token::Kind::Word, std::string(s.substr(start, i - start)), start});
    }
  }
  out.push_back({Token::Kind::End, {}, s.size()});
  return out;
}

class LambdaParser {
 public:
  explicit LambdaParser(std::vector<Token> toks) : t_(std::move(toks)) {}

  LambdaTerm parse() {
    auto term = expr();
    if (peek().kind != Token::Kind::End) fail("unexpected input after the expression");
    if (term.kind != LambdaTerm::Kind::Lambda) throw ParseError(ErrorKind::Parse, "root must be a _lambda", 0);
    return term;
  }

 private:
  const Token& peek() const { return t_[i_]; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ErrorKind::Parse, msg, peek().offset);
  }
  void expect(Token::Kind k, const char* what) {
    if (peek().kind == Token::Kind::End) fail(std::string("unbalanced input: expected ") + what + " at end");
    if (peek().kind != k) fail(std::string("expected ") + what);
    ++i_;
  }

  LambdaTerm expr() {
    expect(Token::Kind::Open, "'('");
    if (peek().kind != Token::Kind::Word) fail("expected a predicate name");
    const std::string head = t_[i_++].text;
    LambdaTerm out;
    if (head == "_lambda") {
      if (peek().kind != Token::Kind::Var) fail("expected the bound variable");
      out.kind = LambdaTerm::Kind::Lambda;
      out.name = t_[i_++].text;
      out.args.push_back(expr());
    } else {
      out.kind = head == "_and" ? LambdaTerm::Kind::And : head == "_or" ? LambdaTerm::Kind::Or : LambdaTerm::Kind::Pred;
      out.name = head;
      while (peek().kind != Token::Kind::Close) {
        if (peek().kind == Token::Kind::End) fail("unbalanced input: expected ')' at end");
        out.args.push_back(arg());
      }
    }
    expect(Token::Kind::Close, "')'");
    return out;
  }

  LambdaTerm arg() {
    switch (peek().kind) {
      case Token::Kind::Open: return expr();
      case Token::Kind::Var: return {LambdaTerm::Kind::Var, t_[i_++].text, {}, {}};
      case Token::Kind::Word: {
        LambdaTerm c{LambdaTerm::Kind::Const, t_[i_++].text, {}, {}};
        if (peek().kind == Token::Kind::Colon) {
          ++i_;
          if (peek().kind != Token::Kind::Word) fail("expected a sort after ':'");
          c.sort = t_[i_++].text;
        }
        return c;
      }
      default: fail("unexpected token");
    }
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
};

std::string strip(const std::string& pred) { return pred.size() > 1 && pred[0] == '_' ? pred.substr(1) : pred; }

class AtisConverter {
 public:
  AtisConverter(const kg::KnowledgeGraph& kg, const AtisTable& table) : kg_(kg), table_(table) {}

  blocks::BlockSequence run(const LambdaTerm& root) {
    var_ = root.name;
    const auto& body = root.args.at(0);
    std::vector<const LambdaTerm*> conj;
    if (body.kind == LambdaTerm::Kind::And)
      for (const auto& a : body.args) conj.push_back(&a);
    else
      conj.push_back(&body);

    const LambdaTerm* head = nullptr;
    for (const auto* c : conj) {
      if (c->kind == LambdaTerm::Kind::Pred && on_var(*c, 1) && table_.type_of(c->name)) {
        head = c;
        type_ = *table_.type_of(c->name);
        break;
      }
    }
    if (!head) throw Error(ErrorKind::Conversion, "unsupported shape: lambda without a type predicate");

    blocks::BlockSequence out{blocks::EntityBlock{type_, std::nullopt}};
    for (const auto* c : conj) {
      if (c == head) continue;
      if (c->kind == LambdaTerm::Kind::Or) {
        std::vector<blocks::BlockSequence> pieces;
        for (const auto& a : c->args) pieces.push_back(constraint(a));
        out.push_back(blocks::JoinBlock{"union", std::vector<std::string>(pieces.size(), type_)});
        for (const auto& p : pieces) out.insert(out.end(), p.begin(), p.end());
        continue;
      }
      if (c->kind == LambdaTerm::Kind::Pred && on_var(*c, 1) && table_.type_of(c->name) &&
          *table_.type_of(c->name) == type_)
        continue;
      auto p = constraint(*c);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

 private:
  bool on_var(const LambdaTerm& p, std::size_t arity) const {
    return p.args.size() == arity && p.args[0].kind == LambdaTerm::Kind::Var && p.args[0].name == var_;
  }

  blocks::BlockSequence constraint(const LambdaTerm& p) {
    using namespace blocks;
    if (p.kind != LambdaTerm::Kind::Pred || !(on_var(p, 1) || on_var(p, 2)))
      throw Error(ErrorKind::Conversion, "unsupported shape: " + (p.name.empty() ? std::string("term") : p.name));
    const std::string name = strip(p.name);
    if (p.args.size() == 1) {
      if (kg_.attribute_kind(name, type_) != kg::LiteralKind::Boolean)
        throw Error(ErrorKind::Conversion, "unmapped predicate '" + p.name + "'");
      return {EntityBlock{type_, Constraint{name, BlockValue::number("1")}}};
    }
    const auto& c = p.args[1];
    if (c.kind != LambdaTerm::Kind::Const) throw Error(ErrorKind::Conversion, "unsupported shape: " + p.name);
    const auto* sort = table_.sort(c.sort);
    if (!sort) throw Error(ErrorKind::Conversion, "unmapped sort '" + c.sort + "' in " + p.name);
    if (sort->entity) {
      if (!kg_.is_entity_relation(name)) throw Error(ErrorKind::Conversion, "unmapped predicate '" + p.name + "'");
      return {RelationBlock{type_, name, sort->target},
              EntityBlock{sort->target, Constraint{"id", BlockValue::text(text::fold(c.name))}}};
    }
    auto kind = kg_.attribute_kind(name, type_);
    if (!kind) throw Error(ErrorKind::Conversion, "unmapped predicate '" + p.name + "'");
    std::string value = text::fold(c.name);
    if (sort->target == "pad2" && value.size() == 1 && std::isdigit(static_cast<unsigned char>(value[0])))
      value = "0" + value;
    return {EntityBlock{type_, Constraint{name, kg::is_numeric(*kind) ? BlockValue::number(value)
                                                                        : BlockValue::text(value)}}};
  }

  const kg::KnowledgeGraph& kg_;
  const AtisTable& table_;
  std::string var_;
  std::string type_;
};

}  // namespace

LambdaTerm parse_atis(std::string_view text) { return LambdaParser(tokenize(text)).parse(); }

AtisTable AtisTable::parse(std::string_view content) {
  AtisTable out;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(content, '\n')) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto f = text::split(line, '\t');
    if (f[0] == "atis-type" && f.size() == 3) {
      out.types_[f[1]] = text::fold(f[2]);
    } else if (f[0] == "atis-sort" && f.size() == 4 && (f[2] == "entity" || f[2] == "literal")) {
      out.sorts_[f[1]] = {f[2] == "entity", text::fold(f[3])};
    } else {
      throw ParseError(ErrorKind::Parse, "expected atis-type or atis-sort record", 0, lineno);
    }
  }
  return out;
}

AtisTable AtisTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string* AtisTable::type_of(std::string_view pred) const {
  auto it = types_.find(pred);
  return it == types_.end() ? nullptr : &it->second;
}

const AtisSort* AtisTable::sort(std::string_view name) const {
  auto it = sorts_.find(name);
  return it == sorts_.end() ? nullptr : &it->second;
}

blocks::BlockSequence atis_to_blocks(const LambdaTerm& term, const kg::KnowledgeGraph& kg, const AtisTable& table) {
  if (term.kind != LambdaTerm::Kind::Lambda) throw Error(ErrorKind::Conversion, "unsupported shape: root is not a lambda");
  return AtisConverter(kg, table).run(term);
}

}  // namespace spedn::logic
