#include <cctype>

#include "spedn/blocks/block.hpp"
#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::blocks {

namespace {

struct Arg {
  enum class Kind { Ident, Slot, Value };
  Kind kind;
  std::string text;
  BlockValue value;
  std::size_t offset;
};

class BlockParser {
 public:
  explicit BlockParser(std::string_view src) : src_(src) {}

  BlockSequence parse_all() {
    BlockSequence out;
    skip_ws();
    if (at_end()) fail("expected a semantic block");
    while (!at_end()) {
      out.push_back(parse_one());
      skip_ws();
    }
    return out;
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(ErrorKind::Parse, msg, pos_); }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string ident() {
    if (!ident_start(peek())) fail("expected identifier");
    std::size_t b = pos_;
    while (!at_end() && ident_char(src_[pos_])) ++pos_;
    return text::fold(src_.substr(b, pos_ - b));
  }

  Arg arg() {
    skip_ws();
    Arg a{Arg::Kind::Ident, {}, {}, pos_};
    char c = peek();
    if (c == ':') {
      ++pos_;
      skip_ws();
      a.kind = Arg::Kind::Slot;
      a.text = ident();
    } else if (c == '\'') {
      std::size_t close = src_.find('\'', pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated quoted value");
      a.kind = Arg::Kind::Value;
      a.value = BlockValue::text(text::fold(src_.substr(pos_ + 1, close - pos_ - 1)));
      pos_ = close + 1;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
      std::size_t b = pos_;
      if (c == '-') ++pos_;
      std::size_t digits = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (pos_ == digits) fail("expected digits");
      if (peek() == '.') {
        ++pos_;
        std::size_t frac = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (pos_ == frac) fail("expected digits after '.'");
      }
      a.kind = Arg::Kind::Value;
      a.value = BlockValue::number(std::string(src_.substr(b, pos_ - b)));
    } else {
      a.text = ident();
    }
    skip_ws();
    return a;
  }

  SemanticBlock parse_one() {
    const std::size_t start = pos_;
    if (!ident_start(peek())) fail("expected a semantic block");
    std::string name = ident();
    auto pattern = pattern_from(name);
    if (!pattern) throw ParseError(ErrorKind::Parse, "unknown block pattern '" + name + "'", start);
    skip_ws();
    if (peek() != '(') fail("expected '(' after " + name);
    ++pos_;
    std::vector<Arg> args;
    skip_ws();
    if (peek() == ')') fail("expected argument");
    while (true) {
      args.push_back(arg());
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ')') {
        ++pos_;
        break;
      }
      fail(at_end() ? "unbalanced parenthesis" : "expected ',' or ')'");
    }
    return build(*pattern, args, start);
  }

  static void arity(Pattern p, std::size_t got, const char* expected, std::size_t at) {
    throw ParseError(ErrorKind::Arity,
                     std::string(pattern_name(p)) + " expects " + expected + " arguments, got " +
                         std::to_string(got),
                     at);
  }

  static const Arg& want(const Arg& a, Arg::Kind k, const char* what) {
    if (a.kind != k) throw ParseError(ErrorKind::Parse, std::string("expected ") + what, a.offset);
    return a;
  }

  static SemanticBlock build(Pattern p, const std::vector<Arg>& args, std::size_t at) {
    using K = Arg::Kind;
    switch (p) {
      case Pattern::Entity: {
        if (args.size() != 1 && args.size() != 3) arity(p, args.size(), "1 or 3", at);
        EntityBlock b{want(args[0], K::Ident, "type name").text, std::nullopt};
        if (args.size() == 3)
          b.constraint = Constraint{want(args[1], K::Ident, "attribute name").text,
                                    want(args[2], K::Value, "quoted or numeric value").value};
        return b;
      }
      case Pattern::Relation:
        if (args.size() != 3) arity(p, args.size(), "3", at);
        return RelationBlock{want(args[0], K::Ident, "type name").text,
                             want(args[1], K::Ident, "relation name").text,
                             want(args[2], K::Slot, "':type' slot").text};
      case Pattern::Literal:
        if (args.size() != 2) arity(p, args.size(), "2", at);
        return LiteralBlock{want(args[0], K::Ident, "attribute name").text,
                            want(args[1], K::Slot, "':type' slot").text};
      case Pattern::Ordinal:
        if (args.size() != 2) arity(p, args.size(), "2", at);
        return OrdinalBlock{want(args[0], K::Ident, "ordinal name").text,
                            want(args[1], K::Slot, "':type' slot").text};
      case Pattern::Aggr: {
        if (args.size() != 2) arity(p, args.size(), "2", at);
        const auto& op = want(args[0], K::Ident, "aggregate operator");
        if (op.text != "count" && op.text != "average")
          throw ParseError(ErrorKind::Parse, "aggregate operator must be count or average", op.offset);
        return AggrBlock{op.text, want(args[1], K::Slot, "':type' slot").text};
      }
      case Pattern::Join: {
        if (args.size() < 3) arity(p, args.size(), "at least 3", at);
        const auto& op = want(args[0], K::Ident, "set operator");
        if (op.text != "intersection" && op.text != "union" && op.text != "exclude")
          throw ParseError(ErrorKind::Parse, "set operator must be intersection, union or exclude",
                           op.offset);
        JoinBlock b{op.text, {}};
        for (std::size_t i = 1; i < args.size(); ++i) b.types.push_back(want(args[i], K::Slot, "':type' slot").text);
        return b;
      }
    }
    throw ParseError(ErrorKind::Parse, "unreachable", at);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string print_value(const BlockValue& v) {
  return v.form == BlockValue::Form::Text ? "'" + v.lexeme + "'" : v.lexeme;
}

}  // namespace

BlockSequence parse_blocks(std::string_view text) { return BlockParser(text).parse_all(); }

SemanticBlock parse_block(std::string_view text) {
  auto seq = parse_blocks(text);
  if (seq.size() != 1) throw ParseError(ErrorKind::Parse, "expected exactly one block", 0);
  return seq.front();
}

std::string print_block(const SemanticBlock& b) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EntityBlock>) {
          if (!v.constraint) return "entity(" + v.type + ")";
          return "entity(" + v.type + ", " + v.constraint->attr + ", " + print_value(v.constraint->value) + ")";
        } else if constexpr (std::is_same_v<T, RelationBlock>) {
          return "relation(" + v.out_type + ", " + v.rel + ", :" + v.in_type + ")";
        } else if constexpr (std::is_same_v<T, LiteralBlock>) {
          return "literal(" + v.attr + ", :" + v.type + ")";
        } else if constexpr (std::is_same_v<T, OrdinalBlock>) {
          return "ordinal(" + v.op + ", :" + v.type + ")";
        } else if constexpr (std::is_same_v<T, AggrBlock>) {
          return "aggr(" + v.op + ", :" + v.type + ")";
        } else {
          std::string s = "join(" + v.op;
          for (const auto& t : v.types) s += ", :" + t;
          return s + ")";
        }
      },
      b);
}

std::string print_blocks(const BlockSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += print_block(seq[i]);
  }
  return out;
}

}  // namespace spedn::blocks
