#include "credsql/edl/expr.hpp"

#include <set>

#include "credsql/detail/strings.hpp"

namespace credsql::edl {

using detail::iequals;

// ---------------------------------------------------------------------------
// Factories

Expr Expr::column(std::string name, std::string qualifier) {
  Expr e;
  e.kind = ExprKind::Column;
  e.text = std::move(name);
  e.qualifier = std::move(qualifier);
  return e;
}

Expr Expr::number(std::string lexeme) {
  Expr e;
  e.kind = ExprKind::Number;
  e.text = std::move(lexeme);
  return e;
}

Expr Expr::string(std::string value) {
  Expr e;
  e.kind = ExprKind::String;
  e.text = std::move(value);
  return e;
}

Expr Expr::null() { return Expr{}; }

Expr Expr::star() {
  Expr e;
  e.kind = ExprKind::Star;
  return e;
}

Expr Expr::call(std::string name, std::vector<Expr> args, bool distinct) {
  Expr e;
  e.kind = ExprKind::Call;
  e.text = std::move(name);
  e.args = std::move(args);
  e.distinct = distinct;
  return e;
}

namespace {
Expr make(ExprKind kind, Op op, std::vector<Expr> args, bool negated = false) {
  Expr e;
  e.kind = kind;
  e.op = op;
  e.args = std::move(args);
  e.negated = negated;
  return e;
}
}  // namespace

Expr Expr::binary(Op op, Expr lhs, Expr rhs) { return make(ExprKind::Binary, op, {std::move(lhs), std::move(rhs)}); }
Expr Expr::compare(Op op, Expr lhs, Expr rhs) { return make(ExprKind::Compare, op, {std::move(lhs), std::move(rhs)}); }
Expr Expr::logical(Op op, Expr lhs, Expr rhs) { return make(ExprKind::Logical, op, {std::move(lhs), std::move(rhs)}); }
Expr Expr::negate(Expr operand) { return make(ExprKind::Not, Op::None, {std::move(operand)}); }

Expr Expr::in_step(Expr lhs, int step, bool negated) {
  Expr e = make(ExprKind::In, Op::None, {std::move(lhs)}, negated);
  e.step = step;
  return e;
}

Expr Expr::in_list(Expr lhs, std::vector<Expr> items, bool negated) {
  std::vector<Expr> args{std::move(lhs)};
  for (auto& i : items) args.push_back(std::move(i));
  return make(ExprKind::In, Op::None, std::move(args), negated);
}

Expr Expr::is_null(Expr operand, bool negated) { return make(ExprKind::IsNull, Op::None, {std::move(operand)}, negated); }

Expr Expr::between(Expr operand, Expr low, Expr high, bool negated) {
  return make(ExprKind::Between, Op::None, {std::move(operand), std::move(low), std::move(high)}, negated);
}

Expr Expr::like(Expr operand, Expr pattern, bool negated) {
  return make(ExprKind::Like, Op::None, {std::move(operand), std::move(pattern)}, negated);
}

Expr Expr::step_ref(int step) {
  Expr e;
  e.kind = ExprKind::StepRef;
  e.step = step;
  return e;
}

std::vector<int> step_refs(const Expr& e) {
  std::vector<int> out;
  walk(e, [&](const Expr& x) {
    if ((x.kind == ExprKind::StepRef || x.kind == ExprKind::In) && x.step > 0) out.push_back(x.step);
  });
  return out;
}

bool is_reserved_word(std::string_view word) {
  static const std::set<std::string, std::less<>> words = {
      "and", "or", "not", "is", "in", "like", "between", "null", "the", "equals", "equal", "to",
      "greater", "less", "than", "more", "fewer", "at", "least", "most", "does", "exceeds", "of",
      "table", "from", "result", "results", "distinct"};
  return words.contains(detail::to_lower(word));
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Word, Bracket, Number, String, Hash, Sym, End };

struct Token {
  Tok kind;
  std::string text;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (detail::is_space(c)) {
      ++i;
    } else if (c == '\'' || c == '"') {
      std::string v;
      ++i;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == c && i + 1 < s.size() && s[i + 1] == c) {
          v += c;
          i += 2;
        } else if (s[i] == c) {
          ++i;
          closed = true;
          break;
        } else {
          v += s[i++];
        }
      }
      if (!closed) throw ExprSyntaxError{"unterminated string literal"};
      out.push_back({Tok::String, std::move(v)});
    } else if (c == '[') {
      int depth = 0;
      std::string v;
      std::size_t j = i;
      for (; j < s.size(); ++j) {
        if (s[j] == '[') {
          if (depth++ > 0) v += s[j];
        } else if (s[j] == ']') {
          if (--depth == 0) break;
          v += s[j];
        } else {
          v += s[j];
        }
      }
      if (j >= s.size()) throw ExprSyntaxError{"unterminated '['"};
      i = j + 1;
      out.push_back({Tok::Bracket, std::string(detail::trim(v))});
    } else if (c == '#') {
      std::size_t j = i + 1;
      while (j < s.size() && detail::is_space(s[j])) ++j;
      std::string digits;
      while (j < s.size() && detail::is_digit(s[j])) digits += s[j++];
      if (digits.empty()) throw ExprSyntaxError{"'#' not followed by a step number"};
      out.push_back({Tok::Hash, std::move(digits)});
      i = j;
    } else if (detail::is_digit(c) || (c == '.' && i + 1 < s.size() && detail::is_digit(s[i + 1]))) {
      std::string v;
      while (i < s.size() && (detail::is_digit(s[i]) || s[i] == '.')) v += s[i++];
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && detail::is_digit(s[j])) {
          v += s.substr(i, j - i);
          i = j;
          while (i < s.size() && detail::is_digit(s[i])) v += s[i++];
        }
      }
      out.push_back({Tok::Number, std::move(v)});
    } else if (detail::is_alpha(c) || c == '_') {
      std::string v;
      while (i < s.size() && (detail::is_alnum(s[i]) || s[i] == '_')) v += s[i++];
      out.push_back({Tok::Word, std::move(v)});
    } else {
      static const char* two[] = {"<=", ">=", "<>", "!=", "=="};
      std::string sym(1, c);
      if (i + 1 < s.size()) {
        for (const char* t : two) {
          if (s.substr(i, 2) == t) sym = t;
        }
      }
      static const std::string singles = "(),.*+-/=<>%";
      if (sym.size() == 1 && singles.find(c) == std::string::npos) {
        throw ExprSyntaxError{std::string("unexpected character '") + c + "'"};
      }
      out.push_back({Tok::Sym, sym});
      i += sym.size();
    }
  }
  out.push_back({Tok::End, ""});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Expr parse_all() {
    Expr e = parse_or();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  void advance() {
    if (pos_ < toks_.size() - 1) ++pos_;
  }
  bool word_at(std::size_t ahead, std::string_view w) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::Word && iequals(t.text, w);
  }
  bool sym_at(std::size_t ahead, std::string_view s) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::Sym && t.text == s;
  }
  bool accept_words(std::initializer_list<std::string_view> ws) {
    std::size_t k = 0;
    for (auto w : ws) {
      if (!word_at(k++, w)) return false;
    }
    pos_ += ws.size();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ExprSyntaxError{msg}; }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (word_at(0, "or")) {
      advance();
      lhs = Expr::logical(Op::Or, std::move(lhs), parse_and());
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (word_at(0, "and")) {
      advance();
      lhs = Expr::logical(Op::And, std::move(lhs), parse_not());
    }
    return lhs;
  }

  Expr parse_not() {
    if (word_at(0, "not") && !word_at(1, "in") && !word_at(1, "like") && !word_at(1, "between")) {
      advance();
      return Expr::negate(parse_not());
    }
    return parse_predicate();
  }

  // Optional "than or equal to" tail after "greater"/"less".
  Op comparison_tail(Op strict, Op inclusive) {
    if (!accept_words({"than"})) fail("expected 'than'");
    if (accept_words({"or", "equal", "to"})) return inclusive;
    return strict;
  }

  std::optional<Op> word_comparison() {
    if (accept_words({"equals"}) || accept_words({"equal", "to"})) return Op::Eq;
    if (accept_words({"does", "not", "equal"})) return Op::Ne;
    if (accept_words({"exceeds"})) return Op::Gt;
    if (accept_words({"greater"})) return comparison_tail(Op::Gt, Op::Ge);
    if (accept_words({"more", "than"})) return Op::Gt;
    if (accept_words({"less"})) return comparison_tail(Op::Lt, Op::Le);
    if (accept_words({"fewer", "than"})) return Op::Lt;
    if (accept_words({"at", "least"})) return Op::Ge;
    if (accept_words({"at", "most"})) return Op::Le;
    return std::nullopt;
  }

  std::optional<Op> symbol_comparison() {
    const auto& t = peek();
    if (t.kind != Tok::Sym) return std::nullopt;
    std::optional<Op> op;
    if (t.text == "=" || t.text == "==") op = Op::Eq;
    else if (t.text == "!=" || t.text == "<>") op = Op::Ne;
    else if (t.text == "<") op = Op::Lt;
    else if (t.text == "<=") op = Op::Le;
    else if (t.text == ">") op = Op::Gt;
    else if (t.text == ">=") op = Op::Ge;
    if (op) advance();
    return op;
  }

  Expr parse_in_rhs(Expr lhs, bool negated) {
    if (sym_at(0, "(")) {
      advance();
      std::vector<Expr> items;
      items.push_back(parse_or());
      while (sym_at(0, ",")) {
        advance();
        items.push_back(parse_or());
      }
      if (!sym_at(0, ")")) fail("expected ')' closing IN list");
      advance();
      return Expr::in_list(std::move(lhs), std::move(items), negated);
    }
    const int step = parse_step_phrase();
    if (step == 0) fail("IN needs a parenthesized list or 'the result of #n'");
    return Expr::in_step(std::move(lhs), step, negated);
  }

  // [the] result(s) of #n | #n. Returns 0 when not at such a phrase.
  int parse_step_phrase() {
    std::size_t k = 0;
    if (word_at(k, "the")) ++k;
    if (word_at(k, "result") || word_at(k, "results")) {
      ++k;
      if (word_at(k, "of") || word_at(k, "in")) ++k;
      else if (word_at(k, "from")) ++k;
    } else if (k > 0) {
      return 0;
    }
    if (peek(k).kind != Tok::Hash) return 0;
    const int step = std::stoi(peek(k).text);
    pos_ += k + 1;
    return step;
  }

  Expr parse_predicate() {
    Expr lhs = parse_additive();
    if (auto op = symbol_comparison()) return Expr::compare(*op, std::move(lhs), parse_additive());
    if (auto op = word_comparison()) return Expr::compare(*op, std::move(lhs), parse_additive());

    bool negated = false;
    if (word_at(0, "is")) {
      advance();
      if (word_at(0, "not") && !word_at(1, "equal")) {
        advance();
        negated = true;
      }
      if (accept_words({"null"})) return Expr::is_null(std::move(lhs), negated);
      if (accept_words({"in"})) return parse_in_rhs(std::move(lhs), negated);
      if (accept_words({"like"})) return Expr::like(std::move(lhs), parse_additive(), negated);
      if (accept_words({"between"})) return parse_between(std::move(lhs), negated);
      if (accept_words({"not", "equal", "to"})) return Expr::compare(Op::Ne, std::move(lhs), parse_additive());
      if (!negated) {
        if (auto op = word_comparison()) return Expr::compare(*op, std::move(lhs), parse_additive());
      }
      return Expr::compare(negated ? Op::Ne : Op::Eq, std::move(lhs), parse_additive());
    }
    if (word_at(0, "not") && (word_at(1, "in") || word_at(1, "like") || word_at(1, "between"))) {
      advance();
      negated = true;
    }
    if (word_at(0, "in") && !word_at(1, "table")) {
      advance();
      return parse_in_rhs(std::move(lhs), negated);
    }
    if (accept_words({"like"})) return Expr::like(std::move(lhs), parse_additive(), negated);
    if (accept_words({"between"})) return parse_between(std::move(lhs), negated);
    if (negated) fail("expected IN, LIKE or BETWEEN after NOT");
    return lhs;
  }

  Expr parse_between(Expr lhs, bool negated) {
    Expr low = parse_additive();
    if (!accept_words({"and"})) fail("expected AND in BETWEEN");
    Expr high = parse_additive();
    return Expr::between(std::move(lhs), std::move(low), std::move(high), negated);
  }

  Expr parse_additive() {
    Expr lhs = parse_multiplicative();
    while (sym_at(0, "+") || sym_at(0, "-")) {
      const Op op = peek().text == "+" ? Op::Add : Op::Sub;
      advance();
      lhs = Expr::binary(op, std::move(lhs), parse_multiplicative());
    }
    return lhs;
  }

  Expr parse_multiplicative() {
    Expr lhs = parse_unary();
    while (sym_at(0, "*") || sym_at(0, "/")) {
      const Op op = peek().text == "*" ? Op::Mul : Op::Div;
      advance();
      lhs = Expr::binary(op, std::move(lhs), parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    if (sym_at(0, "-") && peek(1).kind == Tok::Number) {
      advance();
      Expr n = Expr::number("-" + peek().text);
      advance();
      return n;
    }
    return parse_primary();
  }

  // Splits "[T2.PetType]" into qualifier and name when both parts are plain.
  static Expr column_from_bracket(const std::string& content) {
    const auto dot = content.find('.');
    if (dot != std::string::npos) {
      auto q = content.substr(0, dot);
      auto n = content.substr(dot + 1);
      if (detail::is_simple_identifier(q) && (detail::is_simple_identifier(n) || n == "*")) {
        return Expr::column(n, q);
      }
    }
    return Expr::column(content);
  }

  Expr parse_column_ref() {
    const Token t = peek();
    advance();
    Expr col = t.kind == Tok::Bracket ? column_from_bracket(t.text) : Expr::column(t.text);
    if (sym_at(0, ".") && col.qualifier.empty() &&
        (peek(1).kind == Tok::Bracket || peek(1).kind == Tok::Word || sym_at(1, "*"))) {
      advance();
      const Token n = peek();
      advance();
      col = Expr::column(n.kind == Tok::Sym ? "*" : n.text, col.text);
    }
    // the [PetType] in table T2
    if ((word_at(0, "in") || word_at(0, "of") || word_at(0, "from")) && word_at(1, "table") &&
        (peek(2).kind == Tok::Word || peek(2).kind == Tok::Bracket) && col.qualifier.empty()) {
      col.qualifier = peek(2).text;
      pos_ += 3;
    }
    return col;
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        Expr e = Expr::number(t.text);
        advance();
        return e;
      }
      case Tok::String: {
        Expr e = Expr::string(t.text);
        advance();
        return e;
      }
      case Tok::Hash: {
        Expr e = Expr::step_ref(std::stoi(t.text));
        advance();
        return e;
      }
      case Tok::Bracket:
        return parse_column_ref();
      case Tok::Sym:
        if (t.text == "(") {
          advance();
          Expr e = parse_or();
          if (!sym_at(0, ")")) fail("expected ')'");
          advance();
          return e;
        }
        if (t.text == "*") {
          advance();
          return Expr::star();
        }
        fail("unexpected '" + t.text + "'");
      case Tok::End:
        fail("unexpected end of expression");
      case Tok::Word:
        break;
    }
    if (iequals(t.text, "null")) {
      advance();
      return Expr::null();
    }
    if (word_at(0, "the") || word_at(0, "result") || word_at(0, "results")) {
      if (const int step = parse_step_phrase()) return Expr::step_ref(step);
      if (word_at(0, "the")) {
        advance();
        return parse_primary();
      }
    }
    if (sym_at(1, "(")) {
      std::string name = t.text;
      advance();
      advance();
      bool distinct = false;
      std::vector<Expr> args;
      if (accept_words({"distinct"})) distinct = true;
      if (!sym_at(0, ")")) {
        args.push_back(parse_or());
        while (sym_at(0, ",")) {
          advance();
          args.push_back(parse_or());
        }
      }
      if (!sym_at(0, ")")) fail("expected ')' closing call to " + name);
      advance();
      return Expr::call(std::move(name), std::move(args), distinct);
    }
    if (is_reserved_word(t.text)) fail("unexpected keyword '" + t.text + "'");
    return parse_column_ref();
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(std::string_view text) {
  if (detail::trim(text).empty()) throw ExprSyntaxError{"empty expression"};
  Parser p(lex(text));
  return p.parse_all();
}

std::optional<Expr> try_parse_expression(std::string_view text, std::string* error) {
  try {
    return parse_expression(text);
  } catch (const ExprSyntaxError& e) {
    if (error) *error = e.message;
    return std::nullopt;
  }
}

Expr parse_column_slot(std::string_view text) {
  const auto trimmed = detail::trim(text);
  if (auto e = try_parse_expression(trimmed)) return *e;
  return Expr::column(std::string(trimmed));
}

// ---------------------------------------------------------------------------
// Renderer

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Logical: return e.op == Op::Or ? 1 : 2;
    case ExprKind::Not: return 3;
    case ExprKind::Compare:
    case ExprKind::In:
    case ExprKind::IsNull:
    case ExprKind::Between:
    case ExprKind::Like: return 4;
    case ExprKind::Binary: return (e.op == Op::Add || e.op == Op::Sub) ? 5 : 6;
    default: return 7;
  }
}

bool needs_bracket(std::string_view part) {
  return !detail::is_simple_identifier(part) || is_reserved_word(part);
}

std::string render_column(const Expr& e) {
  if (e.qualifier.empty()) return needs_bracket(e.text) ? "[" + e.text + "]" : e.text;
  const bool plain_name = !needs_bracket(e.text) || e.text == "*";
  if (!needs_bracket(e.qualifier) && plain_name) return e.qualifier + "." + e.text;
  if (detail::is_simple_identifier(e.qualifier) && (detail::is_simple_identifier(e.text) || e.text == "*")) {
    return "[" + e.qualifier + "." + e.text + "]";
  }
  return "[" + e.qualifier + "].[" + e.text + "]";
}

std::string quote(const std::string& v) {
  std::string out = "'";
  for (char c : v) {
    out += c;
    if (c == '\'') out += '\'';
  }
  return out + "'";
}

std::string render(const Expr& e);

std::string child(const Expr& e, int min_prec) {
  const auto s = render(e);
  return precedence(e) < min_prec ? "(" + s + ")" : s;
}

const char* compare_words(Op op) {
  switch (op) {
    case Op::Eq: return "equals";
    case Op::Ne: return "is not equal to";
    case Op::Lt: return "is less than";
    case Op::Le: return "is less than or equal to";
    case Op::Gt: return "is greater than";
    case Op::Ge: return "is greater than or equal to";
    default: return "?";
  }
}

std::string render(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Column: return render_column(e);
    case ExprKind::Number: return e.text;
    case ExprKind::String: return quote(e.text);
    case ExprKind::Null: return "NULL";
    case ExprKind::Star: return "*";
    case ExprKind::StepRef: return "the result of #" + std::to_string(e.step);
    case ExprKind::Call: {
      std::string out = e.text + "(";
      if (e.distinct) out += "DISTINCT ";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += render(e.args[i]);
      }
      return out + ")";
    }
    case ExprKind::Binary: {
      const int p = precedence(e);
      const char* sym = e.op == Op::Add ? " + " : e.op == Op::Sub ? " - " : e.op == Op::Mul ? " * " : " / ";
      return child(e.args[0], p) + sym + child(e.args[1], p + 1);
    }
    case ExprKind::Compare:
      return child(e.args[0], 5) + " " + compare_words(e.op) + " " + child(e.args[1], 5);
    case ExprKind::Logical: {
      const int p = precedence(e);
      return child(e.args[0], p) + (e.op == Op::And ? " and " : " or ") + child(e.args[1], p + 1);
    }
    case ExprKind::Not: return "not (" + render(e.args[0]) + ")";
    case ExprKind::In: {
      std::string out = child(e.args[0], 5) + (e.negated ? " is not in " : " is in ");
      if (e.step > 0) return out + "the result of #" + std::to_string(e.step);
      out += "(";
      for (std::size_t i = 1; i < e.args.size(); ++i) {
        if (i > 1) out += ", ";
        out += render(e.args[i]);
      }
      return out + ")";
    }
    case ExprKind::IsNull: return child(e.args[0], 5) + (e.negated ? " is not null" : " is null");
    case ExprKind::Between:
      return child(e.args[0], 5) + (e.negated ? " is not between " : " is between ") + child(e.args[1], 5) +
             " and " + child(e.args[2], 5);
    case ExprKind::Like:
      return child(e.args[0], 5) + (e.negated ? " is not like " : " is like ") + child(e.args[1], 5);
  }
  return {};
}

}  // namespace

std::string render_expression(const Expr& e) { return render(e); }

std::string render_column_slot(const Expr& e) {
  if (e.kind == ExprKind::Column && !e.qualifier.empty() && detail::is_simple_identifier(e.qualifier) &&
      detail::is_simple_identifier(e.text)) {
    return e.qualifier + "." + e.text;
  }
  if (e.kind == ExprKind::Column && e.qualifier.empty() && detail::is_simple_identifier(e.text) &&
      !is_reserved_word(e.text)) {
    return e.text;
  }
  return render(e);
}

}  // namespace credsql::edl
