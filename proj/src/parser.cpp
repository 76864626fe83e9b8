#include "dynext/parser.hpp"

#include <cctype>
#include <optional>

namespace dynext {

namespace {

struct Parser {
  const std::string& s;
  size_t i = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
  }

  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }

  Expr parse_sum() {
    Expr e = parse_term();
    while (true) {
      char c = peek();
      if (c == '+') {
        ++i;
        e = add(e, parse_term());
      } else if (c == '-') {
        ++i;
        e = sub(e, parse_term());
      } else {
        return e;
      }
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    while (true) {
      char c = peek();
      if (c == '*') {
        ++i;
        e = mul(e, parse_factor());
      } else if (c == '/') {
        ++i;
        Expr d = parse_factor();
        if (is_zero_expr(d)) throw ParseError("division by zero", i);
        e = div(e, d);
      } else {
        return e;
      }
    }
  }

  Expr parse_factor() {
    char c = peek();
    if (c == '-') {
      ++i;
      return neg(parse_factor());
    }
    if (c == '+') {
      ++i;
      return parse_factor();
    }
    Expr base = parse_primary();
    if (peek() == '^') {
      ++i;
      Expr e = parse_factor();
      if (e->kind != ExprKind::Rational || boost::multiprecision::denominator(e->value) != 1)
        throw ParseError("exponent must be an integer", i);
      Q v = e->value;
      if (v > Q(1000000) || v < Q(-1000000)) throw ParseError("exponent out of range", i);
      long long n = boost::multiprecision::numerator(v).convert_to<long long>();
      if (n < 0 && is_zero_expr(base)) throw ParseError("division by zero", i);
      return power(base, n);
    }
    return base;
  }

  Expr parse_primary() {
    skip_ws();
    if (i >= s.size()) throw ParseError("unexpected end of expression", i);
    char c = s[i];
    if (c == '(') {
      ++i;
      Expr e = parse_sum();
      if (!eat(')')) throw ParseError("expected ')'", i);
      return e;
    }
    if (std::isdigit((unsigned char)c)) {
      size_t start = i;
      while (i < s.size() && std::isdigit((unsigned char)s[i])) ++i;
      return rat(Q(s.substr(start, i - start)));
    }
    if (std::isalpha((unsigned char)c)) {
      size_t start = i;
      while (i < s.size() && (std::isalnum((unsigned char)s[i]) || s[i] == '_')) ++i;
      std::string name = s.substr(start, i - start);
      std::optional<FuncKind> f;
      if (name == "sin") f = FuncKind::Sin;
      else if (name == "cos") f = FuncKind::Cos;
      else if (name == "tan") f = FuncKind::Tan;
      else if (name == "cot") f = FuncKind::Cot;
      else if (name == "exp") f = FuncKind::Exp;
      else if (name == "ln") f = FuncKind::Ln;
      if (f) {
        if (!eat('(')) throw ParseError("expected '(' after " + name, i);
        Expr a = parse_sum();
        if (!eat(')')) throw ParseError("expected ')'", i);
        return apply_func(*f, a);
      }
      if (peek() == '(') throw ParseError("unknown function: " + name, i);
      return var(name);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i);
  }
};

}  // namespace

Expr parse_expr(const std::string& text) {
  Parser p(text);
  Expr e = p.parse_sum();
  p.skip_ws();
  if (p.i != text.size()) throw ParseError("trailing input", p.i);
  return e;
}

}  // namespace dynext
