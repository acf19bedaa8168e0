#pragma once

// Arithmetic expressions in the chart variables x and y: parsing, printing,
// evaluation and exact symbolic partial derivatives.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace metrise {

enum class Var { x, y };

enum class Func { sin, cos, tan, exp, log, sqrt, atan };

inline const char* func_name(Func f)
{
  switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::tan: return "tan";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sqrt: return "sqrt";
    case Func::atan: return "atan";
  }
  return "?";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::string expected)
      : std::runtime_error("syntax error at byte " + std::to_string(offset) + ": expected " + expected),
        offset_(offset),
        expected_(std::move(expected))
  {
  }

  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class UnknownIdentifierError : public std::runtime_error {
 public:
  UnknownIdentifierError(std::size_t offset, std::string name)
      : std::runtime_error("unknown identifier '" + name + "' at byte " + std::to_string(offset)),
        offset_(offset),
        name_(std::move(name))
  {
  }

  std::size_t offset() const { return offset_; }
  const std::string& name() const { return name_; }

 private:
  std::size_t offset_;
  std::string name_;
};

class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& reason, std::string subexpression, double x, double y)
      : std::runtime_error(reason + " in '" + subexpression + "' at (" + fmt_num(x) + ", " + fmt_num(y) + ")"),
        subexpression_(std::move(subexpression)),
        x_(x),
        y_(y)
  {
  }

  const std::string& subexpression() const { return subexpression_; }
  double x() const { return x_; }
  double y() const { return y_; }

 private:
  static std::string fmt_num(double v)
  {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  std::string subexpression_;
  double x_, y_;
};

class Expr {
 public:
  enum class Kind { number, variable, negate, add, sub, mul, div, pow, call };

  Expr() : Expr(0.0) {}
  Expr(double value) : node_(std::make_shared<Node>(Node{Kind::number, value, Var::x, Func::sin, {}, {}})) {}

  static Expr variable(Var v) { return Expr(std::make_shared<Node>(Node{Kind::variable, 0.0, v, Func::sin, {}, {}})); }
  static Expr x() { return variable(Var::x); }
  static Expr y() { return variable(Var::y); }

  static Expr unary(Kind kind, Expr arg)
  {
    return Expr(std::make_shared<Node>(Node{kind, 0.0, Var::x, Func::sin, std::move(arg.node_), {}}));
  }

  static Expr binary(Kind kind, Expr lhs, Expr rhs)
  {
    return Expr(std::make_shared<Node>(Node{kind, 0.0, Var::x, Func::sin, std::move(lhs.node_), std::move(rhs.node_)}));
  }

  static Expr call(Func f, Expr arg)
  {
    return Expr(std::make_shared<Node>(Node{Kind::call, 0.0, Var::x, f, std::move(arg.node_), {}}));
  }

  Kind kind() const { return node_->kind; }
  double number() const { return node_->value; }
  Var var() const { return node_->var; }
  Func func() const { return node_->func; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }

  bool is_number() const { return kind() == Kind::number; }
  bool is_number(double v) const { return is_number() && number() == v; }

  bool depends_on(Var v) const
  {
    switch (kind()) {
      case Kind::number: return false;
      case Kind::variable: return var() == v;
      case Kind::negate:
      case Kind::call: return lhs().depends_on(v);
      default: return lhs().depends_on(v) || rhs().depends_on(v);
    }
  }

 private:
  struct Node {
    Kind kind;
    double value;
    Var var;
    Func func;
    std::shared_ptr<const Node> lhs, rhs;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

// Builders with light folding of literal 0 and 1. Folding is not a
// simplifier; it only keeps derivative trees from filling up with x*0.

inline Expr operator-(const Expr& a)
{
  if (a.is_number()) return Expr(-a.number());
  if (a.kind() == Expr::Kind::negate) return a.lhs();
  return Expr::unary(Expr::Kind::negate, a);
}

inline Expr operator+(const Expr& a, const Expr& b)
{
  if (a.is_number() && b.is_number()) return Expr(a.number() + b.number());
  if (a.is_number(0.0)) return b;
  if (b.is_number(0.0)) return a;
  return Expr::binary(Expr::Kind::add, a, b);
}

inline Expr operator-(const Expr& a, const Expr& b)
{
  if (a.is_number() && b.is_number()) return Expr(a.number() - b.number());
  if (b.is_number(0.0)) return a;
  if (a.is_number(0.0)) return -b;
  return Expr::binary(Expr::Kind::sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b)
{
  if (a.is_number() && b.is_number()) return Expr(a.number() * b.number());
  if (a.is_number(0.0) || b.is_number(0.0)) return Expr(0.0);
  if (a.is_number(1.0)) return b;
  if (b.is_number(1.0)) return a;
  return Expr::binary(Expr::Kind::mul, a, b);
}

inline Expr operator/(const Expr& a, const Expr& b)
{
  if (b.is_number(1.0)) return a;
  if (a.is_number(0.0) && !b.is_number(0.0)) return Expr(0.0);
  return Expr::binary(Expr::Kind::div, a, b);
}

inline Expr pow(const Expr& a, const Expr& b)
{
  if (b.is_number(1.0)) return a;
  if (b.is_number(0.0)) return Expr(1.0);
  return Expr::binary(Expr::Kind::pow, a, b);
}

inline Expr sin(const Expr& a) { return Expr::call(Func::sin, a); }
inline Expr cos(const Expr& a) { return Expr::call(Func::cos, a); }
inline Expr tan(const Expr& a) { return Expr::call(Func::tan, a); }
inline Expr exp(const Expr& a) { return Expr::call(Func::exp, a); }
inline Expr log(const Expr& a) { return Expr::call(Func::log, a); }
inline Expr sqrt(const Expr& a) { return Expr::call(Func::sqrt, a); }
inline Expr atan(const Expr& a) { return Expr::call(Func::atan, a); }

// ---------------------------------------------------------------------------
// Printing. Output is fully parenthesized and numbers use the shortest
// round-trip representation, so parse(print(e)) evaluates bit-identically.

namespace detail {

inline void print_number(std::string& out, double v)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string_view s(buf, static_cast<std::size_t>(res.ptr - buf));
  if (v < 0 || (v == 0 && std::signbit(v))) {
    out += "(-";
    out += s.substr(1);
    out += ')';
  } else {
    out += s;
  }
}

inline void print_to(std::string& out, const Expr& e)
{
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::number: print_number(out, e.number()); return;
    case K::variable: out += e.var() == Var::x ? 'x' : 'y'; return;
    case K::negate:
      out += "(-";
      print_to(out, e.lhs());
      out += ')';
      return;
    case K::call:
      out += func_name(e.func());
      out += '(';
      print_to(out, e.lhs());
      out += ')';
      return;
    default: break;
  }
  char op = '+';
  switch (e.kind()) {
    case K::add: op = '+'; break;
    case K::sub: op = '-'; break;
    case K::mul: op = '*'; break;
    case K::div: op = '/'; break;
    case K::pow: op = '^'; break;
    default: break;
  }
  out += '(';
  print_to(out, e.lhs());
  out += op;
  print_to(out, e.rhs());
  out += ')';
}

}  // namespace detail

inline std::string print(const Expr& e)
{
  std::string out;
  detail::print_to(out, e);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing. Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse()
  {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError(pos_, "expression");
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError(pos_, "operator or end of input");
    return e;
  }

 private:
  void skip_ws()
  {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c)
  {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr()
  {
    Expr e = parse_term();
    for (;;) {
      if (accept('+'))
        e = Expr::binary(Expr::Kind::add, e, parse_term());
      else if (accept('-'))
        e = Expr::binary(Expr::Kind::sub, e, parse_term());
      else
        return e;
    }
  }

  Expr parse_term()
  {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*'))
        e = Expr::binary(Expr::Kind::mul, e, parse_unary());
      else if (accept('/'))
        e = Expr::binary(Expr::Kind::div, e, parse_unary());
      else
        return e;
    }
  }

  Expr parse_unary()
  {
    if (accept('-')) return Expr::unary(Expr::Kind::negate, parse_unary());
    return parse_power();
  }

  Expr parse_power()
  {
    Expr base = parse_primary();
    if (accept('^')) return Expr::binary(Expr::Kind::pow, base, parse_unary());
    return base;
  }

  Expr parse_primary()
  {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError(pos_, "number, identifier or '('");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      if (!accept(')')) throw ParseError(pos_, "')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError(pos_, "number, identifier or '('");
  }

  Expr parse_number()
  {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double value = 0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw ParseError(start, "number");
    return Expr(value);
  }

  Expr parse_identifier()
  {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return Expr::x();
    if (name == "y") return Expr::y();
    if (name == "pi") return Expr(std::numbers::pi);
    static constexpr Func funcs[] = {Func::sin, Func::cos, Func::tan, Func::exp, Func::log, Func::sqrt, Func::atan};
    for (Func f : funcs) {
      if (name == func_name(f)) {
        if (!accept('(')) throw ParseError(pos_, "'(' after " + std::string(name));
        Expr arg = parse_expr();
        if (!accept(')')) throw ParseError(pos_, "')'");
        return Expr::call(f, arg);
      }
    }
    throw UnknownIdentifierError(start, std::string(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view source) { return detail::Parser(source).parse(); }

// ---------------------------------------------------------------------------
// Evaluation.

inline double eval(const Expr& e, double x, double y)
{
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::number: return e.number();
    case K::variable: return e.var() == Var::x ? x : y;
    case K::negate: return -eval(e.lhs(), x, y);
    case K::add: return eval(e.lhs(), x, y) + eval(e.rhs(), x, y);
    case K::sub: return eval(e.lhs(), x, y) - eval(e.rhs(), x, y);
    case K::mul: return eval(e.lhs(), x, y) * eval(e.rhs(), x, y);
    case K::div: {
      double num = eval(e.lhs(), x, y);
      double den = eval(e.rhs(), x, y);
      if (den == 0.0) throw DomainError("division by zero", print(e), x, y);
      return num / den;
    }
    case K::pow: {
      double base = eval(e.lhs(), x, y);
      double expo = eval(e.rhs(), x, y);
      if (std::trunc(expo) == expo) {
        if (base == 0.0 && expo < 0) throw DomainError("zero raised to a negative power", print(e), x, y);
      } else if (!(base > 0.0)) {
        throw DomainError("non-integer power of a non-positive base", print(e), x, y);
      }
      return std::pow(base, expo);
    }
    case K::call: {
      double a = eval(e.lhs(), x, y);
      switch (e.func()) {
        case Func::sin: return std::sin(a);
        case Func::cos: return std::cos(a);
        case Func::tan: return std::tan(a);
        case Func::exp: return std::exp(a);
        case Func::atan: return std::atan(a);
        case Func::log:
          if (!(a > 0.0)) throw DomainError("log of a non-positive value", print(e), x, y);
          return std::log(a);
        case Func::sqrt:
          if (!(a >= 0.0)) throw DomainError("sqrt of a negative value", print(e), x, y);
          return std::sqrt(a);
      }
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Symbolic differentiation.

inline Expr diff(const Expr& e, Var v)
{
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::number: return Expr(0.0);
    case K::variable: return Expr(e.var() == v ? 1.0 : 0.0);
    case K::negate: return -diff(e.lhs(), v);
    case K::add: return diff(e.lhs(), v) + diff(e.rhs(), v);
    case K::sub: return diff(e.lhs(), v) - diff(e.rhs(), v);
    case K::mul: {
      Expr a = e.lhs(), b = e.rhs();
      return diff(a, v) * b + a * diff(b, v);
    }
    case K::div: {
      Expr a = e.lhs(), b = e.rhs();
      Expr da = diff(a, v), db = diff(b, v);
      if (db.is_number(0.0)) return da / b;
      return (da * b - a * db) / pow(b, Expr(2.0));
    }
    case K::pow: {
      Expr base = e.lhs(), expo = e.rhs();
      Expr dbase = diff(base, v);
      if (!expo.depends_on(v)) {
        Expr reduced = expo.is_number() ? Expr(expo.number() - 1.0) : expo - Expr(1.0);
        return expo * pow(base, reduced) * dbase;
      }
      // u^w = exp(w log u) for u > 0
      return e * (diff(expo, v) * log(base) + expo * dbase / base);
    }
    case K::call: {
      Expr a = e.lhs();
      Expr da = diff(a, v);
      if (da.is_number(0.0)) return Expr(0.0);
      switch (e.func()) {
        case Func::sin: return cos(a) * da;
        case Func::cos: return -(sin(a) * da);
        case Func::tan: return (Expr(1.0) + pow(tan(a), Expr(2.0))) * da;
        case Func::exp: return e * da;
        case Func::log: return da / a;
        case Func::sqrt: return da / (Expr(2.0) * e);
        case Func::atan: return da / (Expr(1.0) + pow(a, Expr(2.0)));
      }
    }
  }
  return Expr(0.0);
}

}  // namespace metrise
