#pragma once

// Small arithmetic expression language:
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := ("-" factor) | power
//   power  := atom ("^" factor)?
//   atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
// Functions: sin cos exp log sqrt.  Variables are the declared names only.

#include <charconv>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conformal/errors.hpp"
#include "conformal/jet.hpp"

namespace conformal {

enum class UnaryOp { Neg, Sin, Cos, Exp, Log, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { Constant, Variable, Unary, Binary };
  Kind kind;
  double constant = 0.0;
  int var = -1;  // index into the declared variable list
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  ExprPtr a, b;
};

namespace detail {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  const std::vector<std::string>* vars;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' ||
                                 text[pos] == '\n' || text[pos] == '\r'))
      ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (eat('+')) {
        lhs = binary(BinaryOp::Add, lhs, parse_term());
      } else if (eat('-')) {
        lhs = binary(BinaryOp::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    for (;;) {
      skip_ws();
      if (eat('*')) {
        lhs = binary(BinaryOp::Mul, lhs, parse_factor());
      } else if (eat('/')) {
        lhs = binary(BinaryOp::Div, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_factor() {
    skip_ws();
    if (eat('-')) {
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Unary;
      n->uop = UnaryOp::Neg;
      n->a = parse_factor();
      return n;
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    skip_ws();
    if (eat('^')) return binary(BinaryOp::Pow, base, parse_factor());
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos >= text.size()) throw SyntaxError(pos, "unexpected end of input");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      ExprPtr e = parse_expr();
      if (!eat(')')) throw SyntaxError(pos, "expected ')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (is_ident_start(c)) return parse_ident();
    throw SyntaxError(pos, std::string("unexpected character '") + c + "'");
  }

  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
  }

  ExprPtr parse_number() {
    const char* begin = text.data() + pos;
    const char* end = text.data() + text.size();
    double v = 0.0;
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{})
      throw SyntaxError(pos, "malformed number literal");
    pos = static_cast<std::size_t>(res.ptr - text.data());
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Constant;
    n->constant = v;
    return n;
  }

  ExprPtr parse_ident() {
    std::size_t start = pos;
    while (pos < text.size() && is_ident_char(text[pos])) ++pos;
    std::string name(text.substr(start, pos - start));
    skip_ws();
    if (pos < text.size() && text[pos] == '(') {
      ++pos;
      UnaryOp op;
      if (name == "sin") op = UnaryOp::Sin;
      else if (name == "cos") op = UnaryOp::Cos;
      else if (name == "exp") op = UnaryOp::Exp;
      else if (name == "log") op = UnaryOp::Log;
      else if (name == "sqrt") op = UnaryOp::Sqrt;
      else throw UnknownIdentifier(name);
      ExprPtr arg = parse_expr();
      if (!eat(')')) throw SyntaxError(pos, "expected ')'");
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::Unary;
      n->uop = op;
      n->a = arg;
      return n;
    }
    for (std::size_t i = 0; i < vars->size(); ++i) {
      if ((*vars)[i] == name) {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::Variable;
        n->var = static_cast<int>(i);
        return n;
      }
    }
    throw UnknownIdentifier(name);
  }

  static ExprPtr binary(BinaryOp op, ExprPtr a, ExprPtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Binary;
    n->bop = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
};

template <class V>
V eval_node(const ExprNode& n, std::span<const V> env) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      return constant_like(env[0], n.constant);
    case ExprNode::Kind::Variable:
      return env[n.var];
    case ExprNode::Kind::Unary: {
      V a = eval_node(*n.a, env);
      switch (n.uop) {
        case UnaryOp::Neg: return -a;
        case UnaryOp::Sin: return sin(a);
        case UnaryOp::Cos: return cos(a);
        case UnaryOp::Exp: return exp(a);
        case UnaryOp::Log: return log(a);
        case UnaryOp::Sqrt: return sqrt(a);
      }
      break;
    }
    case ExprNode::Kind::Binary: {
      V a = eval_node(*n.a, env);
      // Pow with a constant exponent never evaluates the exponent as a jet.
      if (n.bop == BinaryOp::Pow &&
          n.b->kind == ExprNode::Kind::Constant) {
        if constexpr (std::is_same_v<V, double>) {
          return std::pow(a, n.b->constant);
        } else {
          return pow(a, n.b->constant);
        }
      }
      V b = eval_node(*n.b, env);
      switch (n.bop) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div:
          if constexpr (std::is_same_v<V, double>) {
            if (std::fabs(b) < 1e-300)
              throw DomainError("division by a value below 1e-300");
            return a / b;
          } else {
            return a / b;
          }
        case BinaryOp::Pow:
          if constexpr (std::is_same_v<V, double>) {
            return std::pow(a, b);
          } else {
            // Non-constant exponent: exp(b log a), positive base required.
            return exp(b * log(a));
          }
      }
      break;
    }
  }
  throw DomainError("corrupt expression node");
}

inline void print_node(const ExprNode& n, const std::vector<std::string>& vars,
                       std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::Constant: {
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof buf, n.constant,
                               std::chars_format::general, 17);
      out.append(buf, res.ptr);
      return;
    }
    case ExprNode::Kind::Variable:
      out += vars[n.var];
      return;
    case ExprNode::Kind::Unary: {
      static const char* names[] = {"-", "sin", "cos", "exp", "log", "sqrt"};
      out += names[static_cast<int>(n.uop)];
      out += '(';
      print_node(*n.a, vars, out);
      out += ')';
      return;
    }
    case ExprNode::Kind::Binary: {
      static const char* ops[] = {"+", "-", "*", "/", "^"};
      out += '(';
      print_node(*n.a, vars, out);
      out += ops[static_cast<int>(n.bop)];
      print_node(*n.b, vars, out);
      out += ')';
      return;
    }
  }
}

}  // namespace detail

class Expression {
 public:
  Expression() = default;

  static Expression parse(std::string_view text,
                          std::vector<std::string> var_names) {
    if (text.empty()) throw SyntaxError(0, "empty expression");
    Expression e;
    e.vars_ = std::move(var_names);
    detail::Parser p{text, 0, &e.vars_};
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size())
      throw SyntaxError(p.pos, "trailing input after expression");
    return e;
  }
  static Expression parse(std::string_view text, const std::string& vx,
                          const std::string& vy) {
    return parse(text, std::vector<std::string>{vx, vy});
  }

  const std::vector<std::string>& variables() const { return vars_; }
  const ExprPtr& root() const { return root_; }

  // Fully parenthesized form; reparsing it reproduces the same tree.
  std::string str() const {
    std::string out;
    detail::print_node(*root_, vars_, out);
    return out;
  }

  template <class V>
  V eval(std::span<const V> env) const {
    return detail::eval_node<V>(*root_, env);
  }

  double eval_value(double x, double y) const {
    const double env[2] = {x, y};
    return detail::eval_node<double>(*root_, std::span<const double>(env, 2));
  }

 private:
  ExprPtr root_;
  std::vector<std::string> vars_;
};

// Jet of a two-variable expression at (x0, y0).  Entry (i, j) of the result
// is the raw partial d^i_x d^j_y e at the base point.
inline DJet eval_jet(const Expression& e, double x0, double y0, int order,
                     int max_order = kDefaultMaxOrder) {
  if (order > max_order)
    throw OrderTooLarge("requested order " + std::to_string(order) +
                        " exceeds maximum " + std::to_string(max_order));
  const DJet env[2] = {DJet::variable_x(x0, y0, order),
                       DJet::variable_y(x0, y0, order)};
  return e.eval<DJet>(std::span<const DJet>(env, 2));
}

inline bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprNode::Kind::Constant: return a->constant == b->constant;
    case ExprNode::Kind::Variable: return a->var == b->var;
    case ExprNode::Kind::Unary:
      return a->uop == b->uop && structurally_equal(a->a, b->a);
    case ExprNode::Kind::Binary:
      return a->bop == b->bop && structurally_equal(a->a, b->a) &&
             structurally_equal(a->b, b->b);
  }
  return false;
}

}  // namespace conformal
