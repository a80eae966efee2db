#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace certfp {
namespace expr {

struct ParseError : std::runtime_error {
  ParseError(const std::string& message, std::size_t column_)
      : std::runtime_error(message + " (column " + std::to_string(column_ + 1) + ")"),
        column(column_) {}
  std::size_t column;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grammar: identifiers {t, s, u}, numeric literals, + - * /, unary -,
// parentheses, functions {sin, cos, atan, exp}. Enough for every forcing
// term, kernel factor, and nonlinearity the models need.
class Expression {
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  enum class Op { Constant, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Atan, Exp };

  struct Node {
    Op op;
    double value = 0.0;  // Constant
    int var = 0;         // Var: 0=t, 1=s, 2=u
    NodePtr lhs, rhs;
  };

 public:
  static Expression parse(std::string_view src) {
    Parser p{src, 0, {}};
    NodePtr root = p.parse_sum();
    p.skip_ws();
    if (p.pos != src.size())
      throw ParseError("unexpected trailing input", p.pos);
    Expression e;
    e.root_ = std::move(root);
    e.source_ = std::string(src);
    e.warnings_ = std::move(p.warnings);
    return e;
  }

  double eval(double t, double s, double u) const {
    return eval_node(*root_, t, s, u);
  }

  bool uses(char var) const { return uses_node(*root_, var_index(var)); }

  const std::string& source() const { return source_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  Expression() = default;

  static int var_index(char c) {
    switch (c) {
      case 't': return 0;
      case 's': return 1;
      case 'u': return 2;
    }
    throw std::invalid_argument("Expression: unknown variable");
  }

  static double eval_node(const Node& n, double t, double s, double u) {
    switch (n.op) {
      case Op::Constant: return n.value;
      case Op::Var: return n.var == 0 ? t : (n.var == 1 ? s : u);
      case Op::Add: return eval_node(*n.lhs, t, s, u) + eval_node(*n.rhs, t, s, u);
      case Op::Sub: return eval_node(*n.lhs, t, s, u) - eval_node(*n.rhs, t, s, u);
      case Op::Mul: return eval_node(*n.lhs, t, s, u) * eval_node(*n.rhs, t, s, u);
      case Op::Div: {
        const double den = eval_node(*n.rhs, t, s, u);
        if (den == 0.0) throw EvalError("division by zero during expression evaluation");
        return eval_node(*n.lhs, t, s, u) / den;
      }
      case Op::Neg: return -eval_node(*n.lhs, t, s, u);
      case Op::Sin: return std::sin(eval_node(*n.lhs, t, s, u));
      case Op::Cos: return std::cos(eval_node(*n.lhs, t, s, u));
      case Op::Atan: return std::atan(eval_node(*n.lhs, t, s, u));
      case Op::Exp: return std::exp(eval_node(*n.lhs, t, s, u));
    }
    throw EvalError("corrupt expression node");
  }

  static bool uses_node(const Node& n, int var) {
    if (n.op == Op::Var) return n.var == var;
    if (n.lhs && uses_node(*n.lhs, var)) return true;
    if (n.rhs && uses_node(*n.rhs, var)) return true;
    return false;
  }

  struct Parser {
    std::string_view src;
    std::size_t pos;
    std::vector<std::string> warnings;

    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool peek(char c) {
      skip_ws();
      return pos < src.size() && src[pos] == c;
    }

    bool accept(char c) {
      if (peek(c)) {
        ++pos;
        return true;
      }
      return false;
    }

    void expect(char c) {
      if (!accept(c))
        throw ParseError(std::string("expected '") + c + "'", pos);
    }

    NodePtr parse_sum() {
      NodePtr lhs = parse_term();
      for (;;) {
        if (accept('+')) lhs = binary(Op::Add, lhs, parse_term());
        else if (accept('-')) lhs = binary(Op::Sub, lhs, parse_term());
        else return lhs;
      }
    }

    NodePtr parse_term() {
      NodePtr lhs = parse_factor();
      for (;;) {
        if (accept('*')) lhs = binary(Op::Mul, lhs, parse_factor());
        else if (accept('/')) {
          const std::size_t at = pos;
          NodePtr rhs = parse_factor();
          if (rhs->op == Op::Constant && rhs->value == 0.0)
            warnings.push_back("division by constant zero (column " +
                               std::to_string(at + 1) + ")");
          lhs = binary(Op::Div, lhs, rhs);
        } else return lhs;
      }
    }

    NodePtr parse_factor() {
      if (accept('-')) {
        auto n = std::make_shared<Node>();
        n->op = Op::Neg;
        n->lhs = parse_factor();
        return n;
      }
      return parse_primary();
    }

    NodePtr parse_primary() {
      skip_ws();
      if (pos >= src.size()) throw ParseError("unexpected end of expression", pos);
      const char c = src[pos];

      if (c == '(') {
        ++pos;
        NodePtr inner = parse_sum();
        expect(')');
        return inner;
      }

      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const std::size_t start = pos;
        while (pos < src.size() &&
               (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.' ||
                src[pos] == 'e' || src[pos] == 'E' ||
                ((src[pos] == '+' || src[pos] == '-') && pos > start &&
                 (src[pos - 1] == 'e' || src[pos - 1] == 'E'))))
          ++pos;
        const std::string text(src.substr(start, pos - start));
        try {
          auto n = std::make_shared<Node>();
          n->op = Op::Constant;
          n->value = std::stod(text);
          return n;
        } catch (const std::exception&) {
          throw ParseError("malformed number '" + text + "'", start);
        }
      }

      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < src.size() && std::isalpha(static_cast<unsigned char>(src[pos]))) ++pos;
        const std::string word(src.substr(start, pos - start));

        if (word == "t" || word == "s" || word == "u") {
          auto n = std::make_shared<Node>();
          n->op = Op::Var;
          n->var = var_index(word[0]);
          return n;
        }

        Op fn;
        if (word == "sin") fn = Op::Sin;
        else if (word == "cos") fn = Op::Cos;
        else if (word == "atan") fn = Op::Atan;
        else if (word == "exp") fn = Op::Exp;
        else throw ParseError("unknown identifier '" + word + "'", start);

        expect('(');
        NodePtr arg = parse_sum();
        expect(')');
        auto n = std::make_shared<Node>();
        n->op = fn;
        n->lhs = std::move(arg);
        return n;
      }

      throw ParseError(std::string("unexpected character '") + c + "'", pos);
    }

    static NodePtr binary(Op op, NodePtr lhs, NodePtr rhs) {
      auto n = std::make_shared<Node>();
      n->op = op;
      n->lhs = std::move(lhs);
      n->rhs = std::move(rhs);
      return n;
    }
  };

  NodePtr root_;
  std::string source_;
  std::vector<std::string> warnings_;
};

}  // namespace expr
}  // namespace certfp
