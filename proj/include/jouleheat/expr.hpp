#ifndef JOULEHEAT_EXPR_HPP
#define JOULEHEAT_EXPR_HPP

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "jouleheat/core.hpp"

namespace jouleheat {

/// Recursive-descent parser for the small arithmetic grammar used by custom
/// problem data: +, -, *, /, unary minus, parentheses, numbers, the
/// variables x1, x2, x3, t, and the functions pow, sin, cos, exp, arctan,
/// min, max.
class Expression {
 public:
  static Expression parse(const std::string& text) {
    Parser p(text);
    Expression e;
    e.root_ = p.parse_expression();
    p.skip_ws();
    if (!p.at_end())
      throw ConfigError("expression: unexpected trailing input at position " +
                        std::to_string(p.pos()) + " in '" + text + "'");
    e.text_ = text;
    return e;
  }

  double eval(const Vec3& x, double t) const { return root_->eval(x, t); }

  SpaceTimeFn as_function() const {
    auto node = root_;
    return [node](const Vec3& x, double t) { return node->eval(x, t); };
  }

  const std::string& text() const { return text_; }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(const Vec3& x, double t) const = 0;
  };
  using NodePtr = std::shared_ptr<const Node>;

  struct Constant : Node {
    double value;
    explicit Constant(double v) : value(v) {}
    double eval(const Vec3&, double) const override { return value; }
  };
  struct Variable : Node {
    int index;  // 0..2 -> x components, 3 -> t
    explicit Variable(int i) : index(i) {}
    double eval(const Vec3& x, double t) const override {
      return index == 3 ? t : x[index];
    }
  };
  struct Binary : Node {
    char op;
    NodePtr lhs, rhs;
    Binary(char o, NodePtr l, NodePtr r) : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
    double eval(const Vec3& x, double t) const override {
      double a = lhs->eval(x, t), b = rhs->eval(x, t);
      switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        default: return a / b;
      }
    }
  };
  struct Negate : Node {
    NodePtr arg;
    explicit Negate(NodePtr a) : arg(std::move(a)) {}
    double eval(const Vec3& x, double t) const override { return -arg->eval(x, t); }
  };
  struct Call : Node {
    int fn;  // 0 pow, 1 sin, 2 cos, 3 exp, 4 arctan, 5 min, 6 max
    NodePtr a, b;
    Call(int f, NodePtr x, NodePtr y) : fn(f), a(std::move(x)), b(std::move(y)) {}
    double eval(const Vec3& x, double t) const override {
      double u = a->eval(x, t);
      double v = b ? b->eval(x, t) : 0.0;
      switch (fn) {
        case 0: return std::pow(u, v);
        case 1: return std::sin(u);
        case 2: return std::cos(u);
        case 3: return std::exp(u);
        case 4: return std::atan(u);
        case 5: return std::min(u, v);
        default: return std::max(u, v);
      }
    }
  };

  class Parser {
   public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse_expression() {
      auto lhs = parse_term();
      while (true) {
        skip_ws();
        if (accept('+'))
          lhs = std::make_shared<Binary>('+', lhs, parse_term());
        else if (accept('-'))
          lhs = std::make_shared<Binary>('-', lhs, parse_term());
        else
          return lhs;
      }
    }

    void skip_ws() {
      while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool at_end() const { return i_ >= s_.size(); }
    std::size_t pos() const { return i_; }

   private:
    NodePtr parse_term() {
      auto lhs = parse_unary();
      while (true) {
        skip_ws();
        if (accept('*'))
          lhs = std::make_shared<Binary>('*', lhs, parse_unary());
        else if (accept('/'))
          lhs = std::make_shared<Binary>('/', lhs, parse_unary());
        else
          return lhs;
      }
    }

    NodePtr parse_unary() {
      skip_ws();
      if (accept('-')) return std::make_shared<Negate>(parse_unary());
      return parse_primary();
    }

    NodePtr parse_primary() {
      skip_ws();
      if (at_end()) throw ConfigError("expression: unexpected end of input");
      char c = s_[i_];
      if (accept('(')) {
        auto e = parse_expression();
        expect(')');
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
      if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
      throw ConfigError("expression: unexpected character '" + std::string(1, c) +
                        "' at position " + std::to_string(i_));
    }

    NodePtr parse_number() {
      std::size_t consumed = 0;
      double v = std::stod(s_.substr(i_), &consumed);
      i_ += consumed;
      return std::make_shared<Constant>(v);
    }

    NodePtr parse_identifier() {
      std::size_t start = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
        ++i_;
      std::string name = s_.substr(start, i_ - start);
      if (name == "x1") return std::make_shared<Variable>(0);
      if (name == "x2") return std::make_shared<Variable>(1);
      if (name == "x3") return std::make_shared<Variable>(2);
      if (name == "t") return std::make_shared<Variable>(3);

      int fn = -1;
      int arity = 1;
      if (name == "pow") fn = 0, arity = 2;
      else if (name == "sin") fn = 1;
      else if (name == "cos") fn = 2;
      else if (name == "exp") fn = 3;
      else if (name == "arctan") fn = 4;
      else if (name == "min") fn = 5, arity = 2;
      else if (name == "max") fn = 6, arity = 2;
      if (fn < 0)
        throw ConfigError("expression: unknown identifier '" + name + "'");

      expect('(');
      auto a = parse_expression();
      NodePtr b;
      if (arity == 2) {
        expect(',');
        b = parse_expression();
      }
      expect(')');
      return std::make_shared<Call>(fn, a, b);
    }

    bool accept(char c) {
      skip_ws();
      if (i_ < s_.size() && s_[i_] == c) {
        ++i_;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!accept(c))
        throw ConfigError("expression: expected '" + std::string(1, c) + "' at position " +
                          std::to_string(i_));
    }

    const std::string& s_;
    std::size_t i_ = 0;
  };

  NodePtr root_;
  std::string text_;
};

}  // namespace jouleheat

#endif
