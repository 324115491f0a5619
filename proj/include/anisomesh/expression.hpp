#pragma once

// Small expression grammar for user fields:
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := ('+' | '-') unary | power
//   power := primary ('^' unary)?
//   primary := number | x1 | x2 | pi | e | func '(' expr ')' | '(' expr ')'
// with func in {tanh, exp, sin, cos, log, sqrt}. Gradients and Hessians come
// from forward-mode differentiation of the tree to second order.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "anisomesh/error.hpp"
#include "anisomesh/fields.hpp"

namespace anisomesh {

/// Value with gradient and Hessian with respect to (x1, x2).
struct Jet2 {
  double v = 0.0;
  double g[2] = {0.0, 0.0};
  double h[3] = {0.0, 0.0, 0.0};  // xx, xy, yy

  static Jet2 constant(double c) {
    Jet2 j;
    j.v = c;
    return j;
  }
  static Jet2 variable(double x, int axis) {
    Jet2 j;
    j.v = x;
    j.g[axis] = 1.0;
    return j;
  }
  bool is_constant() const { return g[0] == 0.0 && g[1] == 0.0 && h[0] == 0.0 && h[1] == 0.0 && h[2] == 0.0; }
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v + b.v;
  for (int i = 0; i < 2; ++i) r.g[i] = a.g[i] + b.g[i];
  for (int i = 0; i < 3; ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}

inline Jet2 operator-(const Jet2& a) {
  Jet2 r;
  r.v = -a.v;
  for (int i = 0; i < 2; ++i) r.g[i] = -a.g[i];
  for (int i = 0; i < 3; ++i) r.h[i] = -a.h[i];
  return r;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) { return a + (-b); }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v * b.v;
  for (int i = 0; i < 2; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
  r.h[0] = a.h[0] * b.v + 2.0 * a.g[0] * b.g[0] + a.v * b.h[0];
  r.h[1] = a.h[1] * b.v + a.g[0] * b.g[1] + a.g[1] * b.g[0] + a.v * b.h[1];
  r.h[2] = a.h[2] * b.v + 2.0 * a.g[1] * b.g[1] + a.v * b.h[2];
  return r;
}

/// Chain rule for a scalar function with derivatives d1, d2 at a.v.
inline Jet2 chain(const Jet2& a, double f, double d1, double d2) {
  Jet2 r;
  r.v = f;
  for (int i = 0; i < 2; ++i) r.g[i] = d1 * a.g[i];
  r.h[0] = d2 * a.g[0] * a.g[0] + d1 * a.h[0];
  r.h[1] = d2 * a.g[0] * a.g[1] + d1 * a.h[1];
  r.h[2] = d2 * a.g[1] * a.g[1] + d1 * a.h[2];
  return r;
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double inv = 1.0 / b.v;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet2 tanh(const Jet2& a) {
  const double t = std::tanh(a.v);
  const double s = 1.0 - t * t;
  return chain(a, t, s, -2.0 * s * t);
}
inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
inline Jet2 sin(const Jet2& a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet2 cos(const Jet2& a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet2 log(const Jet2& a) { return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet2 pow(const Jet2& a, const Jet2& b) {
  if (b.is_constant()) {
    const double p = b.v;
    return chain(a, std::pow(a.v, p), p * std::pow(a.v, p - 1.0), p * (p - 1.0) * std::pow(a.v, p - 2.0));
  }
  return exp(b * log(a));
}

class Expression {
 public:
  enum class Op { Constant, X1, X2, Add, Sub, Mul, Div, Pow, Neg, Tanh, Exp, Sin, Cos, Log, Sqrt };

  struct Node {
    Op op;
    double constant = 0.0;
    std::unique_ptr<Node> lhs, rhs;
  };

  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    auto root = p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    Expression e;
    e.root_ = std::shared_ptr<const Node>(std::move(root));
    e.text_ = std::string(text);
    return e;
  }

  Jet2 eval(const Vec2& x) const { return eval(*root_, Jet2::variable(x.x(), 0), Jet2::variable(x.y(), 1)); }
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;

  static Jet2 eval(const Node& n, const Jet2& x1, const Jet2& x2) {
    switch (n.op) {
      case Op::Constant: return Jet2::constant(n.constant);
      case Op::X1: return x1;
      case Op::X2: return x2;
      case Op::Add: return eval(*n.lhs, x1, x2) + eval(*n.rhs, x1, x2);
      case Op::Sub: return eval(*n.lhs, x1, x2) - eval(*n.rhs, x1, x2);
      case Op::Mul: return eval(*n.lhs, x1, x2) * eval(*n.rhs, x1, x2);
      case Op::Div: return eval(*n.lhs, x1, x2) / eval(*n.rhs, x1, x2);
      case Op::Pow: return pow(eval(*n.lhs, x1, x2), eval(*n.rhs, x1, x2));
      case Op::Neg: return -eval(*n.lhs, x1, x2);
      case Op::Tanh: return tanh(eval(*n.lhs, x1, x2));
      case Op::Exp: return exp(eval(*n.lhs, x1, x2));
      case Op::Sin: return sin(eval(*n.lhs, x1, x2));
      case Op::Cos: return cos(eval(*n.lhs, x1, x2));
      case Op::Log: return log(eval(*n.lhs, x1, x2));
      case Op::Sqrt: return sqrt(eval(*n.lhs, x1, x2));
    }
    return {};
  }

  struct Parser {
    std::string_view s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      throw Error(ErrorKind::ParseError, "expression column " + std::to_string(pos + 1) + ": " + what);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    static std::unique_ptr<Node> make(Op op, std::unique_ptr<Node> l = nullptr, std::unique_ptr<Node> r = nullptr) {
      auto n = std::make_unique<Node>();
      n->op = op;
      n->lhs = std::move(l);
      n->rhs = std::move(r);
      return n;
    }
    std::unique_ptr<Node> expr() {
      auto l = term();
      for (;;) {
        if (accept('+')) l = make(Op::Add, std::move(l), term());
        else if (accept('-')) l = make(Op::Sub, std::move(l), term());
        else return l;
      }
    }
    std::unique_ptr<Node> term() {
      auto l = unary();
      for (;;) {
        if (accept('*')) l = make(Op::Mul, std::move(l), unary());
        else if (accept('/')) l = make(Op::Div, std::move(l), unary());
        else return l;
      }
    }
    std::unique_ptr<Node> unary() {
      if (accept('-')) return make(Op::Neg, unary());
      if (accept('+')) return unary();
      return power();
    }
    std::unique_ptr<Node> power() {
      auto base = primary();
      if (accept('^')) return make(Op::Pow, std::move(base), unary());
      return base;
    }
    std::unique_ptr<Node> primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      if (accept('(')) {
        auto e = expr();
        if (!accept(')')) fail("expected ')'");
        return e;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(std::string(s.substr(pos)), &used);
        } catch (const std::exception&) {
          fail("bad number");
        }
        pos += used;
        auto n = make(Op::Constant);
        n->constant = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string_view id = s.substr(start, pos - start);
        if (id == "x1" || id == "x") return make(Op::X1);
        if (id == "x2" || id == "y") return make(Op::X2);
        if (id == "pi" || id == "e") {
          auto n = make(Op::Constant);
          n->constant = id == "pi" ? std::numbers::pi : std::numbers::e;
          return n;
        }
        Op op;
        if (id == "tanh") op = Op::Tanh;
        else if (id == "exp") op = Op::Exp;
        else if (id == "sin") op = Op::Sin;
        else if (id == "cos") op = Op::Cos;
        else if (id == "log") op = Op::Log;
        else if (id == "sqrt") op = Op::Sqrt;
        else {
          pos = start;
          fail("unknown identifier '" + std::string(id) + "'");
        }
        if (!accept('(')) fail("expected '(' after function name");
        auto arg = expr();
        if (!accept(')')) fail("expected ')'");
        return make(op, std::move(arg));
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };
};

inline ScalarField expression_field(const std::string& text) {
  const Expression e = Expression::parse(text);
  ScalarField f;
  f.label = text;
  f.value = [e](const Vec2& x) { return e.eval(x).v; };
  f.gradient = [e](const Vec2& x) {
    const Jet2 j = e.eval(x);
    return Vec2(j.g[0], j.g[1]);
  };
  f.hessian = [e](const Vec2& x) {
    const Jet2 j = e.eval(x);
    Mat2 H;
    H << j.h[0], j.h[1], j.h[1], j.h[2];
    return H;
  };
  return f;
}

/// Field registry: built-in labels first, anything else is parsed as an expression.
inline ScalarField make_field(const std::string& label) {
  if (label == "tanh_layer" || label == "tanh") return tanh_layer();
  return expression_field(label);
}

}  // namespace anisomesh
