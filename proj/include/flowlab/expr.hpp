#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowlab/error.hpp"

namespace flowlab::expr {

// Arithmetic over t and x1..xd: + - * / ^, unary minus, parentheses, numbers and
// the functions sin, cos, exp, tanh. Parsed once into a tree, evaluated many times.

class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& text, std::size_t dim) {
    Parser p{text, 0, dim};
    auto root = p.parse_sum();
    p.skip_space();
    if (p.pos != text.size())
      throw InvalidInput("unexpected '" + text.substr(p.pos, 1) + "' in expression '" + text + "'");
    Expression e;
    e.root_ = std::move(root);
    e.text_ = text;
    return e;
  }

  double operator()(double t, std::span<const double> x) const { return root_->eval(t, x); }
  const std::string& text() const noexcept { return text_; }

 private:
  struct Node {
    enum class Kind { number, time, state, add, sub, mul, div, pow, neg, sin, cos, exp, tanh };
    Kind kind = Kind::number;
    double value = 0.0;
    std::size_t index = 0;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;

    double eval(double t, std::span<const double> x) const {
      switch (kind) {
        case Kind::number: return value;
        case Kind::time: return t;
        case Kind::state: return x[index];
        case Kind::add: return a->eval(t, x) + b->eval(t, x);
        case Kind::sub: return a->eval(t, x) - b->eval(t, x);
        case Kind::mul: return a->eval(t, x) * b->eval(t, x);
        case Kind::div: return a->eval(t, x) / b->eval(t, x);
        case Kind::pow: return std::pow(a->eval(t, x), b->eval(t, x));
        case Kind::neg: return -a->eval(t, x);
        case Kind::sin: return std::sin(a->eval(t, x));
        case Kind::cos: return std::cos(a->eval(t, x));
        case Kind::exp: return std::exp(a->eval(t, x));
        case Kind::tanh: return std::tanh(a->eval(t, x));
      }
      return 0.0;
    }
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;
    std::size_t dim;

    void skip_space() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_space();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    NodePtr parse_sum() {
      auto lhs = parse_product();
      for (;;) {
        if (accept('+')) lhs = make(Node::Kind::add, lhs, parse_product());
        else if (accept('-')) lhs = make(Node::Kind::sub, lhs, parse_product());
        else return lhs;
      }
    }
    NodePtr parse_product() {
      auto lhs = parse_unary();
      for (;;) {
        if (accept('*')) lhs = make(Node::Kind::mul, lhs, parse_unary());
        else if (accept('/')) lhs = make(Node::Kind::div, lhs, parse_unary());
        else return lhs;
      }
    }
    NodePtr parse_unary() {
      if (accept('-')) return make(Node::Kind::neg, parse_unary());
      if (accept('+')) return parse_unary();
      return parse_power();
    }
    NodePtr parse_power() {
      auto base = parse_atom();
      if (accept('^')) return make(Node::Kind::pow, base, parse_unary());
      return base;
    }
    NodePtr parse_atom() {
      skip_space();
      if (pos >= s.size()) throw InvalidInput("expression '" + s + "' ends unexpectedly");
      if (accept('(')) {
        auto inner = parse_sum();
        if (!accept(')')) throw InvalidInput("missing ')' in expression '" + s + "'");
        return inner;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        const double v = std::stod(s.substr(pos), &used);
        pos += used;
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
      }
      if (!std::isalpha(static_cast<unsigned char>(c)))
        throw InvalidInput("unexpected '" + std::string(1, c) + "' in expression '" + s + "'");
      const std::size_t begin = pos;
      while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
      const std::string word = s.substr(begin, pos - begin);
      if (word == "t") return make(Node::Kind::time);
      if (word == "sin" || word == "cos" || word == "exp" || word == "tanh") {
        if (!accept('(')) throw InvalidInput(word + " needs an argument in parentheses");
        auto arg = parse_sum();
        if (!accept(')')) throw InvalidInput("missing ')' after " + word + " argument");
        const auto kind = word == "sin"   ? Node::Kind::sin
                          : word == "cos" ? Node::Kind::cos
                          : word == "exp" ? Node::Kind::exp
                                          : Node::Kind::tanh;
        return make(kind, arg);
      }
      if (word.size() > 1 && word[0] == 'x') {
        std::size_t idx = 0;
        try {
          idx = std::stoul(word.substr(1));
        } catch (const std::exception&) {
          throw InvalidInput("unknown symbol '" + word + "'");
        }
        if (idx == 0 || idx > dim)
          throw InvalidInput("state variable " + word + " outside x1..x" + std::to_string(dim));
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::state;
        n->index = idx - 1;
        return n;
      }
      throw InvalidInput("unknown symbol '" + word + "' in expression '" + s + "'");
    }
  };

  NodePtr root_;
  std::string text_;
};

}  // namespace flowlab::expr
