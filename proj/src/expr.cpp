#include "coagfrag/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>

#include "coagfrag/errors.hpp"

namespace coagfrag {

struct Expr::Node {
  enum class Op { Num, VarX, VarY, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sqrt, Abs, Min, Max };
  Op op;
  double value = 0.0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Op = Expr::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_num(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Num;
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size())
      throw Error(ErrorCode::DomainError, "expression: trailing input at offset " + std::to_string(pos_));
    return e;
  }

 private:
  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      if (accept('+'))
        lhs = make(Op::Add, lhs, term());
      else if (accept('-'))
        lhs = make(Op::Sub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      skip_ws();
      if (accept('*'))
        lhs = make(Op::Mul, lhs, factor());
      else if (accept('/'))
        lhs = make(Op::Div, lhs, factor());
      else
        return lhs;
    }
  }

  NodePtr factor() {
    NodePtr base = unary();
    skip_ws();
    if (accept('^')) return make(Op::Pow, base, factor());  // right associative
    return base;
  }

  NodePtr unary() {
    skip_ws();
    if (accept('-')) return make(Op::Neg, unary());
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw Error(ErrorCode::DomainError, "expression: unexpected end");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    if (accept('(')) {
      NodePtr e = expr();
      expect(')');
      return e;
    }
    throw Error(ErrorCode::DomainError, std::string("expression: unexpected character '") + c + "'");
  }

  NodePtr number() {
    size_t end = 0;
    double v = std::stod(s_.substr(pos_), &end);
    pos_ += end;
    return make_num(v);
  }

  NodePtr ident() {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    if (name == "x") return make(Op::VarX);
    if (name == "y") return make(Op::VarY);
    skip_ws();
    expect('(');
    NodePtr a = expr();
    NodePtr b;
    skip_ws();
    if (accept(',')) b = expr();
    expect(')');
    if (name == "exp") return make(Op::Exp, a);
    if (name == "log") return make(Op::Log, a);
    if (name == "sqrt") return make(Op::Sqrt, a);
    if (name == "abs") return make(Op::Abs, a);
    if (name == "min") return require2(Op::Min, a, b, name);
    if (name == "max") return require2(Op::Max, a, b, name);
    if (name == "pow") return require2(Op::Pow, a, b, name);
    throw Error(ErrorCode::DomainError, "expression: unknown function '" + name + "'");
  }

  NodePtr require2(Op op, NodePtr a, NodePtr b, const std::string& name) {
    if (!b) throw Error(ErrorCode::DomainError, "expression: '" + name + "' needs two arguments");
    return make(op, std::move(a), std::move(b));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c))
      throw Error(ErrorCode::DomainError, std::string("expression: expected '") + c + "'");
  }

  const std::string& s_;
  size_t pos_ = 0;
};

double eval_node(const Expr::Node& n, double x, double y) {
  switch (n.op) {
    case Op::Num: return n.value;
    case Op::VarX: return x;
    case Op::VarY: return y;
    case Op::Add: return eval_node(*n.a, x, y) + eval_node(*n.b, x, y);
    case Op::Sub: return eval_node(*n.a, x, y) - eval_node(*n.b, x, y);
    case Op::Mul: return eval_node(*n.a, x, y) * eval_node(*n.b, x, y);
    case Op::Div: return eval_node(*n.a, x, y) / eval_node(*n.b, x, y);
    case Op::Pow: return std::pow(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
    case Op::Neg: return -eval_node(*n.a, x, y);
    case Op::Exp: return std::exp(eval_node(*n.a, x, y));
    case Op::Log: return std::log(eval_node(*n.a, x, y));
    case Op::Sqrt: return std::sqrt(eval_node(*n.a, x, y));
    case Op::Abs: return std::abs(eval_node(*n.a, x, y));
    case Op::Min: return std::min(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
    case Op::Max: return std::max(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
  }
  return 0.0;
}

}  // namespace

Expr Expr::parse(const std::string& text) {
  Expr e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expr::eval(double x, double y) const {
  if (!root_) throw Error(ErrorCode::DomainError, "expression: empty");
  return eval_node(*root_, x, y);
}

}  // namespace coagfrag
