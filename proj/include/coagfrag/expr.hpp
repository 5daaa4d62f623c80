#ifndef COAGFRAG_EXPR_HPP
#define COAGFRAG_EXPR_HPP

#include <memory>
#include <string>
#include <vector>

namespace coagfrag {

// Parsed arithmetic expression in the variables x and y.
// Grammar: + - * / ^ (right-assoc), unary minus, parentheses, and the
// functions exp, log, sqrt, abs, min, max, pow.
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& text);

  double eval(double x, double y = 0.0) const;
  bool empty() const { return root_ == nullptr; }
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace coagfrag

#endif
