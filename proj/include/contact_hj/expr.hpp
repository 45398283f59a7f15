#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "contact_hj/common.hpp"

namespace contact_hj {

// Closed-form scalar function of the spatial variables, stored as an
// expression tree so that models and test functions serialize as text.
//
// Grammar: numbers, `pi`, variables `x` and `y`, binary + - * / ^, unary
// minus, parentheses and the functions exp, log, sin, cos, sqrt, atan, abs.
class Expr {
 public:
  struct Node;

  Expr();  // the constant 0
  static Expr Parse(std::string_view text);
  static Expr Constant(double value);
  static Expr Variable(int axis);

  double operator()(const Point& x) const;

  // Exact partial derivative with respect to axis 0 (x) or 1 (y).
  Expr Derivative(int axis) const;

  bool IsConstant() const;
  // True when the tree references variable `axis`.
  bool DependsOn(int axis) const;

  // Source text for parsed expressions, otherwise a fully parenthesized print.
  const std::string& Text() const { return text_; }

 private:
  explicit Expr(std::shared_ptr<const Node> root);

  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace contact_hj
