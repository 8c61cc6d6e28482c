#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conslaw/grid.hpp"

namespace conslaw {

/// Node of an initial-data expression.
struct ExprNode {
  enum class Kind { Number, Coord, Random, Pi, Neg, Binary, Ternary, Call };

  Kind kind = Kind::Number;
  double value = 0.0;  // Number
  int index = 0;       // Coord axis, Random variable
  std::string op;      // Binary operator or Call name
  std::vector<std::shared_ptr<const ExprNode>> args;
};

/// Immutable expression tree; cheap to copy.
///
/// Grammar, loosest to tightest:
///   ternary    := compare ['?' ternary ':' ternary]
///   compare    := additive {('<'|'<='|'>'|'>='|'=='|'!=') additive}
///   additive   := term {('+'|'-') term}
///   term       := unary {('*'|'/') unary}
///   unary      := '-' unary | '+' unary | power
///   power      := primary ['^' unary]
///   primary    := number | name | name '(' args ')' | '(' ternary ')'
/// Names are x, y, z, pi and X0, X1, ...; functions sin, cos, exp, abs,
/// sqrt (one argument) and min, max (two). Comparisons yield 1 or 0.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) {}

  const ExprNode& root() const { return *root_; }
  bool empty() const { return !root_; }

  double eval(const Point3& x, std::span<const double> random) const;
  /// Largest random variable index used, or -1.
  int max_random_index() const;
  bool operator==(const Expr& other) const;

 private:
  std::shared_ptr<const ExprNode> root_;
};

/// Throws ConfigError("... at position N ...") with a 1-based character
/// position on malformed input or unknown names.
Expr parse_expr(std::string_view text);

/// Fully parenthesized text that parses back to an equal tree.
std::string print_expr(const Expr& expr);

/// Shortest decimal text that reads back as the same double.
std::string format_double(double v);

}  // namespace conslaw
