#pragma once

#include <span>
#include <string>
#include <vector>

namespace ensoc {

/// Version of the expression grammar accepted by Expression::parse.
inline constexpr int kExpressionGrammarVersion = 1;

/// Compiled scalar expression over a fixed list of named variables.
///
/// Grammar (version 1):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('+' | '-') unary | power
///     power   := primary ('^' unary)?
///     primary := number | name | call | '(' expr ')'
///     call    := func '(' expr (',' expr)* ')'
///     func    := exp | sin | cos | abs | min | max
///
/// `pi` is the only named constant. exp/sin/cos/abs take one argument,
/// min/max take two or more. '^' is right-associative.
class Expression {
 public:
  static Expression parse(const std::string& source, const std::vector<std::string>& variables);

  /// `values` must be indexed like the variable list passed to parse.
  double eval(std::span<const double> values) const;

  const std::string& source() const { return source_; }

  /// True if the variable at `index` occurs in the expression.
  bool uses(int index) const;

 private:
  enum class Op { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos, Abs, Min, Max };
  struct Node {
    Op op;
    double number = 0.0;
    int variable = -1;
    std::vector<int> children;
  };

  double eval_node(int index, std::span<const double> values) const;

  std::string source_;
  std::vector<Node> nodes_;
  int root_ = -1;

  friend class ExpressionParser;
};

}  // namespace ensoc
