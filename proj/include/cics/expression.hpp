#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace cics {

/// Small closed-form expression language used by inline system definitions,
/// input signals and designed state paths.
///
///   expr   := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | power
///   power  := atom ('^' integer)?
///   atom   := number | name | func '(' expr ')' | '(' expr ')'
///
/// Functions (exp, sin, cos, sqrt) are accepted only when enabled; system
/// fields stay rational in the state and input.
class Expression {
 public:
  struct Node;
  using Variables = std::map<std::string, int, std::less<>>;

  /// Throws a config error with the offending position on bad input.
  static Expression parse(std::string_view text, const Variables& variables, bool allow_functions);
  static Expression constant(double value);

  double evaluate(const std::vector<double>& values) const;
  /// Symbolic partial derivative with respect to variable `index`.
  Expression derivative(int index) const;
  std::string to_string() const;
  bool uses_variable(int index) const;

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace cics
