#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sundman/fields.hpp"
#include "sundman/riemann.hpp"

namespace sundman {

/// Raised on malformed expression text; line and column are 1-based.
class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& msg, int line, int column)
      : std::runtime_error(msg + " at line " + std::to_string(line) +
                           ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

namespace detail {
struct ExprNode;
}

/// A compiled arithmetic expression over named coordinates. Supports
/// + - * / ^, unary minus, sin, cos, exp, log, sqrt, and the constant pi.
class Expression {
 public:
  Expression() = default;
  double eval(const Vec& q) const;
  bool valid() const { return static_cast<bool>(root_); }

  /// Symbolic partial derivative with respect to the given coordinate.
  Expression derivative(int coord) const;

 private:
  friend Expression parse_expression(const std::string&,
                                     const std::vector<std::string>&);
  std::shared_ptr<const detail::ExprNode> root_;
};

Expression parse_expression(const std::string& text,
                            const std::vector<std::string>& coords);

ScalarField make_scalar_field(const std::string& text,
                              const std::vector<std::string>& coords);

/// One expression per component.
VectorField make_vector_field(const std::vector<std::string>& components,
                              const std::vector<std::string>& coords);

/// Row-major entries; rejects matrices that fail the symmetry invariant on a
/// deterministic probe set.
MetricField make_metric_field(
    const std::vector<std::vector<std::string>>& entries,
    const std::vector<std::string>& coords);

}  // namespace sundman
