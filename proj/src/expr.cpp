#include "sundman/expr.hpp"

#include <cctype>
#include <cmath>

namespace sundman {
namespace detail {

enum class Op { Const, Coord, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Sqrt };

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;
  int coord = -1;
  std::shared_ptr<const ExprNode> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

double eval_node(const ExprNode& n, const Vec& q) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Coord: return q[n.coord];
    case Op::Neg: return -eval_node(*n.a, q);
    case Op::Add: return eval_node(*n.a, q) + eval_node(*n.b, q);
    case Op::Sub: return eval_node(*n.a, q) - eval_node(*n.b, q);
    case Op::Mul: return eval_node(*n.a, q) * eval_node(*n.b, q);
    case Op::Div: return eval_node(*n.a, q) / eval_node(*n.b, q);
    case Op::Pow: return std::pow(eval_node(*n.a, q), eval_node(*n.b, q));
    case Op::Sin: return std::sin(eval_node(*n.a, q));
    case Op::Cos: return std::cos(eval_node(*n.a, q));
    case Op::Exp: return std::exp(eval_node(*n.a, q));
    case Op::Log: return std::log(eval_node(*n.a, q));
    case Op::Sqrt: return std::sqrt(eval_node(*n.a, q));
  }
  return 0.0;
}

NodePtr constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->op == Op::Const && n->value == v;
}

NodePtr make_unary(Op op, NodePtr a);

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) {
    ExprNode tmp;
    tmp.op = op;
    tmp.a = a;
    tmp.b = b;
    return constant(eval_node(tmp, Vec()));
  }
  switch (op) {
    case Op::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::Sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::Div:
      if (is_const(a, 0.0)) return constant(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::Pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return constant(1.0);
      break;
    default:
      break;
  }
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_unary(Op op, NodePtr a) {
  if (a->op == Op::Const) {
    ExprNode tmp;
    tmp.op = op;
    tmp.a = a;
    return constant(eval_node(tmp, Vec()));
  }
  if (op == Op::Neg && a->op == Op::Neg) return a->a;
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  return n;
}

NodePtr diff_node(const NodePtr& n, int coord) {
  switch (n->op) {
    case Op::Const:
      return constant(0.0);
    case Op::Coord:
      return constant(n->coord == coord ? 1.0 : 0.0);
    case Op::Neg:
      return make_unary(Op::Neg, diff_node(n->a, coord));
    case Op::Add:
      return make_binary(Op::Add, diff_node(n->a, coord),
                         diff_node(n->b, coord));
    case Op::Sub:
      return make_binary(Op::Sub, diff_node(n->a, coord),
                         diff_node(n->b, coord));
    case Op::Mul:
      return make_binary(
          Op::Add, make_binary(Op::Mul, diff_node(n->a, coord), n->b),
          make_binary(Op::Mul, n->a, diff_node(n->b, coord)));
    case Op::Div:
      return make_binary(
          Op::Div,
          make_binary(Op::Sub,
                      make_binary(Op::Mul, diff_node(n->a, coord), n->b),
                      make_binary(Op::Mul, n->a, diff_node(n->b, coord))),
          make_binary(Op::Mul, n->b, n->b));
    case Op::Pow:
      if (n->b->op == Op::Const) {
        // d(a^c) = c a^(c-1) a'
        return make_binary(
            Op::Mul,
            make_binary(Op::Mul, n->b,
                        make_binary(Op::Pow, n->a,
                                    constant(n->b->value - 1.0))),
            diff_node(n->a, coord));
      }
      // d(a^b) = a^b (b' log a + b a'/a)
      return make_binary(
          Op::Mul, make_binary(Op::Pow, n->a, n->b),
          make_binary(
              Op::Add,
              make_binary(Op::Mul, diff_node(n->b, coord),
                          make_unary(Op::Log, n->a)),
              make_binary(Op::Div,
                          make_binary(Op::Mul, n->b, diff_node(n->a, coord)),
                          n->a)));
    case Op::Sin:
      return make_binary(Op::Mul, make_unary(Op::Cos, n->a),
                         diff_node(n->a, coord));
    case Op::Cos:
      return make_unary(
          Op::Neg, make_binary(Op::Mul, make_unary(Op::Sin, n->a),
                               diff_node(n->a, coord)));
    case Op::Exp:
      return make_binary(Op::Mul, make_unary(Op::Exp, n->a),
                         diff_node(n->a, coord));
    case Op::Log:
      return make_binary(Op::Div, diff_node(n->a, coord), n->a);
    case Op::Sqrt:
      return make_binary(
          Op::Div, diff_node(n->a, coord),
          make_binary(Op::Mul, constant(2.0), make_unary(Op::Sqrt, n->a)));
  }
  return constant(0.0);
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& coords)
      : text_(text), coords_(coords) {}

  NodePtr parse() {
    NodePtr e = sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ExprError(msg, line, col);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr sum() {
    NodePtr e = term();
    for (;;) {
      if (accept('+')) {
        e = binary(Op::Add, e, term());
      } else if (accept('-')) {
        e = binary(Op::Sub, e, term());
      } else {
        return e;
      }
    }
  }

  NodePtr term() {
    NodePtr e = factor();
    for (;;) {
      if (accept('*')) {
        e = binary(Op::Mul, e, factor());
      } else if (accept('/')) {
        e = binary(Op::Div, e, factor());
      } else {
        return e;
      }
    }
  }

  NodePtr factor() {
    if (accept('-')) {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Neg;
      n->a = factor();
      return n;
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return binary(Op::Pow, base, factor());
    return base;
  }

  NodePtr atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[end])) ||
            text_[end] == '.' || text_[end] == 'e' || text_[end] == 'E' ||
            ((text_[end] == '+' || text_[end] == '-') && end > start &&
             (text_[end - 1] == 'e' || text_[end - 1] == 'E')))) {
      ++end;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text_.substr(start, end - start), &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ = start + used;
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = value;
    return n;
  }

  NodePtr ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name = text_.substr(start, pos_ - start);
    if (name == "pi") {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Const;
      n->value = M_PI;
      return n;
    }
    Op fn;
    if (name == "sin") fn = Op::Sin;
    else if (name == "cos") fn = Op::Cos;
    else if (name == "exp") fn = Op::Exp;
    else if (name == "log") fn = Op::Log;
    else if (name == "sqrt") fn = Op::Sqrt;
    else {
      for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (coords_[i] == name) {
          auto n = std::make_shared<ExprNode>();
          n->op = Op::Coord;
          n->coord = static_cast<int>(i);
          return n;
        }
      }
      pos_ = start;
      if (peek() == '(' || (pos_ + name.size() < text_.size() &&
                            text_[pos_ + name.size()] == '(')) {
        fail("unknown function '" + name + "'");
      }
      fail("unknown identifier '" + name + "'");
    }
    if (!accept('(')) fail("expected '(' after function name");
    auto n = std::make_shared<ExprNode>();
    n->op = fn;
    n->a = sum();
    if (!accept(')')) fail("expected ')'");
    return n;
  }

  static NodePtr binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  const std::string& text_;
  const std::vector<std::string>& coords_;
  std::size_t pos_ = 0;
};

}  // namespace
}  // namespace detail

double Expression::eval(const Vec& q) const {
  if (!root_) throw DomainError("Expression: evaluating an empty expression");
  return detail::eval_node(*root_, q);
}

Expression Expression::derivative(int coord) const {
  if (!root_) throw DomainError("Expression: differentiating an empty expression");
  Expression d;
  d.root_ = detail::diff_node(root_, coord);
  return d;
}

Expression parse_expression(const std::string& text,
                            const std::vector<std::string>& coords) {
  Expression e;
  e.root_ = detail::Parser(text, coords).parse();
  return e;
}

ScalarField make_scalar_field(const std::string& text,
                              const std::vector<std::string>& coords) {
  const Expression e = parse_expression(text, coords);
  const int n = static_cast<int>(coords.size());
  ScalarField f;
  f.dim = n;
  f.eval = [e](const Vec& q) { return e.eval(q); };
  std::vector<Expression> grads;
  grads.reserve(coords.size());
  for (int i = 0; i < n; ++i) grads.push_back(e.derivative(i));
  f.gradient = [grads, n](const Vec& q) -> Vec {
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = grads[i].eval(q);
    return out;
  };
  return f;
}

VectorField make_vector_field(const std::vector<std::string>& components,
                              const std::vector<std::string>& coords) {
  if (components.size() != coords.size()) {
    throw DimensionError("make_vector_field: " +
                         std::to_string(components.size()) +
                         " components over " + std::to_string(coords.size()) +
                         " coordinates");
  }
  std::vector<Expression> exprs;
  exprs.reserve(components.size());
  for (const std::string& c : components) {
    exprs.push_back(parse_expression(c, coords));
  }
  const int n = static_cast<int>(coords.size());
  VectorField X;
  X.dim = n;
  X.eval = [exprs, n](const Vec& q) -> Vec {
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = exprs[i].eval(q);
    return out;
  };
  std::vector<std::vector<Expression>> jac(exprs.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) jac[i].push_back(exprs[i].derivative(j));
  }
  X.jacobian = [jac, n](const Vec& q) -> Mat {
    Mat out(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(i, j) = jac[i][j].eval(q);
    }
    return out;
  };
  return X;
}

MetricField make_metric_field(
    const std::vector<std::vector<std::string>>& entries,
    const std::vector<std::string>& coords) {
  const int n = static_cast<int>(coords.size());
  if (static_cast<int>(entries.size()) != n) {
    throw DimensionError("make_metric_field: row count mismatch");
  }
  std::vector<std::vector<Expression>> exprs(entries.size());
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(entries[i].size()) != n) {
      throw DimensionError("make_metric_field: column count mismatch in row " +
                           std::to_string(i));
    }
    for (int j = 0; j < n; ++j) {
      exprs[i].push_back(parse_expression(entries[i][j], coords));
    }
  }

  MetricField g;
  g.dim = n;
  g.eval = [exprs, n](const Vec& q) -> Mat {
    Mat out(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(i, j) = exprs[i][j].eval(q);
    }
    // Mirror to keep symmetry bit-exact; asymmetry is rejected below.
    return 0.5 * (out + out.transpose());
  };
  std::vector<std::vector<std::vector<Expression>>> parts(exprs.size());
  for (int i = 0; i < n; ++i) {
    parts[i].resize(n);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        parts[i][j].push_back(exprs[i][j].derivative(k));
      }
    }
  }
  g.partials = [parts, n](const Vec& q) -> std::vector<Mat> {
    std::vector<Mat> out(n, Mat(n, n));
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) out[k](i, j) = parts[i][j][k].eval(q);
      }
      out[k] = (0.5 * (out[k] + out[k].transpose())).eval();
    }
    return out;
  };

  // Symmetry invariant, probed on a deterministic sample box away from the
  // usual coordinate singularities.
  auto raw = [&](const Vec& q) -> Mat {
    Mat out(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(i, j) = exprs[i][j].eval(q);
    }
    return out;
  };
  HaltonSampler sampler(0);
  int probed = 0;
  for (int attempt = 0; attempt < 64 && probed < 8; ++attempt) {
    Vec q = sampler.next(n);
    for (int i = 0; i < n; ++i) q[i] = 0.25 + 1.5 * q[i];
    Mat m;
    try {
      m = raw(q);
    } catch (const std::exception&) {
      continue;
    }
    if (!m.allFinite()) continue;
    ++probed;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
      throw DomainError("make_metric_field: symmetry invariant violated");
    }
  }
  return g;
}

}  // namespace sundman
