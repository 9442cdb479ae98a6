#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sundman/expr.hpp"

using namespace sundman;

namespace {

double ev(const std::string& text, double x, double y = 0.0) {
  const Expression e = parse_expression(text, {"x", "y"});
  Vec q(2);
  q << x, y;
  return e.eval(q);
}

}  // namespace

TEST_CASE("arithmetic and precedence") {
  CHECK(ev("2+3*4", 0) == 14.0);
  CHECK(ev("(2+3)*4", 0) == 20.0);
  CHECK(ev("2^3^2", 0) == 512.0);  // right associative
  CHECK(ev("-x^2", 3) == -9.0);
  CHECK(ev("7/2", 0) == 3.5);
  CHECK(ev("x-y-1", 5, 2) == 2.0);
  CHECK(ev("2*pi", 0) == doctest::Approx(2.0 * M_PI));
  CHECK(ev("1.5e2+.5", 0) == 150.5);
}

TEST_CASE("functions") {
  CHECK(ev("sin(pi/2)", 0) == doctest::Approx(1.0));
  CHECK(ev("cos(0)", 0) == 1.0);
  CHECK(ev("exp(log(x))", 2.5) == doctest::Approx(2.5));
  CHECK(ev("sqrt(x^2+y^2)", 3, 4) == doctest::Approx(5.0));
}

TEST_CASE("parse errors carry position") {
  CHECK_THROWS_AS(parse_expression("x+", {"x"}), ExprError);
  CHECK_THROWS_AS(parse_expression("x y", {"x", "y"}), ExprError);
  CHECK_THROWS_AS(parse_expression("tan(x)", {"x"}), ExprError);
  CHECK_THROWS_AS(parse_expression("z+1", {"x"}), ExprError);
  try {
    parse_expression("x + tan(x)", {"x"});
    FAIL("expected ExprError");
  } catch (const ExprError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 5);
    CHECK(std::string(e.what()).find("tan") != std::string::npos);
  }
}

TEST_CASE("symbolic derivative matches finite differences") {
  const std::vector<std::string> coords = {"x", "y"};
  const std::vector<std::string> cases = {
      "x^2*y", "sin(x)*cos(y)", "exp(x*y)", "log(1+x^2)", "sqrt(1+y^2)",
      "x^y",   "1/(2+x)",       "-x*y+3"};
  for (const std::string& text : cases) {
    const Expression e = parse_expression(text, coords);
    for (int k = 0; k < 2; ++k) {
      const Expression d = e.derivative(k);
      Vec q(2);
      q << 0.7, 1.3;
      const double h = 1e-6;
      Vec qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;
      const double fd = (e.eval(qp) - e.eval(qm)) / (2.0 * h);
      CHECK(d.eval(q) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("scalar field builder exposes an analytic gradient") {
  const ScalarField f = make_scalar_field("x^2+3*y", {"x", "y"});
  Vec q(2);
  q << 2.0, 1.0;
  CHECK(f(q) == 7.0);
  REQUIRE(f.gradient);
  const Vec g = f.gradient(q);
  CHECK(g[0] == 4.0);
  CHECK(g[1] == 3.0);
}

TEST_CASE("vector field builder") {
  const VectorField X = make_vector_field({"-y", "x"}, {"x", "y"});
  Vec q(2);
  q << 1.0, 2.0;
  const Vec v = X(q);
  CHECK(v[0] == -2.0);
  CHECK(v[1] == 1.0);
  REQUIRE(X.jacobian);
  const Mat J = X.jacobian(q);
  CHECK(J(0, 1) == -1.0);
  CHECK(J(1, 0) == 1.0);
  CHECK(J(0, 0) == 0.0);

  CHECK_THROWS_AS(make_vector_field({"x"}, {"x", "y"}), DimensionError);
}

TEST_CASE("metric builder enforces symmetry and exposes partials") {
  CHECK_THROWS_AS(
      make_metric_field({{"1", "x"}, {"0", "1"}}, {"x", "y"}), DomainError);

  const MetricField g =
      make_metric_field({{"1", "0"}, {"0", "r^2"}}, {"r", "th"});
  Vec q(2);
  q << 2.0, 0.3;
  const Mat m = g(q);
  CHECK(m(1, 1) == 4.0);
  REQUIRE(g.partials);
  const auto dg = g.partials(q);
  CHECK(dg[0](1, 1) == 4.0);  // d(r^2)/dr = 2r
  CHECK(dg[1](1, 1) == 0.0);
}
