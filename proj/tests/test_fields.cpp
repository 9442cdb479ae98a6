#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sundman/expr.hpp"
#include "sundman/fields.hpp"
#include "sundman/kepler.hpp"

using namespace sundman;

namespace {

VectorField rotation2d() { return make_vector_field({"-y", "x"}, {"x", "y"}); }

ScalarField constant1(int dim, double c) {
  ScalarField f;
  f.dim = dim;
  f.positive = c > 0.0;
  f.eval = [c](const Vec&) { return c; };
  f.gradient = [dim](const Vec&) { return Vec::Zero(dim); };
  return f;
}

Vec pt(double x, double y) {
  Vec q(2);
  q << x, y;
  return q;
}

}  // namespace

TEST_CASE("scale_field pointwise product") {
  VectorField X = make_vector_field({"1"}, {"x"});
  ScalarField f = make_scalar_field("x", {"x"});
  f.positive = true;
  VectorField fX = scale_field(X, f);
  CHECK(fX(Vec::Constant(1, 2.0))[0] == 2.0);

  // f == 1 reproduces X.
  VectorField same = scale_field(rotation2d(), constant1(2, 1.0));
  CHECK((same(pt(0.3, -1.2)) - rotation2d()(pt(0.3, -1.2))).norm() == 0.0);

  // dimension mismatch
  CHECK_THROWS_AS(scale_field(rotation2d(), constant1(3, 1.0)),
                  DimensionError);

  // nonpositive factor caught at evaluation
  VectorField bad = scale_field(X, f);
  CHECK_THROWS_AS(bad(Vec::Constant(1, -2.0)), DomainError);
}

TEST_CASE("integrate_flow closed-form checks") {
  VectorField unit = make_vector_field({"1"}, {"x"});
  Trajectory t1 = integrate_flow(unit, Vec::Zero(1), 1.0);
  CHECK(t1.at(1.0)[0] == doctest::Approx(1.0).epsilon(1e-12));

  Trajectory rot = integrate_flow(rotation2d(), pt(1, 0), 2.0 * M_PI);
  CHECK((rot.at(2.0 * M_PI) - pt(1, 0)).norm() <= 1e-8);

  VectorField harmonic = make_vector_field({"v", "-q"}, {"q", "v"});
  Trajectory h = integrate_flow(harmonic, pt(1, 0), M_PI);
  CHECK((h.at(M_PI) - pt(-1, 0)).norm() <= 1e-9);
}

TEST_CASE("time_map unit and constant factors") {
  Trajectory rot = integrate_flow(rotation2d(), pt(1, 0), 3.0);
  const auto tau1 = time_map(rot, constant1(2, 1.0));
  const auto tau3 = time_map(rot, constant1(2, 3.0));
  for (std::size_t i = 0; i < rot.size(); ++i) {
    CHECK(tau1[i] == doctest::Approx(rot.param(i)).epsilon(1e-12));
    CHECK(tau3[i] == doctest::Approx(rot.param(i) / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("time_map on the circular Kepler orbit is the identity") {
  // l = k = 1 puts the effective-potential minimum at r = 1; starting there
  // keeps r constant, so f = r gives tau(t) = t.
  kepler::KeplerParams p{1.0, 1.0, -0.5};
  SecondOrderField radial = kepler::radial_field(p);
  Trajectory traj =
      integrate_sode(radial, Vec::Constant(1, 1.0), Vec::Zero(1), 5.0);
  ScalarField f;
  f.dim = 2;
  f.positive = true;
  f.eval = [](const Vec& s) { return s[0]; };
  const auto tau = time_map(traj, f);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(tau[i] == doctest::Approx(traj.param(i)).epsilon(1e-9));
  }
}

TEST_CASE("reparametrize the exponential flow by f(x) = x") {
  VectorField X = make_vector_field({"x"}, {"x"});
  ScalarField f = make_scalar_field("x", {"x"});
  f.positive = true;
  Trajectory traj = integrate_flow(X, Vec::Constant(1, 1.0), 1.5);
  Trajectory re = reparametrize(traj, f);
  // x(t) = e^t, tau = 1 - e^{-t}, so x(tau) = 1/(1 - tau).
  for (std::size_t i = 0; i < re.size(); ++i) {
    const double tau = re.param(i);
    CHECK(re.state(i)[0] ==
          doctest::Approx(1.0 / (1.0 - tau)).epsilon(1e-9));
  }
  // f == 1 keeps parameters.
  Trajectory same = reparametrize(traj, constant1(1, 1.0));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(same.param(i) == doctest::Approx(traj.param(i)).epsilon(1e-12));
  }
}

TEST_CASE("orbit_distance") {
  Trajectory a = integrate_flow(rotation2d(), pt(1, 0), 2.0 * M_PI);
  CHECK(orbit_distance(a, a) <= 1e-12);

  // Same circle at double speed: same point set.
  VectorField twice = scale_field(rotation2d(), constant1(2, 2.0));
  Trajectory b = integrate_flow(twice, pt(1, 0), 2.0 * M_PI);
  CHECK(orbit_distance(a, b) <= 1e-8);

  // Concentric circles radii 1 and 2.
  Trajectory c = integrate_flow(rotation2d(), pt(2, 0), 2.0 * M_PI);
  CHECK(orbit_distance(a, c) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("lie_bracket closed forms") {
  VectorField delta = make_vector_field({"x"}, {"x"});
  VectorField quad = make_vector_field({"x^2"}, {"x"});
  VectorField constf = make_vector_field({"5"}, {"x"});

  CHECK(lie_bracket(quad, quad, Vec::Constant(1, 1.3)).norm() <= 1e-12);
  CHECK(lie_bracket(delta, quad, Vec::Constant(1, 2.0))[0] ==
        doctest::Approx(4.0).epsilon(1e-9));
  CHECK(lie_bracket(delta, constf, Vec::Constant(1, 0.7))[0] ==
        doctest::Approx(-5.0).epsilon(1e-9));
}

TEST_CASE("lie_bracket antisymmetry and bilinearity") {
  VectorField X = make_vector_field({"x*y", "sin(x)"}, {"x", "y"});
  VectorField Y = make_vector_field({"y^2", "x+y"}, {"x", "y"});
  VectorField X2 = scale_field(X, constant1(2, 2.0));
  for (const Vec& q : annulus_samples(2, 20)) {
    const Vec xy = lie_bracket(X, Y, q);
    const Vec yx = lie_bracket(Y, X, q);
    CHECK((xy + yx).norm() <= 1e-10 * std::max(1.0, xy.norm()));
    const Vec x2y = lie_bracket(X2, Y, q);
    CHECK((x2y - 2.0 * xy).norm() <= 1e-8);
  }
}

TEST_CASE("divergence") {
  VolumeForm omega;
  omega.dim = 2;
  omega.density = constant1(2, 1.0);

  VectorField radial = make_vector_field({"x", "y"}, {"x", "y"});
  CHECK(divergence(radial, omega, pt(0.4, -1.0)) ==
        doctest::Approx(2.0).epsilon(1e-9));
  CHECK(divergence(rotation2d(), omega, pt(0.4, -1.0)) ==
        doctest::Approx(0.0).epsilon(1e-9));

  // Jacobi multiplier: f = 1/x^2 makes x^2 d/dx divergence free.
  VolumeForm omega1;
  omega1.dim = 1;
  omega1.density = constant1(1, 1.0);
  VectorField quad = make_vector_field({"x^2"}, {"x"});
  ScalarField f = make_scalar_field("1/x^2", {"x"});
  f.positive = true;
  VectorField fX = scale_field(quad, f);
  CHECK(divergence(fX, omega1, Vec::Constant(1, 0.8)) ==
        doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("divergence product rule under scaling") {
  VolumeForm omega;
  omega.dim = 2;
  omega.density = constant1(2, 1.0);
  VectorField X = make_vector_field({"x*y", "x-y^2"}, {"x", "y"});
  ScalarField f = make_scalar_field("1+x^2/2", {"x", "y"});
  f.positive = true;
  VectorField fX = scale_field(X, f);
  for (const Vec& q : annulus_samples(2, 30)) {
    const double lhs = divergence(fX, omega, q);
    const double rhs = f(q) * divergence(X, omega, q) + f.grad(q).dot(X(q));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
  }
}

TEST_CASE("first_integral_residual") {
  ScalarField F = make_scalar_field("x^2+y^2", {"x", "y"});
  const auto samples = annulus_samples(2, 50);
  CHECK(first_integral_residual(F, rotation2d(), samples) <= 1e-10);

  ScalarField f = make_scalar_field("1+x^2/2", {"x", "y"});
  f.positive = true;
  CHECK(first_integral_residual(F, scale_field(rotation2d(), f), samples) <=
        1e-8);

  ScalarField Fx = make_scalar_field("x", {"x"});
  VectorField unit = make_vector_field({"1"}, {"x"});
  CHECK(first_integral_residual(Fx, unit, annulus_samples(1, 20)) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("reparametrization keeps the orbit and the round trip") {
  VectorField X = rotation2d();
  ScalarField f = make_scalar_field("1+x^2/2", {"x", "y"});
  f.positive = true;

  Trajectory base = integrate_flow(X, pt(1, 0), 2.0 * M_PI);
  const double tau_span = time_map(base, f).back();
  Trajectory scaled = integrate_flow(scale_field(X, f), pt(1, 0), tau_span);
  CHECK(orbit_distance(base, scaled) <= 1e-8);

  // Node data of the reparametrized curve: params follow the time map and
  // derivatives rescale by f.
  Trajectory re = reparametrize(base, f);
  const auto taus = time_map(base, f);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(re.param(i) == doctest::Approx(taus[i]).epsilon(1e-12));
    CHECK((re.deriv(i) - f(base.state(i)) * base.deriv(i)).norm() <= 1e-12);
  }
}

TEST_CASE("guard violation truncates and flags") {
  VectorField X = make_vector_field({"-1"}, {"x"});
  X.domain_guard = [](const Vec& q) { return q[0] > 0.0; };
  Trajectory traj = integrate_flow(X, Vec::Constant(1, 1.0), 5.0);
  CHECK(traj.truncated());
  CHECK(traj.param_back() < 5.0);
  CHECK(traj.state(traj.size() - 1)[0] > 0.0);
}
