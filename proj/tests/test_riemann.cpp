#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sundman/expr.hpp"
#include "sundman/riemann.hpp"

using namespace sundman;

namespace {

MetricField euclidean(int n) {
  MetricField g;
  g.dim = n;
  g.eval = [n](const Vec&) { return Mat::Identity(n, n); };
  g.partials = [n](const Vec&) { return std::vector<Mat>(n, Mat::Zero(n, n)); };
  return g;
}

MetricField polar() {
  return make_metric_field({{"1", "0"}, {"0", "r^2"}}, {"r", "th"});
}

MetricField sphere() {
  return make_metric_field({{"1", "0"}, {"0", "sin(th)^2"}}, {"th", "ph"});
}

Vec pt(double a, double b) {
  Vec q(2);
  q << a, b;
  return q;
}

std::vector<Vec> safe_samples(int n) {
  // Quasi-random points with every coordinate in [0.4, 2.0]; keeps polar and
  // sphere charts away from their degeneracies.
  HaltonSampler sampler(0);
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    Vec q = sampler.next(2);
    out.push_back(0.4 * Vec::Ones(2) + 1.6 * q);
  }
  return out;
}

}  // namespace

TEST_CASE("christoffel closed forms") {
  const auto gamma_e = christoffel(euclidean(2), pt(0.3, -1.0));
  for (const Mat& m : gamma_e) CHECK(m.cwiseAbs().maxCoeff() <= 1e-12);

  const auto gp = christoffel(polar(), pt(2.0, 0.5));
  CHECK(gp[0](1, 1) == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(gp[1](0, 1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(gp[1](1, 0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(gp[0](0, 0)) <= 1e-10);

  const auto gs = christoffel(sphere(), pt(M_PI / 4.0, 1.0));
  CHECK(gs[0](1, 1) == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(gs[1](0, 1) == doctest::Approx(1.0).epsilon(1e-10));

  // Finite-difference partials agree to FD accuracy.
  MetricField polar_fd = polar();
  polar_fd.partials = nullptr;
  const auto gp_fd = christoffel(polar_fd, pt(2.0, 0.5));
  CHECK(gp_fd[0](1, 1) == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("christoffel storage is symmetric bit for bit") {
  MetricField g = sphere();
  g.partials = nullptr;
  const auto gamma = christoffel(g, pt(1.1, 0.4));
  for (const Mat& m : gamma) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) CHECK(m(a, b) == m(b, a));
    }
  }
}

TEST_CASE("christoffel reports indefinite metrics") {
  MetricField g;
  g.dim = 2;
  g.eval = [](const Vec&) {
    Mat m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
  };
  CHECK_THROWS_AS(christoffel(g, pt(0, 0)), DomainError);
}

TEST_CASE("covariant_derivative") {
  const VectorField rot = make_vector_field({"-y", "x"}, {"x", "y"});
  const Vec c = covariant_derivative(euclidean(2), rot, rot, pt(1, 0));
  CHECK(c[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(c[1]) <= 1e-9);

  const VectorField constf = make_vector_field({"2", "1"}, {"x", "y"});
  CHECK(covariant_derivative(euclidean(2), constf, constf, pt(0.5, 0.5))
            .norm() <= 1e-10);

  // Sphere, X = Y = d/dphi at theta = pi/4: components Gamma^i_22.
  const VectorField dphi = make_vector_field({"0", "1"}, {"th", "ph"});
  const Vec s = covariant_derivative(sphere(), dphi, dphi, pt(M_PI / 4.0, 0.3));
  CHECK(s[0] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(std::abs(s[1]) <= 1e-9);
}

TEST_CASE("geodesics") {
  // Euclidean: straight lines.
  Vec q0 = pt(0.0, 1.0), v0 = pt(1.0, 2.0);
  Trajectory line = integrate_sode(geodesic_field(euclidean(2)), q0, v0, 2.0);
  CHECK((line.at(2.0).head(2) - (q0 + 2.0 * v0)).norm() <= 1e-9);

  // Equatorial great circle: theta stays at pi/2.
  Trajectory eq = integrate_sode(geodesic_field(sphere()), pt(M_PI / 2.0, 0.0),
                                 pt(0.0, 1.0), 3.0);
  for (std::size_t i = 0; i < eq.size(); ++i) {
    CHECK(std::abs(eq.state(i)[0] - M_PI / 2.0) <= 1e-9);
  }

  // Polar-plane geodesic through (1, 0) with velocity along d/dtheta maps to
  // the Cartesian line x = 1.
  Trajectory pol = integrate_sode(geodesic_field(polar()), pt(1.0, 0.0),
                                  pt(0.0, 1.0), 1.0);
  for (std::size_t i = 0; i < pol.size(); ++i) {
    const double r = pol.state(i)[0], th = pol.state(i)[1];
    CHECK(r * std::cos(th) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("arc_length") {
  // Unit-speed straight line.
  std::vector<double> params;
  std::vector<Vec> states, derivs;
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    params.push_back(t);
    Vec s(4);
    s << t, 0.0, 1.0, 0.0;
    Vec d(4);
    d << 1.0, 0.0, 0.0, 0.0;
    states.push_back(s);
    derivs.push_back(d);
  }
  Trajectory line(ParamLabel::Time, params, states, derivs);
  CHECK(arc_length(euclidean(2), line) == doctest::Approx(1.0).epsilon(1e-10));

  // Circle of radius 2, Euclidean: length 4 pi; position-only curve with
  // finite-difference velocities.
  const VectorField rot = make_vector_field({"-y", "x"}, {"x", "y"});
  Trajectory circle = integrate_flow(rot, pt(2.0, 0.0), 2.0 * M_PI);
  CHECK(arc_length(euclidean(2), circle, true) ==
        doctest::Approx(4.0 * M_PI).epsilon(1e-8));

  // Same circle in the polar chart: r constant, theta sweeps 2 pi.
  std::vector<double> p2;
  std::vector<Vec> s2, d2;
  for (int i = 0; i <= 200; ++i) {
    const double t = 2.0 * M_PI * i / 200.0;
    p2.push_back(t);
    s2.push_back(pt(2.0, t));
    d2.push_back(pt(0.0, 1.0));
  }
  Trajectory circle_polar(ParamLabel::Time, p2, s2, d2);
  CHECK(arc_length(polar(), circle_polar, true) ==
        doctest::Approx(4.0 * M_PI).epsilon(1e-8));
}

TEST_CASE("kinetic_energy") {
  CHECK(kinetic_energy(euclidean(2), pt(0, 0), pt(0, 0)) == 0.0);
  CHECK(kinetic_energy(euclidean(2), pt(1, 1), pt(3, 4)) ==
        doctest::Approx(12.5));
  CHECK(kinetic_energy(polar(), pt(2.0, 0.1), pt(0.0, 1.0)) ==
        doctest::Approx(2.0));
}

TEST_CASE("conformal_rescale") {
  ScalarField zero = make_scalar_field("0", {"x", "y"});
  const MetricField same = conformal_rescale(euclidean(2), zero);
  CHECK((same(pt(0.3, 0.4)) - Mat::Identity(2, 2)).norm() <= 1e-12);

  ScalarField half_log4 = make_scalar_field("log(4)/2", {"x", "y"});
  const MetricField four = conformal_rescale(euclidean(2), half_log4);
  CHECK(four(pt(1, 1))(0, 0) == doctest::Approx(4.0).epsilon(1e-12));

  ScalarField q1 = make_scalar_field("x", {"x", "y"});
  const MetricField at0 = conformal_rescale(euclidean(2), q1);
  CHECK((at0(pt(0.0, 0.7)) - Mat::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("conformal_christoffel closed form and consistency") {
  ScalarField q1 = make_scalar_field("x", {"x", "y"});
  const auto gb = conformal_christoffel(euclidean(2), q1, pt(0.4, -0.2));
  CHECK(gb[0](0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(gb[0](1, 1) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(gb[1](0, 1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(gb[0](0, 1)) <= 1e-10);
  CHECK(std::abs(gb[1](0, 0)) <= 1e-10);
  CHECK(std::abs(gb[1](1, 1)) <= 1e-10);

  // Sphere metric with phi = phi(theta): two computations agree.
  ScalarField phi = make_scalar_field("sin(th)/2", {"th", "ph"});
  const MetricField gbar = conformal_rescale(sphere(), phi);
  for (const Vec& q : safe_samples(100)) {
    const auto direct = christoffel(gbar, q);
    const auto composed = conformal_christoffel(sphere(), phi, q);
    for (int i = 0; i < 2; ++i) {
      CHECK((direct[i] - composed[i]).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("conformal_nabla_residual") {
  ScalarField constphi = make_scalar_field("2", {"x", "y"});
  const VectorField X = make_vector_field({"0", "1"}, {"x", "y"});
  const auto samples = annulus_samples(2, 50);
  CHECK(conformal_nabla_residual(euclidean(2), constphi, X, X, samples) <=
        1e-8);

  ScalarField q1 = make_scalar_field("x", {"x", "y"});
  CHECK(conformal_nabla_residual(euclidean(2), q1, X, X, samples) <= 1e-6);

  MetricField g =
      make_metric_field({{"1+x^2/4", "0.1"}, {"0.1", "1+y^2/4"}}, {"x", "y"});
  const VectorField Y = make_vector_field({"x+y", "x-2*y"}, {"x", "y"});
  CHECK(conformal_nabla_residual(g, q1, Y, X, samples) <= 1e-5);
}

TEST_CASE("gradient") {
  ScalarField V = make_scalar_field("(x^2+y^2)/2", {"x", "y"});
  CHECK((gradient(euclidean(2), V, pt(0.7, -0.3)) - pt(0.7, -0.3)).norm() <=
        1e-10);

  MetricField g4 = conformal_rescale(euclidean(2), make_scalar_field("log(2)", {"x", "y"}));
  ScalarField Vx = make_scalar_field("x", {"x", "y"});
  const Vec gr = gradient(g4, Vx, pt(0.2, 0.2));
  CHECK(gr[0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(std::abs(gr[1]) <= 1e-12);

  ScalarField Vr = make_scalar_field("r", {"r", "th"});
  const Vec gp = gradient(polar(), Vr, pt(2.0, 0.4));
  CHECK(gp[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(gp[1]) <= 1e-12);
}

TEST_CASE("killing_residual") {
  CHECK(killing_residual(euclidean(2),
                         make_vector_field({"1", "0"}, {"x", "y"}),
                         pt(0.5, 1.0)) <= 1e-10);
  CHECK(killing_residual(euclidean(2),
                         make_vector_field({"-y", "x"}, {"x", "y"}),
                         pt(0.5, 1.0)) <= 1e-9);
  CHECK(killing_residual(euclidean(2),
                         make_vector_field({"x", "0"}, {"x", "y"}),
                         pt(0.5, 1.0)) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("autoparallel_residual") {
  CHECK(autoparallel_residual(euclidean(2),
                              make_vector_field({"1", "2"}, {"x", "y"}),
                              pt(0.3, 0.9)) <= 1e-10);
  CHECK(autoparallel_residual(euclidean(2),
                              make_vector_field({"-y", "x"}, {"x", "y"}),
                              pt(1.0, 0.0)) ==
        doctest::Approx(1.0).epsilon(1e-9));
  MetricField gconst =
      make_metric_field({{"2", "0.3"}, {"0.3", "1"}}, {"x", "y"});
  CHECK(autoparallel_residual(gconst,
                              make_vector_field({"1", "0"}, {"x", "y"}),
                              pt(0.3, 0.9)) <= 1e-10);
}

TEST_CASE("pregeodesic_factor") {
  const auto samples = annulus_samples(2, 100);

  const PregeodesicEstimate con = pregeodesic_factor(
      euclidean(2), make_vector_field({"1", "1"}, {"x", "y"}), samples);
  CHECK(con.residual <= 1e-9);
  for (double f : con.values) CHECK(std::abs(f) <= 1e-9);

  const PregeodesicEstimate rad = pregeodesic_factor(
      euclidean(2), make_vector_field({"x", "y"}, {"x", "y"}), samples);
  CHECK(rad.residual <= 1e-8);
  for (double f : rad.values) CHECK(f == doctest::Approx(1.0).epsilon(1e-7));

  const PregeodesicEstimate rot = pregeodesic_factor(
      euclidean(2), make_vector_field({"-y", "x"}, {"x", "y"}), samples);
  CHECK(rot.residual >= 0.4);  // nabla_X X is orthogonal to X
}

TEST_CASE("geodesic_rescaling") {
  const VectorField radial = make_vector_field({"x", "y"}, {"x", "y"});
  ScalarField one = make_scalar_field("1", {"x", "y"});

  // f == 0: lambda stays 1.
  const VectorField constf = make_vector_field({"1", "0"}, {"x", "y"});
  ScalarField zero = make_scalar_field("0", {"x", "y"});
  const GeodesicRescaling triv =
      geodesic_rescaling(euclidean(2), constf, zero, pt(1.0, 0.0), 1.0);
  for (double l : triv.lambda) CHECK(l == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(triv.autoparallel_residual <= 1e-8);

  // X = r d/dr with f == 1: lambda(r) = 1/r along the ray.
  const GeodesicRescaling ray =
      geodesic_rescaling(euclidean(2), radial, one, pt(1.0, 0.0), 1.0);
  for (std::size_t i = 0; i < ray.flow.size(); ++i) {
    const double r = ray.flow.state(i).norm();
    CHECK(ray.lambda[i] == doctest::Approx(1.0 / r).epsilon(1e-8));
  }
  CHECK(ray.single_valued);
  CHECK(ray.autoparallel_residual <= 1e-6);

  // Periodic orbit with constant f: lambda returns with a mismatch.
  const VectorField rot = make_vector_field({"-y", "x"}, {"x", "y"});
  const GeodesicRescaling per = geodesic_rescaling(
      euclidean(2), rot, one, pt(1.0, 0.0), 2.0 * M_PI + 0.5);
  CHECK_FALSE(per.single_valued);
}

TEST_CASE("geodesic speed is conserved") {
  const Vec q0 = pt(1.0, 0.2), v0 = pt(0.3, 0.8);
  const MetricField g = sphere();
  Trajectory traj = integrate_sode(geodesic_field(g), q0, v0, 10.0);
  const double c0 = v0.dot(g(q0) * v0);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec q = traj.state(i).head(2), v = traj.state(i).tail(2);
    CHECK(std::abs(v.dot(g(q) * v) - c0) / c0 <= 1e-7);
  }
  // The projected curve satisfies the geodesic equation.
  CHECK(geodesic_residual(g, traj.positions(2)) <= 1e-5);
}

TEST_CASE("metric compatibility") {
  MetricField g = make_metric_field(
      {{"2+sin(x)", "0.1"}, {"0.1", "1+y^2/4"}}, {"x", "y"});
  const VectorField X = make_vector_field({"x+y", "1"}, {"x", "y"});
  const VectorField Y = make_vector_field({"y", "x"}, {"x", "y"});
  const VectorField Z = make_vector_field({"1", "x-y"}, {"x", "y"});
  for (const Vec& q : annulus_samples(2, 100)) {
    // L_X(g(Y, Z)) by central differences along the flow direction.
    auto gyz = [&](const Vec& p) { return (Y(p).transpose() * g(p) * Z(p))(0); };
    const Vec x = X(q);
    const double h = 1e-6;
    const double lie = (gyz(q + h * x) - gyz(q - h * x)) / (2.0 * h);
    const double rhs =
        (covariant_derivative(g, X, Y, q).transpose() * g(q) * Z(q))(0) +
        (Y(q).transpose() * g(q) * covariant_derivative(g, X, Z, q))(0);
    CHECK(std::abs(lie - rhs) <= 1e-5);
  }
}

TEST_CASE("killing plus constant length implies autoparallel") {
  MetricField gconst =
      make_metric_field({{"2", "0.3"}, {"0.3", "1"}}, {"x", "y"});
  const VectorField X = make_vector_field({"1", "0"}, {"x", "y"});
  double k = 0.0, a = 0.0;
  double len0 = (X(pt(0.5, 0.5)).transpose() * gconst(pt(0.5, 0.5)) *
                 X(pt(0.5, 0.5)))(0);
  for (const Vec& q : annulus_samples(2, 50)) {
    k = std::max(k, killing_residual(gconst, X, q));
    a = std::max(a, autoparallel_residual(gconst, X, q));
    CHECK(std::abs((X(q).transpose() * gconst(q) * X(q))(0) - len0) <= 1e-12);
  }
  CHECK(k <= 1e-8);
  CHECK(a <= 1e-6);
}

TEST_CASE("pregeodesic with constant length has vanishing factor") {
  MetricField gconst =
      make_metric_field({{"2", "0.3"}, {"0.3", "1"}}, {"x", "y"});
  const VectorField X = make_vector_field({"1", "2"}, {"x", "y"});
  const auto samples = annulus_samples(2, 50);
  const PregeodesicEstimate est = pregeodesic_factor(gconst, X, samples);
  CHECK(est.residual <= 1e-8);
  for (double f : est.values) CHECK(std::abs(f) <= 1e-8);
}

TEST_CASE("affine reparametrization leaves the geodesic equation intact") {
  const MetricField g = sphere();
  Trajectory traj =
      integrate_sode(geodesic_field(g), pt(1.0, 0.2), pt(0.3, 0.8), 10.0);
  // Constant xi = 2 rescale.
  std::vector<double> taus, scales;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    taus.push_back(traj.param(i) / 2.0);
    scales.push_back(2.0);
  }
  Trajectory re = traj.with_params(ParamLabel::Tau, taus, scales);
  CHECK(geodesic_residual(g, re.positions(2), 100, 0.05) <= 1e-4);
}
