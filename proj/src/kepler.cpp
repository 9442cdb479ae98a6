#include "sundman/kepler.hpp"

#include <cmath>

namespace sundman {
namespace kepler {

namespace {

ScalarField radius_factor() {
  // Sundman factor f = r on the (r, rdot) state space.
  ScalarField f;
  f.dim = 2;
  f.positive = true;
  f.eval = [](const Vec& s) { return s[0]; };
  f.gradient = [](const Vec&) -> Vec {
    Vec g(2);
    g << 1.0, 0.0;
    return g;
  };
  return f;
}

// Refine a sign change of rdot in [a, b] by bisection on dense output.
double bisect_rdot_zero(const Trajectory& traj, double a, double b) {
  double fa = traj.at(a)[1];
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(b)); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = traj.at(m)[1];
    if ((fa <= 0.0) == (fm <= 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> rdot_zeros(const Trajectory& traj) {
  std::vector<double> zeros;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double f0 = traj.state(i - 1)[1];
    const double f1 = traj.state(i)[1];
    if (f0 == 0.0) continue;  // node zero counted from the other side
    if ((f0 < 0.0) != (f1 < 0.0)) {
      zeros.push_back(bisect_rdot_zero(traj, traj.param(i - 1), traj.param(i)));
    }
  }
  return zeros;
}

// tau at an arbitrary t, from the node map plus local quadrature.
double tau_at(const Trajectory& traj, const std::vector<double>& tau_nodes,
              double t) {
  std::size_t j = 0;
  while (j + 1 < traj.size() && traj.param(j + 1) <= t) ++j;
  const double extra = integrate_adaptive(
      [&](double s) { return 1.0 / traj.at(s)[0]; }, traj.param(j), t, 1e-13);
  return tau_nodes[j] + extra;
}

}  // namespace

double effective_potential(const KeplerParams& p, double r) {
  return -p.k / r + p.l * p.l / (2.0 * r * r);
}

double KeplerEllipse::r(double tau) const {
  return A * (1.0 - e * std::cos(omega * tau));
}

double KeplerEllipse::t(double tau) const {
  return A * (tau - (e / omega) * std::sin(omega * tau));
}

SecondOrderField radial_field(const KeplerParams& p) {
  if (!(p.k > 0.0)) throw DomainError("radial_field: k must be > 0");
  SecondOrderField sode;
  sode.dim = 1;
  sode.domain_guard = [](const Vec& q) { return q[0] > 0.0; };
  const double k = p.k, l = p.l;
  sode.rhs = [k, l](const Vec& q, const Vec&) -> Vec {
    const double r = q[0];
    return Vec::Constant(1, l * l / (r * r * r) - k / (r * r));
  };
  return sode;
}

SecondOrderField linearized_field(const KeplerParams& p) {
  SecondOrderField sode;
  sode.dim = 1;
  const double k = p.k, E = p.E;
  sode.rhs = [k, E](const Vec& q, const Vec&) -> Vec {
    return Vec::Constant(1, 2.0 * E * q[0] + k);
  };
  return sode;
}

KeplerEllipse analytic_ellipse(const KeplerParams& p) {
  if (!(p.E < 0.0)) {
    throw DomainError("analytic_ellipse: elliptic branch requires E < 0");
  }
  if (p.l == 0.0) {
    throw DomainError("analytic_ellipse: degenerate orbit with l = 0");
  }
  const double vmin = -p.k * p.k / (2.0 * p.l * p.l);
  if (p.E < vmin - 1e-14 * std::abs(vmin)) {
    throw DomainError("analytic_ellipse: E below the effective-potential minimum");
  }
  KeplerEllipse ell;
  ell.A = p.k / (2.0 * std::abs(p.E));
  const double e2 = 1.0 - p.l * p.l / (p.k * ell.A);
  ell.e = std::sqrt(std::max(e2, 0.0));
  ell.omega = std::sqrt(2.0 * std::abs(p.E));
  return ell;
}

LinearizationReport linearization_check(const KeplerParams& p, double r0,
                                        double rdot0, double periods,
                                        const IntegrateOptions& opts) {
  const double e_init =
      0.5 * rdot0 * rdot0 + effective_potential(p, r0);
  if (std::abs(e_init - p.E) > 1e-12 * std::max(1.0, std::abs(p.E))) {
    throw DomainError("linearization_check: initial data inconsistent with E");
  }
  if (!(p.E < 0.0)) {
    throw DomainError("linearization_check: elliptic branch requires E < 0");
  }

  const double A = p.k / (2.0 * std::abs(p.E));
  const double t_span = periods * 2.0 * M_PI * std::sqrt(A * A * A / p.k);

  Vec q0 = Vec::Constant(1, r0);
  Vec v0 = Vec::Constant(1, rdot0);
  Trajectory radial = integrate_sode(radial_field(p), q0, v0, t_span, opts);

  double energy_drift = 0.0;
  for (std::size_t i = 0; i < radial.size(); ++i) {
    const double r = radial.state(i)[0], rd = radial.state(i)[1];
    energy_drift = std::max(
        energy_drift,
        std::abs(0.5 * rd * rd + effective_potential(p, r) - p.E));
  }

  const ScalarField f = radius_factor();
  const std::vector<double> tau_nodes = time_map(radial, f);
  Trajectory sundman = reparametrize(radial, f);

  // Fixed-energy identity 2 r^2 E = r'^2 + l^2 - 2 k r with r' = r rdot.
  double fix_res = 0.0;
  for (std::size_t i = 0; i < sundman.size(); ++i) {
    const double r = sundman.state(i)[0];
    const double rp = r * sundman.state(i)[1];
    fix_res = std::max(fix_res, std::abs(2.0 * r * r * p.E - rp * rp -
                                         p.l * p.l + 2.0 * p.k * r));
  }

  // Linear tau-dynamics from matched initial conditions r' = r rdot.
  const double tau_span = sundman.param_back();
  Trajectory linear =
      integrate_sode(linearized_field(p), q0,
                     Vec::Constant(1, r0 * rdot0), tau_span, opts);

  double dev_linear = 0.0;
  for (std::size_t i = 0; i < sundman.size(); ++i) {
    const double tau = sundman.param(i);
    if (tau > linear.param_back()) break;
    dev_linear = std::max(
        dev_linear, std::abs(sundman.state(i)[0] - linear.at(tau)[0]));
  }

  // Analytic ellipse, with the phase offset tau0 of the initial condition
  // relative to the perihelion-at-0 convention.
  double dev_analytic = 0.0, dev_time = 0.0;
  if (p.l != 0.0) {
    const KeplerEllipse ell = analytic_ellipse(p);
    double tau0 = 0.0;
    if (ell.e > 1e-12) {
      const double c = (1.0 - r0 / ell.A) / ell.e;
      const double s = r0 * rdot0 / (ell.A * ell.e * ell.omega);
      tau0 = std::atan2(s, c) / ell.omega;
    }
    for (std::size_t i = 0; i < sundman.size(); ++i) {
      const double tau = sundman.param(i);
      dev_analytic = std::max(
          dev_analytic, std::abs(sundman.state(i)[0] - ell.r(tau + tau0)));
      // t(tau) law, shifted so both clocks start at the initial point.
      dev_time = std::max(
          dev_time,
          std::abs(radial.param(i) - (ell.t(tau + tau0) - ell.t(tau0))));
    }
  }

  // Radial period from sign changes of rdot (apsis crossings are T/2 apart).
  // Detected on a probe window slightly longer than one period so that an
  // apsis start does not place the second crossing on the window boundary.
  double t_period = 0.0, tau_period = 0.0;
  {
    const double t_probe = 1.3 * 2.0 * M_PI * std::sqrt(A * A * A / p.k);
    Trajectory probe =
        integrate_sode(radial_field(p), q0, v0, t_probe, opts);
    const std::vector<double> probe_taus = time_map(probe, f);
    const std::vector<double> zeros = rdot_zeros(probe);
    if (zeros.size() >= 2) {
      t_period = 2.0 * (zeros[1] - zeros[0]);
      tau_period = 2.0 * (tau_at(probe, probe_taus, zeros[1]) -
                          tau_at(probe, probe_taus, zeros[0]));
    }
  }

  return LinearizationReport{std::move(radial),
                             std::move(sundman),
                             std::move(linear),
                             dev_linear,
                             dev_analytic,
                             dev_time,
                             t_period,
                             tau_period,
                             energy_drift,
                             fix_res};
}

}  // namespace kepler
}  // namespace sundman
