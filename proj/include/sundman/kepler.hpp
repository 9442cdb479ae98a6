#pragma once

#include "sundman/riemann.hpp"

namespace sundman {
namespace kepler {

struct KeplerParams {
  double k = 1.0;  // attraction constant, > 0
  double l = 1.0;  // angular momentum
  double E = -0.5; // total energy
};

/// Reduced effective potential V(r) + l^2/(2 r^2) with V = -k/r.
double effective_potential(const KeplerParams& p, double r);

/// Analytic ellipse of the negative-energy branch, perihelion at tau = 0:
/// r(tau) = A (1 - e cos(omega tau)), t(tau) = A (tau - (e/omega) sin(omega tau)).
struct KeplerEllipse {
  double A = 0.0;      // major semiaxis, k / (2|E|)
  double e = 0.0;      // eccentricity
  double omega = 0.0;  // sqrt(2|E|)

  double r(double tau) const;
  double t(double tau) const;
  double r_min() const { return A * (1.0 - e); }
  double r_max() const { return A * (1.0 + e); }
};

/// Radial dynamics in t on (r, rdot): rddot = l^2/r^3 - k/r^2, guarded r > 0.
SecondOrderField radial_field(const KeplerParams& p);

/// Fixed-energy linearized dynamics in tau: r'' = 2 E r + k.
SecondOrderField linearized_field(const KeplerParams& p);

/// Elliptic-branch parameters; rejects E >= 0, l = 0, or E below the
/// effective-potential minimum.
KeplerEllipse analytic_ellipse(const KeplerParams& p);

struct LinearizationReport {
  Trajectory radial;      // (r, rdot) in t
  Trajectory sundman;     // same curve reparametrized to tau (dt = r dtau)
  Trajectory linear;      // (r, r') integrated in tau from matched data
  double max_dev_linear = 0.0;    // max |r_sundman - r_linear| on tau nodes
  double max_dev_analytic = 0.0;  // max |r_sundman - r_ellipse(tau)|
  double max_dev_time = 0.0;      // recovered t(tau) against the closed form
  double t_period = 0.0;          // detected radial period in t
  double tau_period = 0.0;        // same period mapped to tau
  double max_energy_drift = 0.0;  // drift of E along the radial trajectory
  double fixed_energy_residual = 0.0;  // defect of 2 r^2 E = r'^2 + l^2 - 2 k r
};

/// End-to-end linearization check: integrate in t, reparametrize by f = r,
/// integrate the linear tau-equation from matched initial conditions, and
/// compare against the analytic ellipse.
LinearizationReport linearization_check(const KeplerParams& p, double r0,
                                        double rdot0, double periods = 1.0,
                                        const IntegrateOptions& opts = {});

}  // namespace kepler
}  // namespace sundman
