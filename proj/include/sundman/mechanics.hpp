#pragma once

#include <vector>

#include "sundman/riemann.hpp"

namespace sundman {

/// Metric + potential; energy E = T_g + V.
struct MechanicalSystem {
  MetricField g;
  ScalarField V;
};

/// Force map (q, v) -> Z; basic forces ignore v.
struct ForceField {
  int dim = 0;
  std::function<Vec(const Vec& q, const Vec& v)> eval;
  bool basic = true;
};

/// Jacobi metric (E0 - V) g, positive definite exactly on {V < E0}.
struct JacobiMetric {
  MetricField metric;
  ScalarField phi;  // conformal factor: exp(2 phi) = E0 - V
  double energy_level = 0.0;
};

/// F(q, v) = -Gamma(v, v) - grad_g V.
SecondOrderField mechanical_sode(const MechanicalSystem& sys);

/// F(q, v) = -Gamma(v, v) + Z(q, v).
SecondOrderField newtonian_sode(const MetricField& g, const ForceField& Z);

/// E(q, v) = T_g(q, v) + V(q).
double energy(const MechanicalSystem& sys, const Vec& q, const Vec& v);

/// max over samples of ||nabla_X X - Z||; small residual certifies that the
/// integral curves of X solve the Newtonian equation for force Z.
double nabla_force_residual(const MetricField& g, const VectorField& X,
                            const ForceField& Z,
                            const std::vector<Vec>& samples);

/// max over samples of ||nabla_Y Y - (L_Y log h) Y - h^2 Z||; small residual
/// certifies that Y reparametrizes (by Sundman factor h) to Newtonian
/// solutions.
double sundman_newton_residual(const MetricField& g, const VectorField& Y,
                               const ForceField& Z, const ScalarField& h,
                               const std::vector<Vec>& samples);

JacobiMetric jacobi_metric(const MechanicalSystem& sys, double E0);

struct JacobiEquivalenceReport {
  Trajectory mechanical;        // (q, v) in time t
  Trajectory jacobi_geodesic;   // (q, w) in the geodesic parameter
  double orbit_dist = 0.0;      // between the projected position curves
  std::vector<double> t_nodes;  // mechanical time samples
  std::vector<double> arc_of_t; // s_E(t) recovered by quadrature
  double energy_drift = 0.0;    // max |E - E0| along the mechanical curve
  bool truncated = false;       // orbit approached the Hill boundary
};

/// Integrates the fixed-energy mechanical trajectory and the Jacobi-metric
/// geodesic from the same initial ray and compares their orbits.
JacobiEquivalenceReport jacobi_equivalence(const MechanicalSystem& sys,
                                           double E0, const Vec& q0,
                                           const Vec& v0, double T,
                                           const IntegrateOptions& opts = {});

/// max over samples of |L_X(E(X))| for a candidate solution field X, where
/// E(X)(q) = T_g(q, X(q)) + V(q).
double energy_constancy_residual(const MechanicalSystem& sys,
                                 const VectorField& X,
                                 const std::vector<Vec>& samples);

}  // namespace sundman
