#pragma once

#include <vector>

#include "sundman/fields.hpp"

namespace sundman {

/// Symmetric positive-definite metric tensor q -> g(q).
struct MetricField {
  int dim = 0;
  std::function<Mat(const Vec&)> eval;
  // partials(q)[k](i,j) = d g_ij / d q^k; may be empty (central differences).
  std::function<std::vector<Mat>(const Vec&)> partials;
  std::function<bool(const Vec&)> domain_guard;

  Mat operator()(const Vec& q) const;
  std::vector<Mat> d(const Vec& q) const;
  bool admissible(const Vec& q) const {
    return !domain_guard || domain_guard(q);
  }
};

/// Gamma[i](j,k), symmetric in (j,k) by construction.
using Christoffel = std::vector<Mat>;

/// Second-order dynamics (q, v) -> (v, F(q, v)).
struct SecondOrderField {
  int dim = 0;
  std::function<Vec(const Vec& q, const Vec& v)> rhs;
  std::function<bool(const Vec& q)> domain_guard;
};

/// The 2n-dimensional first-order form of a SODE.
VectorField as_first_order(const SecondOrderField& sode);

/// Integrates a SODE from (q0, v0); trajectory states are (q, v).
Trajectory integrate_sode(const SecondOrderField& sode, const Vec& q0,
                          const Vec& v0, double T,
                          const IntegrateOptions& opts = {},
                          IntegrateStats* stats = nullptr);

/// Second-kind Christoffel symbols of g at q. Metric inverse via Cholesky;
/// failure reports loss of positive definiteness.
Christoffel christoffel(const MetricField& g, const Vec& q);

/// Levi-Civita covariant derivative (nabla_X Y)(q).
Vec covariant_derivative(const MetricField& g, const VectorField& X,
                         const VectorField& Y, const Vec& q);

/// Geodesic SODE: F(q, v) = -Gamma(v, v).
SecondOrderField geodesic_field(const MetricField& g);

/// Quadrature of sqrt(g(dq, dq)) over the parameter span. The trajectory must
/// carry second-order states (q, v) unless fd_velocities requests finite
/// differences of a position-only curve.
double arc_length(const MetricField& g, const Trajectory& traj,
                  bool fd_velocities = false, double quad_tol = 1e-12);

/// T_g = 1/2 v^T g(q) v.
double kinetic_energy(const MetricField& g, const Vec& q, const Vec& v);

/// gbar = exp(2 phi) g, partials composed when both are analytic.
MetricField conformal_rescale(const MetricField& g, const ScalarField& phi);

/// Conformal Christoffel symbols from g-quantities and grad phi; equals
/// christoffel(conformal_rescale(g, phi), q) up to derivative tolerance.
Christoffel conformal_christoffel(const MetricField& g, const ScalarField& phi,
                                  const Vec& q);

/// max over samples of the defect in the conformal covariant-derivative
/// relation: nabla-bar_X Y vs nabla_X Y + (X phi)Y + (Y phi)X - g(X,Y) grad phi.
double conformal_nabla_residual(const MetricField& g, const ScalarField& phi,
                                const VectorField& X, const VectorField& Y,
                                const std::vector<Vec>& samples);

/// grad_g V = g^{-1} dV.
Vec gradient(const MetricField& g, const ScalarField& V, const Vec& q);

/// Frobenius norm of (L_X g)_ij at q.
double killing_residual(const MetricField& g, const VectorField& X,
                        const Vec& q);

/// ||nabla_X X|| at q; zero for geodesic (autoparallel) fields.
double autoparallel_residual(const MetricField& g, const VectorField& X,
                             const Vec& q);

struct PregeodesicEstimate {
  std::vector<double> values;        // per-sample least-squares f(q)
  double residual = 0.0;             // max ||nabla_X X - f X||
  std::vector<std::size_t> skipped;  // samples with X(q) ~ 0
};

/// Least-squares f in nabla_X X = f X over the samples; a small residual
/// certifies that X is pregeodesic.
PregeodesicEstimate pregeodesic_factor(const MetricField& g,
                                       const VectorField& X,
                                       const std::vector<Vec>& samples);

struct GeodesicRescaling {
  Trajectory flow;                    // integral curve of X
  std::vector<double> lambda;         // lambda at the flow nodes, lambda(q0)=1
  ScalarField lambda_field;           // projection-based extension off the curve
  bool single_valued = true;          // false when the orbit closes with lambda != 1
  double autoparallel_residual = 0.0; // residual of lambda X along the curve
};

/// Solves L_X(log lambda) = -f along the flow of X by quadrature; the
/// rescaled field lambda X is autoparallel when nabla_X X = f X holds.
GeodesicRescaling geodesic_rescaling(const MetricField& g,
                                     const VectorField& X,
                                     const ScalarField& f, const Vec& q0,
                                     double T,
                                     const IntegrateOptions& opts = {});

/// max over interior sample points of ||q'' + Gamma(q', q')|| for a
/// position trajectory, with q'' from a fourth-order stencil on the dense
/// output (stencil width h).
double geodesic_residual(const MetricField& g, const Trajectory& traj,
                         int n_samples = 200, double h = 0.05);

/// q''(p) from a fourth-order five-point central stencil on dense output.
Vec curve_second_derivative(const Trajectory& traj, double p, double h);

/// q'(p) from a fourth-order five-point central stencil on dense output.
Vec curve_first_derivative(const Trajectory& traj, double p, double h);

}  // namespace sundman
