#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sundman/numeric.hpp"
#include "sundman/trajectory.hpp"

namespace sundman {

/// Scalar function on a coordinate chart, with optional analytic gradient.
struct ScalarField {
  int dim = 0;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> gradient;  // may be empty
  bool positive = false;                    // declared positivity (Sundman factors)

  double operator()(const Vec& q) const { return eval(q); }

  /// Analytic gradient when supplied, central differences otherwise.
  Vec grad(const Vec& q) const;
};

/// First-order vector field q -> X(q) on a chart.
struct VectorField {
  int dim = 0;
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> jacobian;       // may be empty
  std::function<bool(const Vec&)> domain_guard;  // may be empty

  Vec operator()(const Vec& q) const;

  /// Analytic Jacobian when supplied, central differences otherwise.
  Mat jac(const Vec& q) const;

  bool admissible(const Vec& q) const {
    return !domain_guard || domain_guard(q);
  }
};

struct VolumeForm {
  int dim = 0;
  ScalarField density;  // rho > 0
};

struct IntegrateOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  long max_steps = 4'000'000;
  double max_step = 0.0;    // 0 = no cap
  double fixed_step = 0.0;  // > 0 switches to fixed-step RK4
};

struct IntegrateStats {
  long steps = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Sundman scaling X -> fX. Jacobian composed by the product rule when both
/// inputs carry analytic derivatives. Evaluation checks f > 0 pointwise.
VectorField scale_field(const VectorField& X, const ScalarField& f);

/// Integrates dq/dt = X(q) over [0, T] with an embedded adaptive 4(5) pair
/// (fixed-step RK4 when opts.fixed_step > 0). Dense output is cubic Hermite
/// on the stored derivatives. A domain-guard violation truncates the
/// trajectory and flags it.
Trajectory integrate_flow(const VectorField& X, const Vec& q0, double T,
                          const IntegrateOptions& opts = {},
                          IntegrateStats* stats = nullptr);

/// tau(t) = int_0^t 1/f ds along the trajectory, sampled at the nodes.
/// Strictly increasing; tau at the first node is 0.
std::vector<double> time_map(const Trajectory& traj, const ScalarField& f,
                             double quad_tol = 1e-13);

/// Reparametrizes a t-trajectory by the Sundman factor f (dt = f dtau).
/// Same point set; node derivatives become dq/dtau = f * dq/dt.
Trajectory reparametrize(const Trajectory& traj, const ScalarField& f,
                         double quad_tol = 1e-13);

/// Symmetric Hausdorff distance between the curves' point sets, refined by
/// projecting each node onto the other curve's dense output.
double orbit_distance(const Trajectory& a, const Trajectory& b);

/// [X, Y] = (DY)X - (DX)Y at q.
Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& q);

/// div_Omega(X) = sum_i dX^i/dx^i + (1/rho) sum_i X^i drho/dx^i at q.
double divergence(const VectorField& X, const VolumeForm& omega, const Vec& q);

/// max over samples of |grad F . X|; zero iff F is a first integral of X on
/// the sampled set.
double first_integral_residual(const ScalarField& F, const VectorField& X,
                               const std::vector<Vec>& samples);

}  // namespace sundman
