#include "sundman/mechanics.hpp"

#include <cmath>

namespace sundman {

SecondOrderField mechanical_sode(const MechanicalSystem& sys) {
  SecondOrderField sode;
  sode.dim = sys.g.dim;
  sode.domain_guard = sys.g.domain_guard;
  const MetricField g = sys.g;
  const ScalarField V = sys.V;
  sode.rhs = [g, V](const Vec& q, const Vec& v) -> Vec {
    const Christoffel gamma = christoffel(g, q);
    Vec acc = -gradient(g, V, q);
    for (int i = 0; i < g.dim; ++i) acc[i] -= v.dot(gamma[i] * v);
    return acc;
  };
  return sode;
}

SecondOrderField newtonian_sode(const MetricField& g, const ForceField& Z) {
  if (Z.dim != g.dim) {
    throw DimensionError("newtonian_sode: dimension mismatch");
  }
  SecondOrderField sode;
  sode.dim = g.dim;
  sode.domain_guard = g.domain_guard;
  sode.rhs = [g, Z](const Vec& q, const Vec& v) -> Vec {
    const Christoffel gamma = christoffel(g, q);
    Vec acc = Z.eval(q, v);
    for (int i = 0; i < g.dim; ++i) acc[i] -= v.dot(gamma[i] * v);
    return acc;
  };
  return sode;
}

double energy(const MechanicalSystem& sys, const Vec& q, const Vec& v) {
  return kinetic_energy(sys.g, q, v) + sys.V.eval(q);
}

double nabla_force_residual(const MetricField& g, const VectorField& X,
                            const ForceField& Z,
                            const std::vector<Vec>& samples) {
  if (!Z.basic) {
    throw DomainError("nabla_force_residual: force must be basic");
  }
  const Vec zero = Vec::Zero(g.dim);
  double worst = 0.0;
  for (const Vec& q : samples) {
    const Vec res = covariant_derivative(g, X, X, q) - Z.eval(q, zero);
    worst = std::max(worst, res.norm());
  }
  return worst;
}

double sundman_newton_residual(const MetricField& g, const VectorField& Y,
                               const ForceField& Z, const ScalarField& h,
                               const std::vector<Vec>& samples) {
  const Vec zero = Vec::Zero(g.dim);
  double worst = 0.0;
  for (const Vec& q : samples) {
    const double hq = h.eval(q);
    if (!(hq > 0.0)) {
      throw DomainError("sundman_newton_residual: nonpositive factor");
    }
    const Vec y = Y(q);
    const double lambda = h.grad(q).dot(y) / hq;  // L_Y(log h)
    const Vec res = covariant_derivative(g, Y, Y, q) - lambda * y -
                    hq * hq * Z.eval(q, zero);
    worst = std::max(worst, res.norm());
  }
  return worst;
}

JacobiMetric jacobi_metric(const MechanicalSystem& sys, double E0) {
  const MetricField g = sys.g;
  const ScalarField V = sys.V;

  JacobiMetric jm;
  jm.energy_level = E0;

  jm.phi.dim = g.dim;
  jm.phi.eval = [V, E0](const Vec& q) {
    const double gap = E0 - V.eval(q);
    if (!(gap > 0.0)) {
      throw DomainError("jacobi_metric: V >= E0 on requested point");
    }
    return 0.5 * std::log(gap);
  };
  jm.phi.gradient = [V, E0](const Vec& q) -> Vec {
    return -V.grad(q) / (2.0 * (E0 - V.eval(q)));
  };

  jm.metric.dim = g.dim;
  jm.metric.eval = [g, V, E0](const Vec& q) -> Mat {
    const double gap = E0 - V.eval(q);
    if (!(gap > 0.0)) {
      throw DomainError("jacobi_metric: V >= E0 on requested point");
    }
    return gap * g.eval(q);
  };
  if (g.partials && V.gradient) {
    jm.metric.partials = [g, V, E0](const Vec& q) -> std::vector<Mat> {
      const double gap = E0 - V.eval(q);
      const Vec dV = V.gradient(q);
      const Mat gq = g.eval(q);
      std::vector<Mat> dg = g.partials(q);
      for (int k = 0; k < g.dim; ++k) {
        dg[k] = gap * dg[k] - dV[k] * gq;
      }
      return dg;
    };
  }
  jm.metric.domain_guard = [g, V, E0](const Vec& q) {
    return V.eval(q) < E0 && (!g.domain_guard || g.domain_guard(q));
  };
  return jm;
}

JacobiEquivalenceReport jacobi_equivalence(const MechanicalSystem& sys,
                                           double E0, const Vec& q0,
                                           const Vec& v0, double T,
                                           const IntegrateOptions& opts) {
  const int n = sys.g.dim;
  const double e_init = energy(sys, q0, v0);
  if (std::abs(e_init - E0) > 1e-10 * std::max(1.0, std::abs(E0))) {
    throw DomainError("jacobi_equivalence: initial energy does not match E0");
  }

  // Hill-boundary margin: the conformal factor degenerates at V = E0.
  const double margin = 1e-6 * std::max(std::abs(E0), 1e-6);
  const ScalarField V = sys.V;
  MechanicalSystem guarded = sys;
  {
    auto base = sys.g.domain_guard;
    guarded.g.domain_guard = [V, E0, margin, base](const Vec& q) {
      return E0 - V.eval(q) >= margin && (!base || base(q));
    };
  }

  Trajectory mechanical =
      integrate_sode(mechanical_sode(guarded), q0, v0, T, opts);
  bool truncated = mechanical.truncated();

  double energy_drift = 0.0;
  for (std::size_t i = 0; i < mechanical.size(); ++i) {
    const Vec& st = mechanical.state(i);
    energy_drift = std::max(energy_drift,
                            std::abs(energy(sys, st.head(n), st.tail(n)) - E0));
  }

  // Arc-length correspondence: ds_E/dt = sqrt(2)(E0 - V).
  std::vector<double> t_nodes = mechanical.params();
  std::vector<double> arc_of_t(t_nodes.size(), 0.0);
  auto speed_e = [&](double t) {
    const double gap = E0 - V.eval(mechanical.at(t).head(n));
    return std::sqrt(2.0) * gap;
  };
  for (std::size_t i = 1; i < t_nodes.size(); ++i) {
    arc_of_t[i] = arc_of_t[i - 1] + integrate_adaptive(speed_e, t_nodes[i - 1],
                                                       t_nodes[i], 1e-13);
  }

  // Jacobi geodesic from the same ray, at gbar-speed sqrt(2)(E0 - V(q0)).
  const JacobiMetric jm = jacobi_metric(sys, E0);
  const double gap0 = E0 - V.eval(q0);
  const double c0 = std::sqrt(2.0) * gap0;
  const double w_norm = std::sqrt(v0.dot(jm.metric(q0) * v0));
  if (!(w_norm > 0.0)) {
    throw DomainError("jacobi_equivalence: zero initial velocity");
  }
  const Vec w0 = v0 * (c0 / w_norm);
  const double span = arc_of_t.back() / c0;

  Trajectory geodesic =
      integrate_sode(geodesic_field(jm.metric), q0, w0, span, opts);
  truncated = truncated || geodesic.truncated();

  const double dist =
      orbit_distance(mechanical.positions(n), geodesic.positions(n));

  return JacobiEquivalenceReport{std::move(mechanical),
                                 std::move(geodesic),
                                 dist,
                                 std::move(t_nodes),
                                 std::move(arc_of_t),
                                 energy_drift,
                                 truncated};
}

double energy_constancy_residual(const MechanicalSystem& sys,
                                 const VectorField& X,
                                 const std::vector<Vec>& samples) {
  const MetricField g = sys.g;
  const ScalarField V = sys.V;
  ScalarField ex;
  ex.dim = g.dim;
  ex.eval = [g, V, X](const Vec& q) {
    return kinetic_energy(g, q, X(q)) + V.eval(q);
  };
  double worst = 0.0;
  for (const Vec& q : samples) {
    worst = std::max(worst, std::abs(ex.grad(q).dot(X(q))));
  }
  return worst;
}

}  // namespace sundman
