#include "sundman/fields.hpp"

#include <cmath>
#include <sstream>

namespace sundman {

namespace {

std::string point_str(const Vec& q) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < q.size(); ++i) os << (i ? ", " : "") << q[i];
  os << ")";
  return os.str();
}

}  // namespace

Vec ScalarField::grad(const Vec& q) const {
  if (gradient) return gradient(q);
  Vec g(q.size());
  Vec qp = q, qm = q;
  for (int i = 0; i < q.size(); ++i) {
    const double h = fd_step(q[i]);
    qp[i] = q[i] + h;
    qm[i] = q[i] - h;
    g[i] = (eval(qp) - eval(qm)) / (2.0 * h);
    qp[i] = q[i];
    qm[i] = q[i];
  }
  return g;
}

Vec VectorField::operator()(const Vec& q) const {
  Vec v = eval(q);
  if (v.size() != dim) {
    throw DimensionError("VectorField: eval returned wrong dimension");
  }
  return v;
}

Mat VectorField::jac(const Vec& q) const {
  if (jacobian) return jacobian(q);
  Mat J(dim, dim);
  Vec qp = q, qm = q;
  for (int j = 0; j < dim; ++j) {
    const double h = fd_step(q[j]);
    qp[j] = q[j] + h;
    qm[j] = q[j] - h;
    J.col(j) = (eval(qp) - eval(qm)) / (2.0 * h);
    qp[j] = q[j];
    qm[j] = q[j];
  }
  return J;
}

VectorField scale_field(const VectorField& X, const ScalarField& f) {
  if (f.dim != X.dim) {
    throw DimensionError("scale_field: dimension mismatch");
  }
  VectorField out;
  out.dim = X.dim;
  out.domain_guard = X.domain_guard;
  auto xeval = X;  // copy; fields are cheap shared-function bundles
  out.eval = [xeval, f](const Vec& q) -> Vec {
    const double fq = f.eval(q);
    if (!(fq > 0.0)) {
      throw DomainError("scale_field: nonpositive Sundman factor at " +
                        point_str(q));
    }
    return fq * xeval(q);
  };
  if (X.jacobian && f.gradient) {
    out.jacobian = [xeval, f](const Vec& q) -> Mat {
      // D(fX) = f DX + X (grad f)^T
      return f.eval(q) * xeval.jacobian(q) +
             xeval.eval(q) * f.gradient(q).transpose();
    };
  }
  return out;
}

std::vector<double> time_map(const Trajectory& traj, const ScalarField& f,
                             double quad_tol) {
  if (traj.label() != ParamLabel::Time && traj.label() != ParamLabel::ArcLength) {
    throw DomainError("time_map: trajectory must be parametrized by t or s");
  }
  auto inv_f = [&](double t) {
    const double v = f.eval(traj.at(t));
    if (!(v > 0.0)) {
      throw DomainError("time_map: nonpositive factor along the curve");
    }
    return 1.0 / v;
  };
  std::vector<double> tau(traj.size());
  tau[0] = 0.0;
  const double span = traj.param_back() - traj.param_front();
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double a = traj.param(i - 1), b = traj.param(i);
    const double seg = integrate_adaptive(inv_f, a, b,
                                          quad_tol * (b - a) / span);
    tau[i] = tau[i - 1] + seg;
    if (!(tau[i] > tau[i - 1])) {
      throw NumericalError("time_map: tau not strictly increasing");
    }
  }
  return tau;
}

Trajectory reparametrize(const Trajectory& traj, const ScalarField& f,
                         double quad_tol) {
  std::vector<double> tau = time_map(traj, f, quad_tol);
  std::vector<double> scale(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    scale[i] = f.eval(traj.state(i));  // dq/dtau = f dq/dt
  }
  return traj.with_params(ParamLabel::Tau, std::move(tau), scale);
}

namespace {

double dist_to_curve(const Vec& p, const Trajectory& c) {
  // Coarse scan over (possibly strided) nodes, then dense-output refinement
  // by golden-section around the best node.
  const std::size_t n = c.size();
  const std::size_t stride = n > 8192 ? n / 8192 : 1;
  std::size_t best = 0;
  double best_d = (p - c.state(0)).norm();
  for (std::size_t j = stride; j < n; j += stride) {
    const double d = (p - c.state(j)).norm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  std::size_t lo_i = best > stride ? best - stride : 0;
  std::size_t hi_i = best + stride < n ? best + stride : n - 1;
  for (std::size_t j = lo_i; j <= hi_i; ++j) {
    const double d = (p - c.state(j)).norm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  double lo = c.param(best > 0 ? best - 1 : 0);
  double hi = c.param(best + 1 < n ? best + 1 : n - 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = (p - c.at(x1)).norm(), f2 = (p - c.at(x2)).norm();
  for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = (p - c.at(x1)).norm();
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = (p - c.at(x2)).norm();
    }
  }
  return std::min({best_d, f1, f2});
}

double one_sided(const Trajectory& a, const Trajectory& b) {
  const std::size_t n = a.size();
  const std::size_t stride = n > 4096 ? n / 4096 : 1;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    worst = std::max(worst, dist_to_curve(a.state(i), b));
  }
  worst = std::max(worst, dist_to_curve(a.state(n - 1), b));
  return worst;
}

}  // namespace

double orbit_distance(const Trajectory& a, const Trajectory& b) {
  if (a.state_dim() != b.state_dim()) {
    throw DimensionError("orbit_distance: state dimension mismatch");
  }
  return std::max(one_sided(a, b), one_sided(b, a));
}

Vec lie_bracket(const VectorField& X, const VectorField& Y, const Vec& q) {
  if (X.dim != Y.dim) throw DimensionError("lie_bracket: dimension mismatch");
  const Vec r = Y.jac(q) * X(q) - X.jac(q) * Y(q);
  if (!r.allFinite()) {
    throw NumericalError("lie_bracket: non-finite Jacobian entries at " +
                         point_str(q));
  }
  return r;
}

double divergence(const VectorField& X, const VolumeForm& omega,
                  const Vec& q) {
  if (X.dim != omega.dim) {
    throw DimensionError("divergence: dimension mismatch");
  }
  const double rho = omega.density.eval(q);
  if (!(rho > 0.0)) throw DomainError("divergence: nonpositive density");
  return X.jac(q).trace() + omega.density.grad(q).dot(X(q)) / rho;
}

double first_integral_residual(const ScalarField& F, const VectorField& X,
                               const std::vector<Vec>& samples) {
  if (F.dim != X.dim) {
    throw DimensionError("first_integral_residual: dimension mismatch");
  }
  double worst = 0.0;
  for (const Vec& q : samples) {
    worst = std::max(worst, std::abs(F.grad(q).dot(X(q))));
  }
  return worst;
}

}  // namespace sundman
