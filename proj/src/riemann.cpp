#include "sundman/riemann.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <memory>
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

Mat metric_inverse(const Mat& gq, const Vec& q) {
  Eigen::LLT<Mat> llt(gq);
  if (llt.info() != Eigen::Success) {
    throw DomainError("metric not positive definite at " + point_str(q));
  }
  return llt.solve(Mat::Identity(gq.rows(), gq.cols()));
}

}  // namespace

Mat MetricField::operator()(const Vec& q) const {
  Mat gq = eval(q);
  if (gq.rows() != dim || gq.cols() != dim) {
    throw DimensionError("MetricField: eval returned wrong shape");
  }
  if ((gq - gq.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + gq.cwiseAbs().maxCoeff())) {
    throw DomainError("MetricField: asymmetric metric at " + point_str(q));
  }
  return gq;
}

std::vector<Mat> MetricField::d(const Vec& q) const {
  if (partials) return partials(q);
  std::vector<Mat> dg(dim);
  Vec qp = q, qm = q;
  for (int k = 0; k < dim; ++k) {
    const double h = fd_step(q[k]);
    qp[k] = q[k] + h;
    qm[k] = q[k] - h;
    dg[k] = (eval(qp) - eval(qm)) / (2.0 * h);
    qp[k] = q[k];
    qm[k] = q[k];
  }
  return dg;
}

VectorField as_first_order(const SecondOrderField& sode) {
  const int n = sode.dim;
  VectorField X;
  X.dim = 2 * n;
  X.eval = [sode, n](const Vec& state) -> Vec {
    Vec out(2 * n);
    out.head(n) = state.tail(n);
    out.tail(n) = sode.rhs(state.head(n), state.tail(n));
    return out;
  };
  if (sode.domain_guard) {
    X.domain_guard = [sode, n](const Vec& state) {
      return sode.domain_guard(state.head(n));
    };
  }
  return X;
}

Trajectory integrate_sode(const SecondOrderField& sode, const Vec& q0,
                          const Vec& v0, double T,
                          const IntegrateOptions& opts,
                          IntegrateStats* stats) {
  if (q0.size() != sode.dim || v0.size() != sode.dim) {
    throw DimensionError("integrate_sode: initial state dimension mismatch");
  }
  Vec state(2 * sode.dim);
  state.head(sode.dim) = q0;
  state.tail(sode.dim) = v0;
  return integrate_flow(as_first_order(sode), state, T, opts, stats);
}

Christoffel christoffel(const MetricField& g, const Vec& q) {
  const int n = g.dim;
  const Mat gq = g(q);
  const Mat ginv = metric_inverse(gq, q);
  const std::vector<Mat> dg = g.d(q);
  for (const Mat& m : dg) {
    if (!m.allFinite()) {
      throw NumericalError("christoffel: non-finite metric partials");
    }
  }
  Christoffel gamma(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = j; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) {
          s += ginv(i, l) * (dg[k](l, j) + dg[j](l, k) - dg[l](j, k));
        }
        gamma[i](j, k) = 0.5 * s;
        gamma[i](k, j) = gamma[i](j, k);  // torsionless, stored symmetrically
      }
    }
  }
  return gamma;
}

Vec covariant_derivative(const MetricField& g, const VectorField& X,
                         const VectorField& Y, const Vec& q) {
  if (X.dim != g.dim || Y.dim != g.dim) {
    throw DimensionError("covariant_derivative: dimension mismatch");
  }
  const Christoffel gamma = christoffel(g, q);
  const Vec x = X(q), y = Y(q);
  Vec out = Y.jac(q) * x;
  for (int k = 0; k < g.dim; ++k) {
    out[k] += x.dot(gamma[k] * y);
  }
  return out;
}

SecondOrderField geodesic_field(const MetricField& g) {
  SecondOrderField sode;
  sode.dim = g.dim;
  sode.domain_guard = g.domain_guard;
  sode.rhs = [g](const Vec& q, const Vec& v) -> Vec {
    const Christoffel gamma = christoffel(g, q);
    Vec acc(g.dim);
    for (int i = 0; i < g.dim; ++i) acc[i] = -v.dot(gamma[i] * v);
    return acc;
  };
  return sode;
}

double arc_length(const MetricField& g, const Trajectory& traj,
                  bool fd_velocities, double quad_tol) {
  const int n = g.dim;
  const bool second_order = traj.state_dim() == 2 * n;
  if (!second_order && traj.state_dim() != n) {
    throw DimensionError("arc_length: trajectory/metric dimension mismatch");
  }
  if (!second_order && !fd_velocities) {
    throw DomainError(
        "arc_length: position-only trajectory requires fd_velocities");
  }
  auto speed = [&](double p) {
    Vec q, v;
    if (second_order) {
      const Vec state = traj.at(p);
      q = state.head(n);
      v = state.tail(n);
    } else {
      q = traj.at(p);
      v = traj.deriv_at(p);
    }
    const double s2 = v.dot(g(q) * v);
    return std::sqrt(std::max(s2, 0.0));
  };
  if (traj.size() < 2) throw DomainError("arc_length: degenerate sampling");
  double total = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    total += integrate_adaptive(speed, traj.param(i - 1), traj.param(i),
                                quad_tol);
  }
  return total;
}

double kinetic_energy(const MetricField& g, const Vec& q, const Vec& v) {
  return 0.5 * v.dot(g(q) * v);
}

MetricField conformal_rescale(const MetricField& g, const ScalarField& phi) {
  MetricField out;
  out.dim = g.dim;
  out.domain_guard = g.domain_guard;
  out.eval = [g, phi](const Vec& q) -> Mat {
    return std::exp(2.0 * phi.eval(q)) * g.eval(q);
  };
  if (g.partials && phi.gradient) {
    out.partials = [g, phi](const Vec& q) -> std::vector<Mat> {
      const double factor = std::exp(2.0 * phi.eval(q));
      const Vec dphi = phi.gradient(q);
      const Mat gq = g.eval(q);
      std::vector<Mat> dg = g.partials(q);
      for (int k = 0; k < g.dim; ++k) {
        dg[k] = factor * (dg[k] + 2.0 * dphi[k] * gq);
      }
      return dg;
    };
  }
  return out;
}

Christoffel conformal_christoffel(const MetricField& g, const ScalarField& phi,
                                  const Vec& q) {
  const int n = g.dim;
  Christoffel gamma = christoffel(g, q);
  const Mat gq = g(q);
  const Mat ginv = metric_inverse(gq, q);
  const Vec dphi = phi.grad(q);
  const Vec up = ginv * dphi;  // g^{il} dphi_l
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double extra = -gq(j, k) * up[i];
        if (i == j) extra += dphi[k];
        if (i == k) extra += dphi[j];
        gamma[i](j, k) += extra;
      }
    }
  }
  return gamma;
}

double conformal_nabla_residual(const MetricField& g, const ScalarField& phi,
                                const VectorField& X, const VectorField& Y,
                                const std::vector<Vec>& samples) {
  const MetricField gbar = conformal_rescale(g, phi);
  double worst = 0.0;
  for (const Vec& q : samples) {
    const Vec lhs = covariant_derivative(gbar, X, Y, q);
    const Vec dphi = phi.grad(q);
    const Vec x = X(q), y = Y(q);
    const Vec rhs = covariant_derivative(g, X, Y, q) + dphi.dot(x) * y +
                    dphi.dot(y) * x -
                    x.dot(g(q) * y) * gradient(g, phi, q);
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

Vec gradient(const MetricField& g, const ScalarField& V, const Vec& q) {
  const Mat gq = g(q);
  return metric_inverse(gq, q) * V.grad(q);
}

double killing_residual(const MetricField& g, const VectorField& X,
                        const Vec& q) {
  const Mat gq = g(q);
  const std::vector<Mat> dg = g.d(q);
  const Mat jx = X.jac(q);
  const Vec x = X(q);
  Mat lie = jx.transpose() * gq + gq * jx;
  for (int k = 0; k < g.dim; ++k) lie += x[k] * dg[k];
  return lie.norm();
}

double autoparallel_residual(const MetricField& g, const VectorField& X,
                             const Vec& q) {
  return covariant_derivative(g, X, X, q).norm();
}

PregeodesicEstimate pregeodesic_factor(const MetricField& g,
                                       const VectorField& X,
                                       const std::vector<Vec>& samples) {
  PregeodesicEstimate est;
  est.values.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vec& q = samples[i];
    const Vec x = X(q);
    const double xx = x.squaredNorm();
    if (xx < 1e-20) {
      est.skipped.push_back(i);
      est.values.push_back(0.0);
      continue;
    }
    const Vec w = covariant_derivative(g, X, X, q);
    const double f = w.dot(x) / xx;
    est.values.push_back(f);
    est.residual = std::max(est.residual, (w - f * x).norm());
  }
  return est;
}

GeodesicRescaling geodesic_rescaling(const MetricField& g,
                                     const VectorField& X,
                                     const ScalarField& f, const Vec& q0,
                                     double T, const IntegrateOptions& opts) {
  Trajectory flow = integrate_flow(X, q0, T, opts);

  // log lambda(t) = -int_0^t f along the flow.
  std::vector<double> lambda(flow.size());
  std::vector<Vec> lambda_states(flow.size()), lambda_derivs(flow.size());
  lambda[0] = 1.0;
  double log_lambda = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (i > 0) {
      log_lambda -= integrate_adaptive(
          [&](double t) { return f.eval(flow.at(t)); }, flow.param(i - 1),
          flow.param(i), 1e-13);
      lambda[i] = std::exp(log_lambda);
    }
    lambda_states[i] = Vec::Constant(1, lambda[i]);
    // d lambda / dt = -f lambda along the flow.
    lambda_derivs[i] =
        Vec::Constant(1, -f.eval(flow.state(i)) * lambda[i]);
  }

  GeodesicRescaling out{std::move(flow), std::move(lambda), {}, true, 0.0};

  auto interp = std::make_shared<Trajectory>(
      ParamLabel::Time, out.flow.params(), std::move(lambda_states),
      std::move(lambda_derivs));
  auto curve = std::make_shared<Trajectory>(out.flow);

  // Orbit closure with a net quadrature gain makes lambda multivalued. The
  // return point rarely lands on a node, so minimize the distance to q0 on
  // the dense output past the first quarter of the span.
  {
    const double scale = 1.0 + q0.norm();
    std::size_t best = out.flow.size() / 4;
    double best_d = (out.flow.state(best) - q0).norm();
    for (std::size_t i = best + 1; i < out.flow.size(); ++i) {
      const double d = (out.flow.state(i) - q0).norm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    double lo = out.flow.param(best > 0 ? best - 1 : 0);
    double hi = out.flow.param(
        best + 1 < out.flow.size() ? best + 1 : out.flow.size() - 1);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = (out.flow.at(x1) - q0).norm();
    double f2 = (out.flow.at(x2) - q0).norm();
    for (int it = 0; it < 90 && hi - lo > 0.0; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = (out.flow.at(x1) - q0).norm();
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = (out.flow.at(x2) - q0).norm();
      }
    }
    const double t_star = 0.5 * (lo + hi);
    if ((out.flow.at(t_star) - q0).norm() < 1e-6 * scale &&
        std::abs(interp->at(t_star)[0] - 1.0) > 1e-6) {
      out.single_valued = false;
    }
  }

  // lambda extended off the curve by nearest-point projection; constant in
  // the transversal directions to first order.
  out.lambda_field.dim = X.dim;
  out.lambda_field.positive = true;
  out.lambda_field.eval = [interp, curve](const Vec& p) {
    std::size_t best = 0;
    double best_d = (p - curve->state(0)).norm();
    for (std::size_t j = 1; j < curve->size(); ++j) {
      const double d = (p - curve->state(j)).norm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    double lo = curve->param(best > 0 ? best - 1 : 0);
    double hi =
        curve->param(best + 1 < curve->size() ? best + 1 : curve->size() - 1);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = (p - curve->at(x1)).norm(), f2 = (p - curve->at(x2)).norm();
    for (int it = 0; it < 90 && hi - lo > 0.0; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = (p - curve->at(x1)).norm();
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = (p - curve->at(x2)).norm();
      }
    }
    return interp->at(0.5 * (lo + hi))[0];
  };

  VectorField rescaled;
  rescaled.dim = X.dim;
  const ScalarField lf = out.lambda_field;
  rescaled.eval = [lf, X](const Vec& p) -> Vec { return lf.eval(p) * X(p); };

  const std::size_t count = std::min<std::size_t>(out.flow.size(), 64);
  const std::size_t step = std::max<std::size_t>(out.flow.size() / count, 1);
  for (std::size_t i = step; i + step < out.flow.size(); i += step) {
    out.autoparallel_residual =
        std::max(out.autoparallel_residual,
                 sundman::autoparallel_residual(g, rescaled, out.flow.state(i)));
  }
  return out;
}

Vec curve_first_derivative(const Trajectory& traj, double p, double h) {
  return (traj.at(p - 2 * h) - 8.0 * traj.at(p - h) + 8.0 * traj.at(p + h) -
          traj.at(p + 2 * h)) /
         (12.0 * h);
}

Vec curve_second_derivative(const Trajectory& traj, double p, double h) {
  return (-traj.at(p - 2 * h) + 16.0 * traj.at(p - h) - 30.0 * traj.at(p) +
          16.0 * traj.at(p + h) - traj.at(p + 2 * h)) /
         (12.0 * h * h);
}

double geodesic_residual(const MetricField& g, const Trajectory& traj,
                         int n_samples, double h) {
  const double a = traj.param_front() + 2 * h;
  const double b = traj.param_back() - 2 * h;
  if (!(b > a)) throw DomainError("geodesic_residual: span too short");
  double worst = 0.0;
  for (int i = 0; i <= n_samples; ++i) {
    const double p = a + (b - a) * i / n_samples;
    const Vec q = traj.at(p);
    const Vec dq = curve_first_derivative(traj, p, h);
    const Vec ddq = curve_second_derivative(traj, p, h);
    const Christoffel gamma = christoffel(g, q);
    Vec res = ddq;
    for (int k = 0; k < g.dim; ++k) res[k] += dq.dot(gamma[k] * dq);
    worst = std::max(worst, res.norm());
  }
  return worst;
}

}  // namespace sundman
