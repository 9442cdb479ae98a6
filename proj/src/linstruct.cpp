#include "sundman/linstruct.hpp"

#include <cmath>

namespace sundman {

VectorField liouville_field(int n) {
  if (n < 1) throw DimensionError("liouville_field: n must be >= 1");
  VectorField delta;
  delta.dim = n;
  delta.eval = [](const Vec& q) { return q; };
  delta.jacobian = [n](const Vec&) { return Mat::Identity(n, n); };
  return delta;
}

double linearity_residual(const VectorField& X,
                          const std::vector<Vec>& samples) {
  const VectorField delta = liouville_field(X.dim);
  double worst = 0.0;
  for (const Vec& q : samples) {
    worst = std::max(worst, lie_bracket(delta, X, q).norm());
  }
  return worst;
}

double affinity_residual(const VectorField& X,
                         const std::vector<Vec>& samples) {
  const VectorField delta = liouville_field(X.dim);
  // [Delta, X] as a field, for the outer bracket.
  VectorField inner;
  inner.dim = X.dim;
  inner.eval = [delta, X](const Vec& q) { return lie_bracket(delta, X, q); };
  double worst = 0.0;
  for (const Vec& q : samples) {
    const Vec r = lie_bracket(delta, inner, q) + inner.eval(q);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

EigenFactorEstimate conformal_eigen_factor(const VectorField& X,
                                           const std::vector<Vec>& samples) {
  const VectorField delta = liouville_field(X.dim);
  EigenFactorEstimate est;
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
    const Vec br = lie_bracket(delta, X, q);
    const double h = br.dot(x) / xx;
    est.values.push_back(h);
    est.residual = std::max(est.residual, (br - h * x).norm());
  }
  return est;
}

ScalarField linearizing_factor(const VectorField& X, const ScalarField& h,
                               double quad_tol) {
  const int n = X.dim;
  if (h.dim != n) {
    throw DimensionError("linearizing_factor: dimension mismatch");
  }

  // Constant h has the closed form f(q) = |q|^h.
  bool constant = true;
  double h0 = 0.0;
  {
    auto probes = annulus_samples(n, 8);
    h0 = h.eval(probes.front());
    for (const Vec& q : probes) {
      if (std::abs(h.eval(q) - h0) > 1e-12 * (1.0 + std::abs(h0))) {
        constant = false;
        break;
      }
    }
  }

  ScalarField f;
  f.dim = n;
  f.positive = true;
  if (constant) {
    f.eval = [h0](const Vec& q) { return std::pow(q.norm(), h0); };
    f.gradient = [h0](const Vec& q) -> Vec {
      return h0 * std::pow(q.norm(), h0 - 2.0) * q;
    };
    return f;
  }

  // log f(q) = int_0^{log|q|} h(e^s q/|q|) ds along the dilation ray.
  f.eval = [h, quad_tol](const Vec& q) {
    const double r = q.norm();
    if (!(r > 0.0)) {
      throw DomainError("linearizing_factor: undefined at the origin");
    }
    const Vec u = q / r;
    const double logf = integrate_adaptive(
        [&](double s) { return h.eval(std::exp(s) * u); }, 0.0, std::log(r),
        quad_tol);
    return std::exp(logf);
  };
  return f;
}

}  // namespace sundman
