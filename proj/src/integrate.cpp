#include <cmath>

#include "sundman/fields.hpp"

namespace sundman {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                 a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                 e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640,
                 e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

struct Rhs {
  const VectorField& X;
  IntegrateStats* stats;

  Vec operator()(const Vec& q) const {
    if (stats) ++stats->rhs_evals;
    Vec v = X(q);
    if (!v.allFinite()) {
      throw NumericalError("integrate_flow: non-finite derivative");
    }
    return v;
  }
};

}  // namespace

Trajectory integrate_flow(const VectorField& X, const Vec& q0, double T,
                          const IntegrateOptions& opts,
                          IntegrateStats* stats) {
  if (q0.size() != X.dim) {
    throw DimensionError("integrate_flow: initial point dimension mismatch");
  }
  if (!(T > 0.0)) throw DomainError("integrate_flow: horizon must be > 0");
  if (!X.admissible(q0)) {
    throw DomainError("integrate_flow: inadmissible initial point");
  }

  Rhs rhs{X, stats};

  std::vector<double> ts{0.0};
  std::vector<Vec> ys{q0};
  std::vector<Vec> fs{rhs(q0)};
  bool truncated = false;

  if (opts.fixed_step > 0.0) {
    // Classical RK4 at a fixed step (reproducibility mode).
    const long n = static_cast<long>(std::ceil(T / opts.fixed_step));
    const double h = T / static_cast<double>(n);
    Vec y = q0;
    for (long i = 0; i < n; ++i) {
      const double t = h * static_cast<double>(i);
      const Vec k1 = fs.back();
      const Vec k2 = rhs(y + 0.5 * h * k1);
      const Vec k3 = rhs(y + 0.5 * h * k2);
      const Vec k4 = rhs(y + h * k3);
      Vec ynew = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!X.admissible(ynew)) {
        truncated = true;
        break;
      }
      y = std::move(ynew);
      ts.push_back(t + h);
      ys.push_back(y);
      fs.push_back(rhs(y));
      if (stats) ++stats->steps;
    }
    Trajectory out(ParamLabel::Time, std::move(ts), std::move(ys),
                   std::move(fs));
    if (truncated) out.mark_truncated();
    return out;
  }

  double t = 0.0;
  Vec y = q0;
  Vec k1 = fs.back();

  const double fnorm = k1.norm();
  double h = std::min(T / 100.0,
                      0.01 * (1.0 + y.norm()) / std::max(fnorm, 1e-8));
  if (opts.max_step > 0.0) h = std::min(h, opts.max_step);

  long steps = 0;
  while (t < T) {
    if (++steps > opts.max_steps) {
      throw NumericalError("integrate_flow: step count exhausted");
    }
    if (t + h > T) h = T - t;
    if (!(t + h > t)) {
      // Step no longer advances the clock; only a guarded boundary can
      // force this, anything else is a genuine failure.
      if (X.domain_guard) {
        truncated = true;
        break;
      }
      throw NumericalError("integrate_flow: step size collapse");
    }

    Vec k2, k3, k4, k5, k6, k7, ynew, err;
    try {
      k2 = rhs(y + h * (a21 * k1));
      k3 = rhs(y + h * (a31 * k1 + a32 * k2));
      k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = rhs(ynew);
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    } catch (const NumericalError&) {
      // A blowup inside the guarded region boundary: shrink like a guard
      // violation. Unguarded fields keep the hard error.
      if (!X.domain_guard) throw;
      if (h < 1e-14 * std::max(1.0, T)) {
        truncated = true;
        break;
      }
      h *= 0.5;
      if (stats) ++stats->rejected;
      continue;
    }

    double norm = 0.0;
    for (int i = 0; i < err.size(); ++i) {
      const double sc =
          opts.abs_tol +
          opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = err[i] / sc;
      norm += r * r;
    }
    norm = std::sqrt(norm / static_cast<double>(err.size()));

    if (norm <= 1.0) {
      if (!X.admissible(ynew)) {
        // Shrink toward the guard; give up once the step is negligible.
        if (h < 1e-14 * std::max(1.0, T)) {
          truncated = true;
          break;
        }
        h *= 0.5;
        if (stats) ++stats->rejected;
        continue;
      }
      t += h;
      y = ynew;
      k1 = k7;  // FSAL
      ts.push_back(t);
      ys.push_back(y);
      fs.push_back(k1);
      if (stats) ++stats->steps;
    } else if (stats) {
      ++stats->rejected;
    }

    double factor = 0.9 * std::pow(std::max(norm, 1e-16), -0.2);
    factor = std::min(5.0, std::max(0.2, factor));
    h *= factor;
    if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw NumericalError("integrate_flow: step size collapse");
    }
  }

  Trajectory out(ParamLabel::Time, std::move(ts), std::move(ys),
                 std::move(fs));
  if (truncated) out.mark_truncated();
  return out;
}

}  // namespace sundman
