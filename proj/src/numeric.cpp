#include "sundman/numeric.hpp"

#include <cmath>

namespace sundman {

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_rec(const std::function<double(double)>& f, double a,
                    double fa, double b, double fb, double fm, double whole,
                    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol) {
    return left + right + err / 15.0;
  }
  return adaptive_rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

// Radical-inverse in the given prime base.
double radical_inverse(unsigned long n, unsigned base) {
  double inv = 1.0 / base, result = 0.0, factor = inv;
  while (n > 0) {
    result += static_cast<double>(n % base) * factor;
    n /= base;
    factor *= inv;
  }
  return result;
}

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
    throw NumericalError("integrate_adaptive: non-finite integrand");
  }
  const double whole = simpson(a, fa, b, fb, fm);
  return adaptive_rec(f, a, fa, b, fb, fm, whole, tol, max_depth);
}

Vec HaltonSampler::next(int dim) {
  if (dim < 1 || dim > 16) {
    throw DimensionError("HaltonSampler: dim must be in [1,16]");
  }
  Vec p(dim);
  for (int i = 0; i < dim; ++i) {
    p[i] = radical_inverse(index_, kPrimes[i]);
  }
  ++index_;
  return p;
}

Vec HaltonSampler::next_annulus(int dim, double lo, double hi) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec p = next(dim);
    Vec q = (2.0 * p.array() - 1.0).matrix() * hi;
    const double r = q.norm();
    if (r >= lo && r <= hi) return q;
  }
  throw NumericalError("HaltonSampler: annulus rejection failed");
}

std::vector<Vec> annulus_samples(int dim, int count, unsigned seed) {
  HaltonSampler sampler(seed);
  std::vector<Vec> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i) samples.push_back(sampler.next_annulus(dim));
  return samples;
}

}  // namespace sundman
