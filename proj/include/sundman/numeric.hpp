#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sundman {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Central-difference step per coordinate: max(1e-6, 1e-6*|x|).
inline double fd_step(double x) {
  const double h = 1e-6;
  double s = std::abs(x) * h;
  return s > h ? s : h;
}

/// Adaptive Simpson quadrature of f over [a, b].
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol = 1e-12, int max_depth = 48);

/// Deterministic quasi-random sampler (Halton sequence).
class HaltonSampler {
 public:
  explicit HaltonSampler(unsigned seed = 0) : index_(17 + 1009 * seed) {}

  /// Next point in [0,1]^dim.
  Vec next(int dim);

  /// Next point in the annulus lo <= |q| <= hi (rejection from a cube).
  Vec next_annulus(int dim, double lo = 0.5, double hi = 2.0);

 private:
  unsigned long index_;
};

/// Default sample set for residual operations: 200 quasi-random points in
/// the annulus 0.5 <= |q| <= 2.
std::vector<Vec> annulus_samples(int dim, int count = 200, unsigned seed = 0);

}  // namespace sundman
