#pragma once

#include <vector>

#include "sundman/fields.hpp"

namespace sundman {

/// The Liouville (dilation) field Delta with components Delta^i(q) = q^i.
VectorField liouville_field(int n);

/// max over samples of ||[Delta, X](q)||; vanishes iff X is linear on the
/// sampled region.
double linearity_residual(const VectorField& X, const std::vector<Vec>& samples);

/// max over samples of ||[Delta, [Delta, X]](q) + [Delta, X](q)||; vanishes
/// iff X is affine on the sampled region.
double affinity_residual(const VectorField& X, const std::vector<Vec>& samples);

struct EigenFactorEstimate {
  std::vector<double> values;   // per-sample least-squares h(q)
  double residual = 0.0;        // max ||[Delta, X](q) - h(q) X(q)||
  std::vector<std::size_t> skipped;  // samples with X(q) ~ 0
};

/// Per-sample least-squares h(q) in [Delta, X] = h X. Small residual
/// certifies that X is conformally linearizable.
EigenFactorEstimate conformal_eigen_factor(const VectorField& X,
                                           const std::vector<Vec>& samples);

/// Solves Delta(log f) = h by quadrature of h along dilation rays
/// q -> e^s q, normalized to f = 1 on the unit sphere. The caller's h must
/// satisfy [X, Delta] = h X (equivalently [Delta, X] = -h X); then the
/// returned f makes [fX, Delta] = 0. For constant h the closed form
/// f(q) = |q|^h is returned with an analytic gradient.
ScalarField linearizing_factor(const VectorField& X, const ScalarField& h,
                               double quad_tol = 1e-13);

}  // namespace sundman
