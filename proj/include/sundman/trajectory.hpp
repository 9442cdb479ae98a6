#pragma once

#include <vector>

#include "sundman/numeric.hpp"

namespace sundman {

enum class ParamLabel { Time, Tau, ArcLength };

const char* to_string(ParamLabel label);

/// A sampled curve with strictly increasing parameter values, stored state
/// derivatives, and cubic Hermite dense output. Immutable after construction.
class Trajectory {
 public:
  Trajectory(ParamLabel label, std::vector<double> params,
             std::vector<Vec> states, std::vector<Vec> derivs);

  ParamLabel label() const { return label_; }
  std::size_t size() const { return params_.size(); }
  int state_dim() const { return static_cast<int>(states_.front().size()); }

  double param(std::size_t i) const { return params_[i]; }
  const Vec& state(std::size_t i) const { return states_[i]; }
  const Vec& deriv(std::size_t i) const { return derivs_[i]; }

  const std::vector<double>& params() const { return params_; }
  const std::vector<Vec>& states() const { return states_; }
  const std::vector<Vec>& derivs() const { return derivs_; }

  double param_front() const { return params_.front(); }
  double param_back() const { return params_.back(); }

  /// Dense output: cubic Hermite interpolation. Reproduces stored states
  /// exactly at the nodes.
  Vec at(double p) const;

  /// Derivative of the Hermite interpolant.
  Vec deriv_at(double p) const;

  /// Curve truncated before the requested horizon (domain guard hit).
  bool truncated() const { return truncated_; }
  void mark_truncated() { truncated_ = true; }

  /// Positions-only projection: keeps the first n of 2n state components.
  Trajectory positions(int n) const;

  /// Relabeled copy with new parameter values at the same states; derivs are
  /// rescaled by dp_old/dp_new evaluated per node.
  Trajectory with_params(ParamLabel label, std::vector<double> new_params,
                         const std::vector<double>& scale) const;

 private:
  std::size_t locate(double p) const;

  ParamLabel label_;
  std::vector<double> params_;
  std::vector<Vec> states_;
  std::vector<Vec> derivs_;
  bool truncated_ = false;
};

}  // namespace sundman
