#include "sundman/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace sundman {

const char* to_string(ParamLabel label) {
  switch (label) {
    case ParamLabel::Time:
      return "t";
    case ParamLabel::Tau:
      return "tau";
    case ParamLabel::ArcLength:
      return "s";
  }
  return "?";
}

Trajectory::Trajectory(ParamLabel label, std::vector<double> params,
                       std::vector<Vec> states, std::vector<Vec> derivs)
    : label_(label),
      params_(std::move(params)),
      states_(std::move(states)),
      derivs_(std::move(derivs)) {
  if (params_.empty()) throw DimensionError("Trajectory: empty");
  if (states_.size() != params_.size() || derivs_.size() != params_.size()) {
    throw DimensionError("Trajectory: length mismatch");
  }
  for (std::size_t i = 1; i < params_.size(); ++i) {
    if (!(params_[i] > params_[i - 1])) {
      throw DomainError("Trajectory: params not strictly increasing");
    }
  }
}

std::size_t Trajectory::locate(double p) const {
  auto it = std::upper_bound(params_.begin(), params_.end(), p);
  std::size_t i = static_cast<std::size_t>(it - params_.begin());
  if (i == 0) return 0;
  if (i >= params_.size()) return params_.size() - 2;
  return i - 1;
}

Vec Trajectory::at(double p) const {
  if (params_.size() == 1) return states_.front();
  const std::size_t i = locate(p);
  const double h = params_[i + 1] - params_[i];
  const double u = (p - params_[i]) / h;
  if (u == 0.0) return states_[i];
  if (u == 1.0) return states_[i + 1];
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return h00 * states_[i] + h * h10 * derivs_[i] + h01 * states_[i + 1] +
         h * h11 * derivs_[i + 1];
}

Vec Trajectory::deriv_at(double p) const {
  if (params_.size() == 1) return derivs_.front();
  const std::size_t i = locate(p);
  const double h = params_[i + 1] - params_[i];
  const double u = (p - params_[i]) / h;
  const double u2 = u * u;
  const double d00 = (6 * u2 - 6 * u) / h;
  const double d10 = 3 * u2 - 4 * u + 1;
  const double d01 = (-6 * u2 + 6 * u) / h;
  const double d11 = 3 * u2 - 2 * u;
  return d00 * states_[i] + d10 * derivs_[i] + d01 * states_[i + 1] +
         d11 * derivs_[i + 1];
}

Trajectory Trajectory::positions(int n) const {
  std::vector<Vec> pos, vel;
  pos.reserve(size());
  vel.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    pos.push_back(states_[i].head(n));
    vel.push_back(derivs_[i].head(n));
  }
  Trajectory out(label_, params_, std::move(pos), std::move(vel));
  if (truncated_) out.mark_truncated();
  return out;
}

Trajectory Trajectory::with_params(ParamLabel label,
                                   std::vector<double> new_params,
                                   const std::vector<double>& scale) const {
  if (new_params.size() != size() || scale.size() != size()) {
    throw DimensionError("with_params: length mismatch");
  }
  std::vector<Vec> derivs;
  derivs.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    derivs.push_back(derivs_[i] * scale[i]);
  }
  Trajectory out(label, std::move(new_params), states_, std::move(derivs));
  if (truncated_) out.mark_truncated();
  return out;
}

}  // namespace sundman
