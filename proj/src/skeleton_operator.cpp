#include "skeleton_operator.hpp"

#include "snse/errors.hpp"

namespace snse::detail {

SpectralField scale_modes(const SpectralField& u, const std::vector<double>& w) {
  ModeCoefficients c = u.coefficients();
  for (std::size_t i = 0; i < w.size(); ++i) {
    c.c1[i] *= w[i];
    c.c2[i] *= w[i];
  }
  return SpectralField::unchecked(u.grid(), std::move(c));
}

SkeletonOperator::SkeletonOperator(const Trajectory& u0_traj, const SimConfig& config)
    : u0_(&u0_traj), config_(config), weights_(config.grid, config.dt), steps_(config.steps()) {
  config.validate();
  if (u0_traj.stride != 1 || u0_traj.size() != steps_ + 1 || !(u0_traj.grid == config.grid)) {
    throw FieldError("skeleton operator: u0 must be recorded at every solver step");
  }
  multiplier_.reserve(steps_);
  for (std::size_t m = 0; m < steps_; ++m) multiplier_.push_back(config.noise.multiplier(u0_traj.frames[m]));
  for (const auto& d : config.noise.directions()) gain_.push_back(d.gain);
}

std::vector<SpectralField> SkeletonOperator::forward(const Control& h) const {
  if (h.steps() != steps_ || h.num_modes() != num_modes()) throw FieldError("skeleton operator: control shape");
  std::vector<SpectralField> x;
  x.reserve(steps_ + 1);
  x.emplace_back(config_.grid);
  std::vector<double> coords(num_modes());
  for (std::size_t m = 0; m < steps_; ++m) {
    const auto hm = h.at(m);
    for (std::size_t j = 0; j < coords.size(); ++j) coords[j] = multiplier_[m] * gain_[j] * hm[j];
    SpectralField rhs = config_.noise.synthesize(coords);
    if (config_.nonlinear) {
      const SpectralField& u0 = u0_->frames[m];
      rhs = rhs - bilinear_B(x.back(), u0) - bilinear_B(u0, x.back());
    }
    x.push_back(exponential_update(x.back(), rhs, weights_));
  }
  return x;
}

Control SkeletonOperator::adjoint(const std::function<const SpectralField*(std::size_t)>& seed) const {
  Control grad(config_.horizon, steps_, num_modes());
  SpectralField lambda(config_.grid);
  if (const auto* g = seed(steps_)) lambda = *g;
  for (std::size_t m = steps_; m-- > 0;) {
    const SpectralField psi = scale_modes(lambda, weights_.phi);
    const auto c = config_.noise.coordinates(psi);
    auto gm = grad.at(m);
    for (std::size_t j = 0; j < c.size(); ++j) gm[j] = multiplier_[m] * gain_[j] * c[j];
    SpectralField next = scale_modes(lambda, weights_.decay);
    if (config_.nonlinear) {
      const SpectralField& u0 = u0_->frames[m];
      next = next - bilinear_B_first_transpose(u0, psi) + bilinear_B(u0, psi);
    }
    if (const auto* g = seed(m)) next = next + *g;
    lambda = std::move(next);
  }
  return grad;
}

}  // namespace snse::detail
