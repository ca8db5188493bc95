#include "maskbridge/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace maskbridge {

namespace {
void require_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("schedule: t outside [0,1]");
}
}  // namespace

NoiseSchedule::NoiseSchedule(double beta_min, double beta_max, bool normalized, ScheduleKind kind)
    : beta_min_(beta_min), beta_max_(beta_max), normalized_(normalized), kind_(kind) {
  if (!(beta_min > 0.0)) throw std::invalid_argument("schedule: beta_min must be positive");
  if (!(beta_max >= beta_min)) throw std::invalid_argument("schedule: beta_max < beta_min");
  sigma1_sq_raw_ = beta_min_ + 0.5 * (beta_max_ - beta_min_);
}

double NoiseSchedule::beta(double t) const {
  require_time(t);
  return beta_min_ + t * (beta_max_ - beta_min_);
}

double NoiseSchedule::sigma_sq(double t) const {
  require_time(t);
  const double raw = beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
  return normalized_ ? raw / sigma1_sq_raw_ : raw;
}

double NoiseSchedule::sigma(double t) const { return std::sqrt(sigma_sq(t)); }

BridgeCoefficients NoiseSchedule::coefficients(double t) const {
  const double s1 = sigma1_sq();
  const double ssq = sigma_sq(t);
  const double sbar_sq = s1 - ssq;
  BridgeCoefficients k;
  k.t = t;
  k.a = sbar_sq / s1;
  k.b = ssq / s1;
  k.c = std::sqrt(sbar_sq) * std::sqrt(ssq) / std::sqrt(s1);
  k.rho = std::sqrt(k.a * k.a + k.c * k.c);
  return k;
}

GeneralBridgeCoefficients general_coefficients(double alpha_t, double sigma_t, double alpha_T,
                                               double sigma_T) {
  if (!(sigma_T > 0.0) || alpha_T == 0.0)
    throw std::domain_error("general_coefficients: terminal SNR undefined");
  // ratio = SNR_T / SNR_t, written so that sigma_t = 0 (infinite SNR_t) is fine.
  const double ratio = (alpha_T * alpha_T * sigma_t * sigma_t) / (alpha_t * alpha_t * sigma_T * sigma_T);
  if (ratio > 1.0 + 1e-12)
    throw std::domain_error("general_coefficients: SNR_T > SNR_t (bridge must run backward in SNR)");
  const double r = ratio > 1.0 ? 1.0 : ratio;
  GeneralBridgeCoefficients k;
  k.A = alpha_t * (1.0 - r);
  k.B = r * alpha_t / alpha_T;
  k.C = sigma_t * std::sqrt(1.0 - r);
  return k;
}

TimeGrid TimeGrid::uniform(int steps, double t_max) {
  if (steps < 1) throw std::invalid_argument("time grid: steps must be >= 1");
  if (!(t_max > 0.0 && t_max <= 1.0)) throw std::invalid_argument("time grid: t_max outside (0,1]");
  TimeGrid g;
  g.steps = steps;
  g.t_max = t_max;
  g.times.resize(static_cast<size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k)
    g.times[static_cast<size_t>(k)] = t_max * static_cast<double>(steps - k) / steps;
  g.times.back() = 0.0;
  return g;
}

}  // namespace maskbridge
