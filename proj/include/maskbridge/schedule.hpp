#pragma once

#include <cstdint>
#include <vector>

namespace maskbridge {

enum class ScheduleKind { Linear };

struct BridgeCoefficients {
  double t;
  double a;    // weight of the target endpoint
  double b;    // weight of the source endpoint
  double c;    // marginal noise std
  double rho;  // sqrt(a^2 + c^2), the velocity normalization
};

// General DDBM bridge coefficients for an underlying process with signal
// scale alpha_t and noise std sigma_t; kept as an independent cross-check of
// the driftless (alpha == 1) specialization below.
struct GeneralBridgeCoefficients {
  double A;
  double B;
  double C;
};

// Variance clock of the bridge: beta(t) = beta_min + t*(beta_max - beta_min),
// sigma_t^2 = integral of beta over [0, t]. In normalized mode all variances
// are divided by sigma_1^2 so that sigma_1 = 1 (the default; raw sigma_1^2 is
// 25.005 for the default constants, which would dwarf unit-scale data).
class NoiseSchedule {
 public:
  NoiseSchedule(double beta_min, double beta_max, bool normalized = true,
                ScheduleKind kind = ScheduleKind::Linear);

  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  bool normalized() const { return normalized_; }
  ScheduleKind kind() const { return kind_; }

  double beta(double t) const;       // instantaneous rate
  double sigma_sq(double t) const;   // cumulative variance (normalized if set)
  double sigma(double t) const;
  double sigma_bar_sq(double t) const { return sigma1_sq() - sigma_sq(t); }
  double sigma1_sq() const { return normalized_ ? 1.0 : sigma1_sq_raw_; }
  double sigma1_sq_raw() const { return sigma1_sq_raw_; }

  BridgeCoefficients coefficients(double t) const;

 private:
  double beta_min_;
  double beta_max_;
  bool normalized_;
  ScheduleKind kind_;
  double sigma1_sq_raw_;
};

GeneralBridgeCoefficients general_coefficients(double alpha_t, double sigma_t, double alpha_T,
                                               double sigma_T);

// Descending sampling times t_N = t_max, ..., t_0 = 0 (N+1 entries, uniform).
struct TimeGrid {
  int steps;
  double t_max;
  std::vector<double> times;

  static TimeGrid uniform(int steps, double t_max);
};

}  // namespace maskbridge
