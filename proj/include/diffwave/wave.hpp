#pragma once

#include <memory>

#include "diffwave/profile.hpp"

namespace diffwave {

struct BarState {
  double v = 0.0;
  double u = 0.0;
  double theta = 0.0;
};

struct TildeState {
  double v = 0.0;
  double u = 0.0;
  double theta = 0.0;
  double P = 0.0;
  double u_x = 0.0;
  double u_t = 0.0;
};

struct ResidualSample {
  double R1 = 0.0;  // momentum residual potential
  double R2 = 0.0;  // energy residual potential
};

/// Everything the solver and the perturbation analysis need at one (x, t).
struct WavePoint {
  SpacetimeSample T;
  double u = 0.0;      // kappa T_x / (2 T), identical for bar and tilde
  double u_x = 0.0;
  double u_t = 0.0;
  double theta_tilde = 0.0;
  double P_tilde = 0.0;
  double R1 = 0.0;
  double R2 = 0.0;
};

/// Diffusion wave (v, u, theta)bar = (T, kappa T_x / 2T, T) and its corrected
/// profile with theta tilde = theta bar - (eps u)^2 / 2.
class WaveField {
 public:
  /// Probes theta tilde > 0 on |x| <= 10 sqrt(1 + t_max) at t = 0 and t_max.
  /// Throws NonPositiveTemperature when epsilon is too large for the profile.
  WaveField(std::shared_ptr<const SelfSimilarProfile> profile, double epsilon,
            double t_max = 100.0);

  const SelfSimilarProfile& profile() const { return *profile_; }
  std::shared_ptr<const SelfSimilarProfile> profile_ptr() const { return profile_; }
  double epsilon() const { return epsilon_; }
  double kappa() const { return profile_->params().kappa; }
  double theta_minus() const { return profile_->params().theta_minus; }
  double theta_plus() const { return profile_->params().theta_plus; }

  WavePoint evaluate(double x, double t) const;

 private:
  std::shared_ptr<const SelfSimilarProfile> profile_;
  double epsilon_;
};

BarState eval_bar(const WaveField& wave, double x, double t);
/// Throws NonPositiveTemperature if theta tilde <= 0.
TildeState eval_tilde(const WaveField& wave, double x, double t);
ResidualSample residuals(const WaveField& wave, double x, double t);

/// Max-norm residuals of the approximate system on a uniform x grid,
/// x-derivatives by centred differences, t-derivatives analytic.
struct ApproxSystemResidual {
  double eq1_analytic = 0.0;  // v_t - u_x with both derivatives analytic
  double eq1 = 0.0;           // v_t - D_x u
  double eq2 = 0.0;           // eps^2 u_t + D_x P - D_x R1
  double eq3 = 0.0;           // T_t + D_x(P u) - kappa D_x(theta_x / v) - D_x R2
};

ApproxSystemResidual verify_approximate_system(const WaveField& wave, double half_width, double t,
                                               double h);

/// Max-norm of theta_t + u_x - kappa (theta_x / v)_x on the bar profile.
double verify_limit_identity(const WaveField& wave, double half_width, double t, double h);

/// Max-norm of kappa (theta_x / v)_x - 2 u_x on the bar profile, both terms
/// by centred differences.
double verify_conduction_identity(const WaveField& wave, double half_width, double t, double h);

/// log2(coarse / fine); infinity when both are below the rounding floor.
double observed_order(double coarse, double fine, double floor = 1e-13);

}  // namespace diffwave
