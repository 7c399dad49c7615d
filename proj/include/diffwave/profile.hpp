#pragma once

#include <string>
#include <vector>

namespace diffwave {

/// Inputs of the self-similar boundary-value problem
///   (eta / kappa) T' + (T' / T)' = 0,   T(-inf) = theta_minus,  T(+inf) = theta_plus.
struct ProfileParams {
  double theta_minus = 0.9;
  double theta_plus = 1.1;
  double kappa = 1.0;
  double eta_max = 8.0;
  int n_nodes = 2048;
  double tol = 1e-10;

  /// Wave strength |theta_plus - theta_minus|.
  double delta() const;
  bool degenerate() const { return theta_plus == theta_minus; }
  /// Throws InvalidArgument when any field is out of range.
  void validate() const;
};

struct ProfileSample {
  double T = 0.0;
  double Tp = 0.0;   // dT/deta
  double Tpp = 0.0;  // from the ODE identity, not from differencing
};

/// Derivatives of T(x, t) = T(x / sqrt(1 + t)).
struct SpacetimeSample {
  double T = 0.0;
  double T_x = 0.0;
  double T_t = 0.0;
  double T_xx = 0.0;
};

/// Solved diffusion-wave profile on a uniform eta grid. Immutable after
/// construction; share it through `std::shared_ptr<const SelfSimilarProfile>`.
class SelfSimilarProfile {
 public:
  /// Assembles a profile from stored node data (e.g. after JSON import).
  /// Checks array sizes, node ordering and positivity.
  SelfSimilarProfile(ProfileParams params, std::vector<double> eta_nodes,
                     std::vector<double> T_values, std::vector<double> Tp_values,
                     double shoot_param, double achieved_mismatch);

  const ProfileParams& params() const { return params_; }
  const std::vector<double>& eta_nodes() const { return eta_; }
  const std::vector<double>& T_values() const { return T_; }
  const std::vector<double>& Tp_values() const { return Tp_; }
  double shoot_param() const { return shoot_param_; }
  double achieved_mismatch() const { return mismatch_; }
  double delta() const { return params_.delta(); }
  bool constant() const { return params_.degenerate(); }

  /// T'' = T'^2 / T - eta T T' / kappa.
  double second_derivative(double eta, double T, double Tp) const;
  /// Derivative of the identity above.
  double third_derivative(double eta, double T, double Tp, double Tpp) const;

 private:
  ProfileParams params_;
  std::vector<double> eta_;
  std::vector<double> T_;
  std::vector<double> Tp_;
  double shoot_param_;
  double mismatch_;
};

/// Shooting solve. Throws NoConvergence or NonMonotone.
SelfSimilarProfile solve_profile(const ProfileParams& params);

/// Quintic Hermite evaluation of T and T' with node derivatives taken from
/// the ODE; clamped to the far-field constants outside the node range.
ProfileSample profile_eval(const SelfSimilarProfile& profile, double eta);

SpacetimeSample spacetime_fields(const SelfSimilarProfile& profile, double x, double t);

struct TailReport {
  double slope_plus = 0.0;
  double slope_minus = 0.0;
  double theory_plus = 0.0;   // -theta_plus / (2 kappa)
  double theory_minus = 0.0;  // -theta_minus / (2 kappa)
  double residual_plus = 0.0;
  double residual_minus = 0.0;
  int nodes_plus = 0;
  int nodes_minus = 0;

  double relative_error_plus() const;
  double relative_error_minus() const;
};

/// Least-squares slope of log|T'| against eta^2 on [eta_max/2, eta_max] and
/// its mirror. Throws InsufficientTail.
TailReport verify_tail(const SelfSimilarProfile& profile);

struct SlopeBoundReport {
  double eta_lo = 0.0;
  double eta_hi = 0.0;
  double r_min = 0.0;  // min of sign * T' / delta
  double r_max = 0.0;
  int sign = 0;        // sign(theta_plus - theta_minus)
  int samples = 0;
  bool bounded() const;
};

/// Range of sign(theta_+ - theta_-) T'(eta) / delta over [eta_lo, eta_hi].
SlopeBoundReport verify_slope_bounds(const SelfSimilarProfile& profile, double eta_lo,
                                     double eta_hi);

/// Max-norm of (eta/kappa) T' + (T'/T)' computed with centred differences
/// of the stored node values (interior nodes only).
double ode_residual_max(const SelfSimilarProfile& profile);

std::string profile_to_json(const SelfSimilarProfile& profile);
SelfSimilarProfile profile_from_json(const std::string& text);

}  // namespace diffwave
