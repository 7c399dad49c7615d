#pragma once

#include <array>
#include <string>
#include <vector>

#include "diffwave/hydro.hpp"

namespace diffwave {

/// Corrected profile sampled on the cells of a grid at t = eps^2 tau.
/// Velocities are in x-units (multiply by eps for U-units); T_y = eps T_x.
struct ProfileSlice {
  double tau = 0.0;
  double t = 0.0;
  std::vector<double> v, u, theta, P, u_x, u_t, R1, R2, T_y;
};

ProfileSlice sample_profile(const WaveField& wave, const GridSpec& grid, double tau);

/// Perturbation of a solver state around the corrected profile.
///   phi = v - v~, psi = U - eps u~, omega = (theta + U^2/2) - (theta~ + (eps u~)^2/2),
///   zeta = theta - theta~; Phi, Psi, Wbar are their running integrals from the
///   first cell; W = Wbar - eps u~ Psi, Y = psi^2/2 - eps u~_y Psi.
struct PerturbationState {
  GridSpec grid;
  double tau = 0.0;
  double epsilon = 0.0;
  ProfileSlice profile;
  std::vector<double> phi, psi, omega, zeta;
  std::vector<double> Phi, Psi, Wbar, W, Y;
  double identity_residual = 0.0;  // max |zeta - (W_y - Y)| over interior cells
  double identity_bound = 0.0;     // 10 h^2 scale

  double h() const { return grid.h(); }
  int size() const { return static_cast<int>(phi.size()); }
};

/// Throws IdentityViolation when zeta = W_y - Y fails beyond 10 h^2 scale,
/// InvalidArgument when the wave and the state disagree on epsilon.
PerturbationState compute_perturbation(const FieldState& state, const WaveField& wave);

/// Same as above without the identity assertion; used for refinement studies.
PerturbationState compute_perturbation_unchecked(const FieldState& state, const WaveField& wave);

enum class WeightStatus { Vacuous, Found, NoAdmissibleN };
std::string to_string(WeightStatus s);

/// B = L (Phi, Psi, W) with rows l1 = (-1, -2/l3, 1), l2 = (sqrt2, 0, sqrt2),
/// l3 = (-1, 2/l3, 1) scaled by 1/2 and l3 = sqrt(2 / v~).
struct CharFields {
  std::vector<double> b1, b2, b3;
  std::vector<double> lambda1, lambda3;
  std::vector<double> T1;    // T / theta_plus
  std::vector<double> T_y;   // analytic
  std::vector<double> v;     // v~ on the cells
  long N = 0;
  WeightStatus status = WeightStatus::Vacuous;
  double T1_deviation = 0.0;  // max |T1 - 1| / delta

  int size() const { return static_cast<int>(b1.size()); }
};

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Left and right eigenvector matrices at a given v~ (L R = I).
Mat3 left_matrix(double v_tilde);
Mat3 right_matrix(double v_tilde);
/// Convection matrix ((0,-1,0), (-1/v~,0,1/v~), (0,1,0)).
Mat3 convection_matrix(double v_tilde);
/// kappa / (4 v~) w w^T with w = (1, sqrt2, 1).
Mat3 dissipation_matrix(double v_tilde, double kappa);
Mat3 multiply(const Mat3& a, const Mat3& b);

CharFields char_decompose(const PerturbationState& pert, const WaveField& wave);

/// Max over cells of |R L m - m| relative to max |m|.
double char_round_trip_error(const PerturbationState& pert, const CharFields& ch);

/// Weighted-energy condition on one cell for exponent N:
///   -(T1^{N-1}/2)(N l1 T1_y + T1 l1_y) b1^2 + (T1^{-N-1}/2)(N l3 T1_y - T1 l3_y) b3^2
///     >= 2 |T_y| (b1^2 + b3^2).
bool weight_condition_holds(const CharFields& ch, double theta_plus, long N, int cell);
/// Number of cells (with b1^2 + b3^2 > 0) violating the condition.
int weight_condition_violations(const CharFields& ch, double theta_plus, long N);

/// Smallest admissible N <= 10^6; stores N and the status in `ch`. When no N
/// exists the weighted energy falls back to N = 0 and status NoAdmissibleN.
long select_weight_N(CharFields& ch, const WaveField& wave);

struct EnergyE1 {
  double E1 = 0.0;
  double K1 = 0.0;
  double m_norm_sq = 0.0;    // ||(Phi, Psi, W)||^2
  double c_lower = 0.0;      // c ||m||^2 <= E1
  double c_upper = 0.0;      // E1 <= C ||m||^2
  double Wy_norm_sq = 0.0;   // ||W_y||^2
  double Wy_bound = 0.0;     // (max v~ / kappa) K1
  bool equivalence_ok() const;
};

EnergyE1 energy_E1_K1(const PerturbationState& pert, const CharFields& ch, const WaveField& wave);

/// s - 1 - ln s, accurate near s = 1.
double entropy_F(double s);

struct EnergyE2 {
  double E2 = 0.0;
  double K2 = 0.0;
  double pert_norm_sq = 0.0;  // ||(phi, psi, zeta)||^2
  double ratio = 0.0;         // E2 / ||(phi, psi, zeta)||^2 (0 when both vanish)
  double zeta_y_norm_sq = 0.0;
  double zeta_y_bound = 0.0;  // (max v theta / kappa) K2
  int sandwich_checked = 0;   // cell-terms inside the 1/2-deviation guard
  int sandwich_violations = 0;
};

EnergyE2 energy_E2_K2(const PerturbationState& pert, const FieldState& state,
                      const WaveField& wave);

/// L2 and L-infinity norms of a perturbation in y and in x.
struct NormTable {
  // y-coordinate
  double L2y_pert = 0.0;   // ||(phi, psi, zeta)||
  double L2y_dpert = 0.0;  // ||(phi, psi, zeta)_y||
  double L2y_zyy = 0.0;
  double L2y_ddpert = 0.0;  // ||(phi, psi, zeta)_yy||
  double Linfy_pert = 0.0;
  double Linfy_dpert = 0.0;
  double Linf_antideriv = 0.0;  // ||(Phi, Psi, W)||_inf
  // x-coordinate
  double L2x_pert = 0.0;
  double L2x_dpert = 0.0;
  double L2x_zxx = 0.0;
  double Linf_pert = 0.0;   // ||(v - v~, theta - theta~)||_inf
  double Linf_u_err = 0.0;  // ||u - u~||_inf
  double Linf_zx = 0.0;     // ||(theta - theta~)_x||_inf
  /// ||(Phi,Psi,W)||_inf^2 + ||(phi,psi,zeta)||^2 + eps^-2 (||D(...)||^2 + ||D^2(...)||^2)
  double a_priori = 0.0;
};

NormTable perturbation_norms(const PerturbationState& pert);

struct EnergyDiagnostics {
  double tau = 0.0;
  double t = 0.0;
  EnergyE1 e1;
  EnergyE2 e2;
  long N = 0;
  WeightStatus weight_status = WeightStatus::Vacuous;
  double round_trip_error = 0.0;
  double identity_residual = 0.0;
  double identity_bound = 0.0;
  NormTable norms;
};

EnergyDiagnostics norms_report(const PerturbationState& pert, const FieldState& state,
                               const WaveField& wave);

/// tau,t,E1,K1,E2,K2,L2x_pert,L2x_dpert,L2x_zxx,Linf_pert,Linf_u_err,Linf_zx
std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const EnergyDiagnostics& d);

/// Max-norm residuals of the integrated, W-form and differentiated systems on
/// a trajectory, with tau-derivatives from snapshot triples.
struct SystemResiduals {
  std::array<double, 3> fin1{};
  std::array<double, 3> fin2{};
  std::array<double, 3> fin3{};
  int triples = 0;
  double max() const;
};

/// Needs at least 3 snapshots on the same grid. `margin` cells at each end are
/// excluded.
SystemResiduals verify_perturbation_systems(const std::vector<FieldState>& trajectory,
                                            const WaveField& wave, int margin = 4);

}  // namespace diffwave
