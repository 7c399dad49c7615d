#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "diffwave/wave.hpp"

namespace diffwave {

namespace detail {
class Scheme;
}

/// Uniform cell-centred grid on [y_min, y_max] with y_max = -y_min.
struct GridSpec {
  double y_min = -1.0;
  double y_max = 1.0;
  int n_cells = 128;

  double h() const { return (y_max - y_min) / n_cells; }
  double center(int i) const { return y_min + (i + 0.5) * h(); }
  void validate() const;

  static GridSpec symmetric(double y_max, int n_cells);
  /// y_max = 6 sqrt(1 + t_end) / epsilon + 10.
  static GridSpec for_run(double epsilon, double t_end, int n_cells);
};

enum class Conduction { ExplicitSubstep, ImplicitTrapezoidal };
/// profile-characteristic: profile ghosts for the incoming and zero-speed
/// characteristic fields, outgoing acoustic field extrapolated from the
/// boundary cell (non-reflecting for the acoustic transient).
enum class BoundaryKind { ProfileDirichlet, ConstantFarfield, ProfileCharacteristic };
enum class Limiter { None, Minmod };

std::string to_string(Conduction c);
std::string to_string(BoundaryKind b);
std::string to_string(Limiter l);
/// Inverse of to_string; throws InvalidArgument on unknown names.
Conduction conduction_from_string(const std::string& s);
BoundaryKind boundary_from_string(const std::string& s);
Limiter limiter_from_string(const std::string& s);

struct SolverConfig {
  double cfl = 0.5;
  Conduction conduction = Conduction::ImplicitTrapezoidal;
  BoundaryKind bc = BoundaryKind::ProfileDirichlet;
  Limiter limiter = Limiter::Minmod;

  void validate() const;
};

/// Primitive state (v, U = eps u, theta) of the scaled system
///   v_tau - U_y = 0,  U_tau + P_y = 0,  (theta + U^2/2)_tau + (P U)_y = kappa (theta_y / v)_y
/// with P = theta / v.
struct FieldState {
  GridSpec grid;
  double tau = 0.0;
  double epsilon = 0.0;
  std::vector<double> v;
  std::vector<double> U;
  std::vector<double> theta;

  /// Time integrals of the (v, U, E) fluxes through the left and right domain
  /// ends, positive in +y. Used to close the conservation ledger.
  std::array<double, 3> flux_left{};
  std::array<double, 3> flux_right{};
  /// (v, U, theta) ghost values for the constant-farfield boundary.
  std::array<double, 3> far_left{};
  std::array<double, 3> far_right{};

  double t() const { return epsilon * epsilon * tau; }
  int size() const { return static_cast<int>(v.size()); }
};

/// Samples (v, eps u, theta)tilde at t = 0 on the cell centres (x = eps y).
/// Throws GridTooNarrow when |T'(eps y_max)| >= 1e-10 delta.
FieldState init_state(const WaveField& wave, const GridSpec& grid);

/// Uniform state with optional per-cell perturbations; far fields are the
/// unperturbed constants.
FieldState uniform_state(const GridSpec& grid, double epsilon, double v, double U, double theta);

/// cfl h / max(sqrt(2 theta) / v); also <= cfl h^2 min(v) / (2 kappa) for
/// explicit conduction.
double stable_dtau(const FieldState& state, const SolverConfig& config, double kappa);

/// Strang-split finite-volume integrator (half conduction, SSP-RK2 MUSCL /
/// Rusanov hyperbolic step, half conduction). Keeps its workspace between steps.
class HydroSolver {
 public:
  HydroSolver(SolverConfig config, const WaveField& wave);
  ~HydroSolver();
  HydroSolver(HydroSolver&&) noexcept;

  const SolverConfig& config() const { return config_; }
  double kappa() const { return wave_.kappa(); }

  /// Advances in place. Throws PositivityLoss.
  void advance(FieldState& state, double dtau);

  /// Snapshots at each requested tau in [state.tau, tau_end]; the final step
  /// before a sample is shortened to land on it. Without samples the final
  /// state is returned.
  std::vector<FieldState> run(FieldState state, double tau_end,
                              const std::vector<double>& sample_taus);

  /// Called after each completed step; used for progress reporting.
  std::function<void(const FieldState&)> on_step;

 private:
  SolverConfig config_;
  const WaveField& wave_;
  std::unique_ptr<detail::Scheme> scheme_;
  GridSpec scheme_grid_{};
};

FieldState step(const FieldState& state, double dtau, const SolverConfig& config,
                const WaveField& wave);

std::vector<FieldState> run(const FieldState& state, double tau_end, const SolverConfig& config,
                            const WaveField& wave, const std::vector<double>& sample_taus);

struct ConservationEntry {
  double change = 0.0;           // sum(q) h at the end minus at the start
  double boundary_inflow = 0.0;  // integral of F(left) - F(right)
  double imbalance = 0.0;        // |change - boundary_inflow|
  double imbalance_per_tau = 0.0;  // imbalance / (dtau * max(1, |sum q h|))
};

struct ConservationReport {
  // Index 0: sum v h, 1: sum U h, 2: sum (theta + U^2/2) h.
  std::array<ConservationEntry, 3> total{};
  std::array<double, 3> worst_interval_per_tau{};
  double max_imbalance_per_tau() const;
};

/// Conserved totals of a state (Neumaier-compensated sums).
std::array<double, 3> conserved_totals(const FieldState& state);

ConservationReport conservation_report(const std::vector<FieldState>& trajectory);

/// Literal unscaled system in (x, t): v_t - u_x = 0, u_t + P_x / eps^2 = 0,
/// (theta + (eps u)^2 / 2)_t + (P u)_x = kappa (theta_x / v)_x.
struct UnscaledState {
  GridSpec grid;  // in x
  double t = 0.0;
  std::vector<double> v;
  std::vector<double> u;
  std::vector<double> theta;
};

struct EquivalenceResult {
  int steps = 0;
  double dtau = 0.0;
  double discrepancy = 0.0;  // max over cells of |(v, eps u, theta) - (v, U, theta)|
};

/// Integrates both forms with the same scheme and dt = eps^2 dtau for
/// `steps` steps and compares in scaled variables.
EquivalenceResult verify_unscaled_equivalence(const WaveField& wave, const GridSpec& grid,
                                              int steps, const SolverConfig& config);

/// Same, with the number of steps chosen to reach physical time t_end.
EquivalenceResult verify_unscaled_equivalence(const WaveField& wave, const GridSpec& grid,
                                              double t_end, const SolverConfig& config);

/// Writes `y,v,U,theta` rows with 17 significant digits.
void write_snapshot_csv(const FieldState& state, const std::string& path);
std::string snapshot_file_name(double tau);

}  // namespace diffwave
