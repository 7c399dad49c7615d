#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diffwave/perturbation.hpp"

namespace diffwave {

/// One simulation of the corrected-profile initial value problem.
struct CaseSpec {
  double epsilon = 0.1;
  double theta_minus = 0.9;
  double theta_plus = 1.1;
  double kappa = 1.0;
  double t_end = 100.0;
  std::vector<double> t_samples{0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  int n_cells = 8192;
  SolverConfig solver;
  ProfileParams profile;  // theta and kappa fields are overwritten from above
  /// Creep window parameter; the creep check runs when > 0.
  double creep_eta0 = 0.0;
  /// Threshold for the monitored a priori quantity.
  double delta_bar_sq = 1e-2;

  std::string id() const;
  double delta() const;
  void validate() const;
  ProfileParams profile_params() const;
  GridSpec grid() const;
};

struct SweepConfig {
  std::vector<double> epsilons{0.2, 0.1, 0.05};
  std::vector<std::pair<double, double>> theta_pairs{{0.9, 1.1}};
  double kappa = 1.0;
  double t_end = 100.0;
  std::vector<double> t_samples{0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  /// Only "standard" (y_max = 6 sqrt(1 + t_end) / eps + 10) is defined.
  std::string grid_policy = "standard";
  int n_cells = 8192;
  double eta0 = 1.0;
  double t_ref = 10.0;
  double fit_t_lo = 10.0;
  double fit_t_hi = 100.0;
  /// Threshold for the monitored a priori quantity.
  double delta_bar_sq = 1e-2;
  SolverConfig solver;
  ProfileParams profile;

  void validate() const;
  /// Cases in sweep order (theta pairs outer, epsilons inner). The creep check
  /// is enabled on the smallest epsilon of each non-degenerate pair.
  std::vector<CaseSpec> cases() const;
};

struct CreepReport {
  double eta0 = 0.0;
  int samples = 0;
  long cells = 0;
  double ratio_min = 0.0;  // min of u / theta_x over the windows
  double ratio_max = 0.0;
  double bound_lo = 0.0;   // kappa / (4 max T)
  double bound_hi = 0.0;   // kappa / min T
  double max_reference_deviation = 0.0;  // max |ratio / (kappa / 2T) - 1|
  long out_of_bounds = 0;  // cells outside that sample's [kappa / 4 max T, kappa / min T]
  bool within_bounds() const { return cells > 0 && out_of_bounds == 0; }
};

/// Throws SignViolation when u <= 0 or theta_x <= 0 inside |x| < eta0 sqrt(1+t),
/// InvalidArgument when theta_plus <= theta_minus.
CreepReport check_thermal_creep(const std::vector<FieldState>& trajectory, const WaveField& wave,
                                double eta0);

struct CaseResult {
  CaseSpec spec;
  std::vector<EnergyDiagnostics> diagnostics;  // one per sample time
  std::vector<FieldState> snapshots;
  ConservationReport conservation;
  std::optional<CreepReport> creep;
  std::string creep_error;  // SignViolation message, if any
  double y_max = 0.0;
  long steps = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> flags;

  bool zero_perturbation() const;
};

struct RunOptions {
  bool keep_snapshots = true;
  std::function<void(const std::string&)> log;
};

/// Builds profile and wave, initialises from the corrected profile and runs to
/// t_end. Solver errors are rethrown with the case id prepended.
CaseResult run_case(const CaseSpec& spec, const RunOptions& options = {});

/// Runs all cases, at most `threads` at a time; results keep the input order.
std::vector<CaseResult> run_cases(const std::vector<CaseSpec>& specs, int threads,
                                  const RunOptions& options = {});

/// Thread cap from DIFFWAVE_THREADS (default: hardware concurrency).
int sweep_threads();

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square of the log residuals
  int points = 0;
};

/// Least squares of log(norm^2) against log(1 + t) over t in [t_lo, t_hi].
/// Throws DegenerateFit for fewer than 4 points or numerically zero norms.
FitResult fit_time_exponent(const std::vector<double>& t, const std::vector<double>& norm,
                            double t_lo, double t_hi);

/// Least squares of log(norm^2) against log(eps). Needs 3 or more values.
FitResult fit_eps_exponent(const std::vector<double>& eps, const std::vector<double>& norm);

/// Names of the norm series available for fitting.
const std::vector<std::string>& norm_keys();
double norm_value(const EnergyDiagnostics& d, const std::string& key);

/// sup over samples of (1 + t)^p ||(phi, psi, zeta)||^2_{L2_x}.
double weighted_sup(const CaseResult& r, double p = 0.9);

struct ExponentTarget {
  std::string key;
  double lo;
  double hi;
};

/// Nominal acceptance windows: time exponents for L2x_pert and L2x_dpert,
/// one-sided epsilon exponents for the same two norms.
const std::vector<ExponentTarget>& alpha_targets();
const std::vector<ExponentTarget>& beta_targets();

struct SweepAnalysis {
  struct Alpha {
    std::string case_id;
    std::string key;
    std::optional<FitResult> fit;
    std::string error;
  };
  struct Beta {
    std::pair<double, double> thetas;
    std::string key;
    std::optional<FitResult> fit;
    std::string error;
    bool monotone = false;  // non-increasing as eps decreases
  };
  std::vector<Alpha> alpha;
  std::vector<Beta> beta;
};

SweepAnalysis analyze_sweep(const std::vector<CaseResult>& results, const SweepConfig& config);

/// Deterministic JSON document; identical inputs give identical bytes.
std::string emit_report(const std::vector<CaseResult>& results, const SweepAnalysis& analysis,
                        const SweepConfig& config);

/// Per-case diagnostics CSV.
std::string diagnostics_csv(const CaseResult& r);

/// One case as a JSON object (the element of the report's "cases" array) and
/// back; the aggregator rebuilds a report from these.
std::string case_to_json(const CaseResult& r, const SweepAnalysis& analysis);
CaseResult case_from_json(const std::string& text);

extern const char* const kSuiteVersion;

}  // namespace diffwave
