#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "diffwave/harness.hpp"

namespace diffwave {

enum class Command { Profile, Simulate, Sweep, Verify, Report };

std::string to_string(Command c);
/// Throws ValidationError for an unknown name.
Command command_from_string(const std::string& s);

/// Parameters of the `verify` suites.
struct VerifySettings {
  int n_cells = 1024;          // base grid; refinement doubles it
  double half_width = 8.0;     // x-window of the profile identity checks
  double t_check = 1.0;        // physical time of the profile identity checks
  double h_coarse = 0.02;      // x-spacing of the coarse profile check
  double min_order = 1.8;      // approximate system and limit identity
  double systems_tau0 = 20.0;  // start of the short run for the fin systems
  double systems_min_order = 1.0;
  int equivalence_steps = 100;
  std::vector<double> equivalence_epsilons{0.1, 0.2, 0.5};
  double equivalence_tol = 1e-10;
  double conservation_t_end = 1.0;  // physical time of the conservation run
  double conservation_tol = 1e-8;   // per unit tau
};

struct RunConfig {
  Command command = Command::Profile;
  // Single-case parameters; `simulate` and `profile` use these directly.
  double theta_minus = 0.9;
  double theta_plus = 1.1;
  double kappa = 1.0;
  double epsilon = 0.1;
  double t_end = 100.0;
  std::vector<double> t_samples{0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  int n_cells = 8192;
  double eta0 = 1.0;
  double delta_bar_sq = 1e-2;
  // Sweep parameters; an empty theta_pairs list means {(theta_minus, theta_plus)}.
  std::vector<double> epsilons{0.2, 0.1, 0.05};
  std::vector<std::pair<double, double>> theta_pairs;
  std::string grid_policy = "standard";
  double t_ref = 10.0;
  double fit_t_lo = 10.0;
  double fit_t_hi = 100.0;
  ProfileParams profile;
  SolverConfig solver;
  VerifySettings verify;
  std::string output_dir = "out";
  int verbosity = 1;

  ProfileParams profile_params() const;
  CaseSpec case_spec() const;
  SweepConfig sweep_config() const;
};

/// Applies defaults, the JSON document and then `key=value` overrides with
/// dotted keys (values are JSON; bare words are taken as strings).
/// Throws ParseError for malformed JSON and ValidationError for unknown keys,
/// wrong types or out-of-range values.
RunConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides,
                       Command command);
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      Command command);

/// Range checks with the offending key in the message, then creates the
/// output directory and checks that it is writable.
void validate_config(const RunConfig& config);

/// Resolved configuration as JSON with every key present.
std::string config_to_json(const RunConfig& config);

/// Runs the command and writes meta.json. Returns 0 when all checks pass,
/// 1 on a failed check or runtime error, 2 on a configuration error; the
/// diagnostics go to `err`.
int dispatch(const RunConfig& config, std::ostream& err);

}  // namespace diffwave
