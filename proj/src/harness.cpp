#include "diffwave/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "diffwave/error.hpp"

namespace diffwave {

const char* const kSuiteVersion = "1.0.0";

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kZeroNorm = 1e-10;

void log_line(const RunOptions& o, const std::string& s) {
  if (o.log) o.log(s);
}

}  // namespace

std::string CaseSpec::id() const {
  return fmt::format("eps={}_thm={}_thp={}_kappa={}", epsilon, theta_minus, theta_plus, kappa);
}

double CaseSpec::delta() const { return std::abs(theta_plus - theta_minus); }

void CaseSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 0.5)) {
    throw InvalidArgument(fmt::format("epsilon = {} outside (0, 0.5]", epsilon));
  }
  if (!(t_end > 0.0)) throw InvalidArgument("t_end must be positive");
  for (double t : t_samples) {
    if (!(t >= 0.0 && t <= t_end)) {
      throw InvalidArgument(fmt::format("sample time {} outside [0, t_end]", t));
    }
  }
  if (creep_eta0 < 0.0) throw InvalidArgument("creep eta0 must be nonnegative");
  profile_params().validate();
  solver.validate();
  grid().validate();
}

ProfileParams CaseSpec::profile_params() const {
  ProfileParams p = profile;
  p.theta_minus = theta_minus;
  p.theta_plus = theta_plus;
  p.kappa = kappa;
  return p;
}

GridSpec CaseSpec::grid() const { return GridSpec::for_run(epsilon, t_end, n_cells); }

void SweepConfig::validate() const {
  if (epsilons.empty()) throw InvalidArgument("sweep needs at least one epsilon");
  for (double e : epsilons) {
    if (!(e > 0.0 && e <= 0.5)) throw InvalidArgument(fmt::format("epsilon = {} outside (0, 0.5]", e));
  }
  if (theta_pairs.empty()) throw InvalidArgument("sweep needs at least one theta pair");
  if (!(t_end > 0.0)) throw InvalidArgument("t_end must be positive");
  for (double t : t_samples) {
    if (!(t >= 0.0 && t <= t_end)) {
      throw InvalidArgument(fmt::format("sample time {} outside [0, t_end]", t));
    }
  }
  if (!(eta0 > 0.0)) throw InvalidArgument("eta0 must be positive");
  if (grid_policy != "standard") {
    throw InvalidArgument(fmt::format("unknown grid policy '{}'", grid_policy));
  }
  if (!(fit_t_lo < fit_t_hi)) throw InvalidArgument("fit window must have t_lo < t_hi");
  for (const auto& c : cases()) c.validate();
}

std::vector<CaseSpec> SweepConfig::cases() const {
  std::vector<CaseSpec> out;
  const double eps_min = *std::min_element(epsilons.begin(), epsilons.end());
  for (const auto& [thm, thp] : theta_pairs) {
    for (double e : epsilons) {
      CaseSpec c;
      c.epsilon = e;
      c.theta_minus = thm;
      c.theta_plus = thp;
      c.kappa = kappa;
      c.t_end = t_end;
      c.t_samples = t_samples;
      c.n_cells = n_cells;
      c.solver = solver;
      c.profile = profile;
      c.delta_bar_sq = delta_bar_sq;
      c.creep_eta0 = (e == eps_min && thp > thm) ? eta0 : 0.0;
      out.push_back(c);
    }
  }
  return out;
}

CreepReport check_thermal_creep(const std::vector<FieldState>& trajectory, const WaveField& wave,
                                double eta0) {
  if (!(wave.theta_plus() > wave.theta_minus())) {
    throw InvalidArgument("thermal creep check needs theta_plus > theta_minus");
  }
  if (!(eta0 > 0.0)) throw InvalidArgument("eta0 must be positive");
  const double kappa = wave.kappa();
  CreepReport r;
  r.eta0 = eta0;
  r.ratio_min = std::numeric_limits<double>::infinity();
  r.ratio_max = -std::numeric_limits<double>::infinity();
  double T_min_all = std::numeric_limits<double>::infinity(), T_max_all = 0.0;

  for (const auto& s : trajectory) {
    const double eps = s.epsilon;
    const double h = s.grid.h();
    const double t = s.t();
    const double half = eta0 * std::sqrt(1.0 + t);
    struct Cell {
      double ratio, T;
    };
    std::vector<Cell> cells;
    double T_min = std::numeric_limits<double>::infinity(), T_max = 0.0;
    for (int i = 1; i + 1 < s.size(); ++i) {
      const double x = eps * s.grid.center(i);
      if (!(std::abs(x) < half)) continue;
      const double u = s.U[i] / eps;
      const double theta_x = (s.theta[i + 1] - s.theta[i - 1]) / (2.0 * h * eps);
      if (!(u > 0.0) || !(theta_x > 0.0)) {
        throw SignViolation(fmt::format(
            "u = {:.3e}, theta_x = {:.3e} at x = {:.4f}, t = {} inside the creep window", u,
            theta_x, x, t));
      }
      const double T = wave.evaluate(x, t).T.T;
      cells.push_back({u / theta_x, T});
      T_min = std::min(T_min, T);
      T_max = std::max(T_max, T);
    }
    const double lo = kappa / (4.0 * T_max), hi = kappa / T_min;
    for (const auto& c : cells) {
      r.ratio_min = std::min(r.ratio_min, c.ratio);
      r.ratio_max = std::max(r.ratio_max, c.ratio);
      r.max_reference_deviation =
          std::max(r.max_reference_deviation, std::abs(c.ratio / (kappa / (2.0 * c.T)) - 1.0));
      if (c.ratio < lo || c.ratio > hi) ++r.out_of_bounds;
    }
    r.cells += static_cast<long>(cells.size());
    ++r.samples;
    T_min_all = std::min(T_min_all, T_min);
    T_max_all = std::max(T_max_all, T_max);
  }
  r.bound_lo = kappa / (4.0 * T_max_all);
  r.bound_hi = kappa / T_min_all;
  return r;
}

bool CaseResult::zero_perturbation() const {
  for (const auto& d : diagnostics) {
    if (d.norms.L2x_pert > kZeroNorm || d.norms.Linf_pert > kZeroNorm ||
        d.norms.Linf_u_err > kZeroNorm) {
      return false;
    }
  }
  return true;
}

CaseResult run_case(const CaseSpec& spec, const RunOptions& options) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  CaseResult r;
  r.spec = spec;
  const std::string id = spec.id();
  try {
    auto profile = std::make_shared<const SelfSimilarProfile>(solve_profile(spec.profile_params()));
    const WaveField wave(profile, spec.epsilon, spec.t_end);
    const GridSpec grid = spec.grid();
    r.y_max = grid.y_max;
    const double e2 = spec.epsilon * spec.epsilon;

    std::vector<double> taus;
    for (double t : spec.t_samples) taus.push_back(t / e2);
    // Conservation is measured from the initial state to t_end.
    taus.push_back(0.0);
    taus.push_back(spec.t_end / e2);

    HydroSolver solver(spec.solver, wave);
    long steps = 0;
    const double tau_end = spec.t_end / e2;
    double next_report = 0.1;
    solver.on_step = [&](const FieldState& s) {
      ++steps;
      if (options.log && s.tau >= next_report * tau_end) {
        options.log(fmt::format("[{}] t = {:.4g} ({} steps)", id, s.t(), steps));
        next_report += 0.1;
      }
    };
    log_line(options, fmt::format("[{}] start: {} cells, y_max = {:.6g}", id, grid.n_cells, grid.y_max));
    std::vector<FieldState> traj = solver.run(init_state(wave, grid), tau_end, taus);
    r.steps = steps;

    // Keep only the requested samples.
    std::vector<FieldState> kept;
    for (const auto& s : traj) {
      const bool requested = std::any_of(spec.t_samples.begin(), spec.t_samples.end(),
                                         [&](double t) { return t / e2 == s.tau; });
      if (requested) kept.push_back(s);
    }
    r.conservation = conservation_report(traj);

    bool no_weight = false, above = false;
    for (const auto& s : kept) {
      const PerturbationState p = compute_perturbation(s, wave);
      r.diagnostics.push_back(norms_report(p, s, wave));
      no_weight |= r.diagnostics.back().weight_status == WeightStatus::NoAdmissibleN;
      above |= r.diagnostics.back().norms.a_priori > spec.delta_bar_sq;
    }
    if (spec.creep_eta0 > 0.0) {
      try {
        r.creep = check_thermal_creep(kept, wave, spec.creep_eta0);
      } catch (const SignViolation& e) {
        r.creep_error = e.what();
      }
    }

    r.flags.push_back("positivity-maintained");
    if (spec.delta() == 0.0 && r.zero_perturbation()) r.flags.push_back("all-zero-perturbation");
    if (!r.diagnostics.empty() && r.diagnostics.front().t == 0.0 &&
        r.diagnostics.front().norms.L2x_pert <= kZeroNorm) {
      r.flags.push_back("initial-perturbation-zero");
    }
    if (no_weight) r.flags.push_back("no-admissible-N");
    if (above) r.flags.push_back("a-priori-above-threshold");
    if (!r.creep_error.empty()) r.flags.push_back("creep-sign-violation");
    if (options.keep_snapshots) r.snapshots = std::move(kept);
  } catch (const PositivityLoss& e) {
    throw PositivityLoss(fmt::format("[{}] {}", id, e.what()), e.tau());
  } catch (const GridTooNarrow& e) {
    throw GridTooNarrow(fmt::format("[{}] {}", id, e.what()));
  } catch (const IdentityViolation& e) {
    throw IdentityViolation(fmt::format("[{}] {}", id, e.what()));
  } catch (const NonPositiveTemperature& e) {
    throw NonPositiveTemperature(fmt::format("[{}] {}", id, e.what()));
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log_line(options, fmt::format("[{}] done in {:.1f} s, {} steps", id, r.wall_seconds, r.steps));
  return r;
}

int sweep_threads() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DIFFWAVE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min<long>(v, 1024));
  }
  return static_cast<int>(hw);
}

std::vector<CaseResult> run_cases(const std::vector<CaseSpec>& specs, int threads,
                                  const RunOptions& options) {
  const int n = static_cast<int>(specs.size());
  std::vector<CaseResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < n;) {
      try {
        results[i] = run_case(specs[i], options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

namespace {

FitResult least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateFit("abscissae coincide");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = y[i] - (f.intercept + f.slope * x[i]);
    ss += d * d;
  }
  f.residual = std::sqrt(ss / n);
  f.points = n;
  return f;
}

void check_norms(const std::vector<double>& norm) {
  bool all_zero = true;
  for (double v : norm) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DegenerateFit("norm values must be finite");
    if (v >= 1e-14) all_zero = false;
  }
  if (all_zero) throw DegenerateFit("all norm values are below 1e-14");
  for (double v : norm) {
    if (!(v > 0.0)) throw DegenerateFit("cannot fit a zero norm value on a log scale");
  }
}

}  // namespace

FitResult fit_time_exponent(const std::vector<double>& t, const std::vector<double>& norm,
                            double t_lo, double t_hi) {
  if (t.size() != norm.size()) throw InvalidArgument("series lengths differ");
  std::vector<double> x, y, vals;
  // Sample times come back as eps^2 (t / eps^2); admit rounding at the ends.
  const double lo = t_lo - 1e-9 * std::max(1.0, std::abs(t_lo));
  const double hi = t_hi + 1e-9 * std::max(1.0, std::abs(t_hi));
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= lo && t[i] <= hi) vals.push_back(norm[i]);
  }
  if (vals.size() < 4) {
    throw DegenerateFit(fmt::format("{} samples in [{}, {}]; need 4", vals.size(), t_lo, t_hi));
  }
  check_norms(vals);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= lo && t[i] <= hi) {
      x.push_back(std::log1p(t[i]));
      y.push_back(2.0 * std::log(norm[i]));
    }
  }
  return least_squares(x, y);
}

FitResult fit_eps_exponent(const std::vector<double>& eps, const std::vector<double>& norm) {
  if (eps.size() != norm.size()) throw InvalidArgument("series lengths differ");
  if (eps.size() < 3) throw DegenerateFit("need at least three epsilon values");
  check_norms(norm);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) throw InvalidArgument("epsilon must be positive");
    x.push_back(std::log(eps[i]));
    y.push_back(2.0 * std::log(norm[i]));
  }
  return least_squares(x, y);
}

const std::vector<std::string>& norm_keys() {
  static const std::vector<std::string> keys{"L2x_pert",  "L2x_dpert",  "L2x_zxx",
                                             "Linf_pert", "Linf_u_err", "Linf_zx"};
  return keys;
}

double norm_value(const EnergyDiagnostics& d, const std::string& key) {
  if (key == "L2x_pert") return d.norms.L2x_pert;
  if (key == "L2x_dpert") return d.norms.L2x_dpert;
  if (key == "L2x_zxx") return d.norms.L2x_zxx;
  if (key == "Linf_pert") return d.norms.Linf_pert;
  if (key == "Linf_u_err") return d.norms.Linf_u_err;
  if (key == "Linf_zx") return d.norms.Linf_zx;
  throw InvalidArgument(fmt::format("unknown norm '{}'", key));
}

double weighted_sup(const CaseResult& r, double p) {
  double s = 0.0;
  for (const auto& d : r.diagnostics) {
    s = std::max(s, std::pow(1.0 + d.t, p) * d.norms.L2x_pert * d.norms.L2x_pert);
  }
  return s;
}

const std::vector<ExponentTarget>& alpha_targets() {
  static const std::vector<ExponentTarget> t{{"L2x_pert", -1.5, -0.5}, {"L2x_dpert", -2.0, -1.0}};
  return t;
}

const std::vector<ExponentTarget>& beta_targets() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const std::vector<ExponentTarget> t{{"L2x_pert", 2.5, inf}, {"L2x_dpert", 2.2, inf}};
  return t;
}

SweepAnalysis analyze_sweep(const std::vector<CaseResult>& results, const SweepConfig& config) {
  SweepAnalysis a;
  for (const auto& r : results) {
    if (r.spec.delta() == 0.0) continue;
    std::vector<double> t;
    for (const auto& d : r.diagnostics) t.push_back(d.t);
    for (const auto& key : norm_keys()) {
      SweepAnalysis::Alpha entry{r.spec.id(), key, std::nullopt, ""};
      std::vector<double> v;
      for (const auto& d : r.diagnostics) v.push_back(norm_value(d, key));
      try {
        entry.fit = fit_time_exponent(t, v, config.fit_t_lo, config.fit_t_hi);
      } catch (const DegenerateFit& e) {
        entry.error = e.what();
      }
      a.alpha.push_back(entry);
    }
  }

  // Group by (theta_minus, theta_plus), keeping the first-seen order.
  std::vector<std::pair<double, double>> groups;
  for (const auto& r : results) {
    const std::pair<double, double> g{r.spec.theta_minus, r.spec.theta_plus};
    if (r.spec.delta() > 0.0 && std::find(groups.begin(), groups.end(), g) == groups.end()) {
      groups.push_back(g);
    }
  }
  for (const auto& g : groups) {
    // (eps, diagnostics at t_ref), ordered by decreasing eps.
    std::vector<std::pair<double, const EnergyDiagnostics*>> rows;
    for (const auto& r : results) {
      if (r.spec.theta_minus != g.first || r.spec.theta_plus != g.second) continue;
      for (const auto& d : r.diagnostics) {
        // t = eps^2 (t / eps^2) need not round-trip exactly.
        if (std::abs(d.t - config.t_ref) <= 1e-9 * std::max(1.0, config.t_ref)) {
          rows.push_back({r.spec.epsilon, &d});
        }
      }
    }
    std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    for (const auto& key : norm_keys()) {
      SweepAnalysis::Beta entry{g, key, std::nullopt, "", false};
      std::vector<double> e, v;
      for (const auto& [eps, d] : rows) {
        e.push_back(eps);
        v.push_back(norm_value(*d, key));
      }
      entry.monotone = v.size() >= 2;
      for (std::size_t i = 1; i < v.size(); ++i) entry.monotone &= v[i] < v[i - 1];
      try {
        entry.fit = fit_eps_exponent(e, v);
      } catch (const DegenerateFit& ex) {
        entry.error = ex.what();
      }
      a.beta.push_back(entry);
    }
  }
  return a;
}

namespace {

ojson fit_json(const std::optional<FitResult>& fit, const std::string& error, double lo, double hi,
               bool has_target) {
  ojson j;
  if (fit) {
    j["value"] = fit->slope;
    j["intercept"] = fit->intercept;
    j["residual"] = fit->residual;
    j["points"] = fit->points;
  } else {
    j["value"] = nullptr;
    j["error"] = error;
  }
  if (has_target) {
    j["target"] = {lo, std::isfinite(hi) ? ojson(hi) : ojson(nullptr)};
    j["pass"] = fit && fit->slope >= lo && fit->slope <= hi;
  }
  return j;
}

const ExponentTarget* find_target(const std::vector<ExponentTarget>& ts, const std::string& key) {
  for (const auto& t : ts)
    if (t.key == key) return &t;
  return nullptr;
}

ojson case_object(const CaseResult& r, const SweepAnalysis& analysis) {
  const CaseSpec& s = r.spec;
  ojson c;
  c["id"] = s.id();
  c["params"] = {{"epsilon", s.epsilon},
                 {"theta_minus", s.theta_minus},
                 {"theta_plus", s.theta_plus},
                 {"kappa", s.kappa},
                 {"t_end", s.t_end},
                 {"t_samples", s.t_samples},
                 {"n_cells", s.n_cells},
                 {"y_max", r.y_max},
                 {"solver",
                  {{"cfl", s.solver.cfl},
                   {"conduction", to_string(s.solver.conduction)},
                   {"bc", to_string(s.solver.bc)},
                   {"limiter", to_string(s.solver.limiter)}}},
                 {"profile",
                  {{"eta_max", s.profile.eta_max},
                   {"n_nodes", s.profile.n_nodes},
                   {"tol", s.profile.tol}}},
                 {"creep_eta0", s.creep_eta0},
                 {"delta_bar_sq", s.delta_bar_sq}};

  ojson norms = ojson::array();
  for (const auto& d : r.diagnostics) {
    norms.push_back({{"t", d.t},
                     {"tau", d.tau},
                     {"E1", d.e1.E1},
                     {"K1", d.e1.K1},
                     {"E2", d.e2.E2},
                     {"K2", d.e2.K2},
                     {"L2x_pert", d.norms.L2x_pert},
                     {"L2x_dpert", d.norms.L2x_dpert},
                     {"L2x_zxx", d.norms.L2x_zxx},
                     {"Linf_pert", d.norms.Linf_pert},
                     {"Linf_u_err", d.norms.Linf_u_err},
                     {"Linf_zx", d.norms.Linf_zx},
                     {"a_priori", d.norms.a_priori},
                     {"N", d.N},
                     {"weight_status", to_string(d.weight_status)},
                     {"E1_lower", d.e1.c_lower * d.e1.m_norm_sq},
                     {"E1_upper", d.e1.c_upper * d.e1.m_norm_sq},
                     {"E2_ratio", d.e2.ratio},
                     {"identity_residual", d.identity_residual},
                     {"identity_bound", d.identity_bound}});
  }
  c["norms"] = norms;

  ojson alpha = ojson::object(), beta = ojson::object();
  for (const auto& a : analysis.alpha) {
    if (a.case_id != s.id()) continue;
    const ExponentTarget* t = find_target(alpha_targets(), a.key);
    alpha[a.key] = fit_json(a.fit, a.error, t ? t->lo : 0.0, t ? t->hi : 0.0, t != nullptr);
  }
  for (const auto& b : analysis.beta) {
    if (b.thetas.first != s.theta_minus || b.thetas.second != s.theta_plus) continue;
    const ExponentTarget* t = find_target(beta_targets(), b.key);
    ojson j = fit_json(b.fit, b.error, t ? t->lo : 0.0, t ? t->hi : 0.0, t != nullptr);
    j["monotone"] = b.monotone;
    beta[b.key] = j;
  }
  c["fits"] = {{"alpha", alpha}, {"beta", beta}};

  if (r.creep) {
    const CreepReport& k = *r.creep;
    c["creep"] = {{"eta0", k.eta0},
                  {"samples", k.samples},
                  {"cells", k.cells},
                  {"ratio_min", k.ratio_min},
                  {"ratio_max", k.ratio_max},
                  {"bound_lo", k.bound_lo},
                  {"bound_hi", k.bound_hi},
                  {"max_reference_deviation", k.max_reference_deviation},
                  {"out_of_bounds", k.out_of_bounds},
                  {"pass", k.within_bounds()}};
  } else if (!r.creep_error.empty()) {
    c["creep"] = {{"error", r.creep_error}, {"pass", false}};
  } else {
    c["creep"] = nullptr;
  }

  ojson cons = ojson::array();
  for (int k = 0; k < 3; ++k) {
    const auto& e = r.conservation.total[k];
    cons.push_back({{"change", e.change},
                    {"boundary_inflow", e.boundary_inflow},
                    {"imbalance", e.imbalance},
                    {"imbalance_per_tau", e.imbalance_per_tau},
                    {"worst_interval_per_tau", r.conservation.worst_interval_per_tau[k]}});
  }
  c["conservation"] = {{"quantities", {"v", "U", "E"}}, {"entries", cons}};
  c["bounds"] = {{"sup_weighted_L2x_pert_sq", weighted_sup(r, 0.9)}, {"steps", r.steps}};
  c["flags"] = r.flags;
  return c;
}

}  // namespace

std::string case_to_json(const CaseResult& r, const SweepAnalysis& analysis) {
  return case_object(r, analysis).dump(2) + "\n";
}

CaseResult case_from_json(const std::string& text) {
  ojson c;
  try {
    c = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("case document: {}", e.what()), e.byte);
  }
  try {
    CaseResult r;
    const auto& p = c.at("params");
    r.spec.epsilon = p.at("epsilon").get<double>();
    r.spec.theta_minus = p.at("theta_minus").get<double>();
    r.spec.theta_plus = p.at("theta_plus").get<double>();
    r.spec.kappa = p.at("kappa").get<double>();
    r.spec.t_end = p.at("t_end").get<double>();
    r.spec.t_samples = p.at("t_samples").get<std::vector<double>>();
    r.spec.n_cells = p.at("n_cells").get<int>();
    r.y_max = p.at("y_max").get<double>();
    const auto& sv = p.at("solver");
    r.spec.solver.cfl = sv.at("cfl").get<double>();
    r.spec.solver.conduction = conduction_from_string(sv.at("conduction").get<std::string>());
    r.spec.solver.bc = boundary_from_string(sv.at("bc").get<std::string>());
    r.spec.solver.limiter = limiter_from_string(sv.at("limiter").get<std::string>());
    const auto& pr = p.at("profile");
    r.spec.profile.eta_max = pr.at("eta_max").get<double>();
    r.spec.profile.n_nodes = pr.at("n_nodes").get<int>();
    r.spec.profile.tol = pr.at("tol").get<double>();
    r.spec.creep_eta0 = p.at("creep_eta0").get<double>();
    r.spec.delta_bar_sq = p.at("delta_bar_sq").get<double>();

    for (const auto& n : c.at("norms")) {
      EnergyDiagnostics d;
      d.t = n.at("t").get<double>();
      d.tau = n.at("tau").get<double>();
      d.e1.E1 = n.at("E1").get<double>();
      d.e1.K1 = n.at("K1").get<double>();
      d.e2.E2 = n.at("E2").get<double>();
      d.e2.K2 = n.at("K2").get<double>();
      d.norms.L2x_pert = n.at("L2x_pert").get<double>();
      d.norms.L2x_dpert = n.at("L2x_dpert").get<double>();
      d.norms.L2x_zxx = n.at("L2x_zxx").get<double>();
      d.norms.Linf_pert = n.at("Linf_pert").get<double>();
      d.norms.Linf_u_err = n.at("Linf_u_err").get<double>();
      d.norms.Linf_zx = n.at("Linf_zx").get<double>();
      d.norms.a_priori = n.at("a_priori").get<double>();
      d.N = n.at("N").get<long>();
      const std::string ws = n.at("weight_status").get<std::string>();
      d.weight_status = ws == "found"     ? WeightStatus::Found
                        : ws == "vacuous" ? WeightStatus::Vacuous
                                          : WeightStatus::NoAdmissibleN;
      // Stored as products; recover with unit norm so the products round-trip.
      d.e1.m_norm_sq = 1.0;
      d.e1.c_lower = n.at("E1_lower").get<double>();
      d.e1.c_upper = n.at("E1_upper").get<double>();
      d.e2.ratio = n.at("E2_ratio").get<double>();
      d.identity_residual = n.at("identity_residual").get<double>();
      d.identity_bound = n.at("identity_bound").get<double>();
      r.diagnostics.push_back(d);
    }

    const auto& creep = c.at("creep");
    if (creep.is_object()) {
      if (creep.contains("error")) {
        r.creep_error = creep.at("error").get<std::string>();
      } else {
        CreepReport k;
        k.eta0 = creep.at("eta0").get<double>();
        k.samples = creep.at("samples").get<int>();
        k.cells = creep.at("cells").get<long>();
        k.ratio_min = creep.at("ratio_min").get<double>();
        k.ratio_max = creep.at("ratio_max").get<double>();
        k.bound_lo = creep.at("bound_lo").get<double>();
        k.bound_hi = creep.at("bound_hi").get<double>();
        k.max_reference_deviation = creep.at("max_reference_deviation").get<double>();
        k.out_of_bounds = creep.at("out_of_bounds").get<long>();
        r.creep = k;
      }
    }
    const auto& entries = c.at("conservation").at("entries");
    for (int k = 0; k < 3; ++k) {
      const auto& e = entries.at(k);
      r.conservation.total[k].change = e.at("change").get<double>();
      r.conservation.total[k].boundary_inflow = e.at("boundary_inflow").get<double>();
      r.conservation.total[k].imbalance = e.at("imbalance").get<double>();
      r.conservation.total[k].imbalance_per_tau = e.at("imbalance_per_tau").get<double>();
      r.conservation.worst_interval_per_tau[k] = e.at("worst_interval_per_tau").get<double>();
    }
    r.steps = c.at("bounds").at("steps").get<long>();
    r.flags = c.at("flags").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("case document: {}", e.what()));
  }
}

std::string emit_report(const std::vector<CaseResult>& results, const SweepAnalysis& analysis,
                        const SweepConfig& config) {
  ojson doc;
  ojson cases = ojson::array();
  for (const auto& r : results) cases.push_back(case_object(r, analysis));
  doc["cases"] = cases;
  doc["sweep"] = {{"epsilons", config.epsilons},
                  {"t_ref", config.t_ref},
                  {"fit_window", {config.fit_t_lo, config.fit_t_hi}},
                  {"eta0", config.eta0},
                  {"grid_policy", config.grid_policy}};
  doc["suite_version"] = kSuiteVersion;
  return doc.dump(2) + "\n";
}

std::string diagnostics_csv(const CaseResult& r) {
  std::string out = diagnostics_csv_header() + "\n";
  for (const auto& d : r.diagnostics) out += diagnostics_csv_row(d) + "\n";
  return out;
}

}  // namespace diffwave
