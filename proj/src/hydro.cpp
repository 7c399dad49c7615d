#include "diffwave/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "diffwave/error.hpp"
#include "fv_scheme.hpp"

namespace diffwave {
namespace {

constexpr int kMinCells = 128;

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + c; }
};

// Ghost cell centre positions in the coordinate of `grid`.
std::array<double, 4> ghost_positions(const GridSpec& grid) {
  const double h = grid.h();
  return {grid.y_min - 1.5 * h, grid.y_min - 0.5 * h, grid.y_max + 0.5 * h,
          grid.y_max + 1.5 * h};
}

// Profile-following ghost states. `scale` maps the grid coordinate to x,
// `time_scale` maps solver time to t and `w_scale` multiplies u. With
// `characteristic` set, the outgoing acoustic component of the boundary cell's
// deviation from the profile is carried into the ghosts (incoming and
// zero-speed components stay on the profile).
struct ProfileGhosts {
  const WaveField* wave;
  std::array<double, 4> pos;
  double scale;
  double time_scale;
  double w_scale;
  bool characteristic = false;
  double h = 0.0;

  void operator()(double time, detail::Ghosts& g, const double* v, const double* w,
                  const double* theta, int n) const {
    const double t = time * time_scale;
    for (int k = 0; k < 4; ++k) {
      const WavePoint p = wave->evaluate(pos[k] * scale, t);
      g.v[k] = p.T.T;
      g.w[k] = w_scale * p.u;
      g.theta[k] = p.theta_tilde;
    }
    if (!characteristic) return;
    // Decomposition in the scaled variables (v, U = to_U w, theta), linearly
    // extrapolated from the two cells next to each end.
    const double to_U = wave->epsilon() / w_scale;
    for (int side = 0; side < 2; ++side) {
      const double sign = side == 0 ? 1.0 : -1.0;
      double amp[2];
      double P = 0.0, c = 0.0;
      for (int j = 0; j < 2; ++j) {
        const int i = side == 0 ? j : n - 1 - j;
        const double y = side == 0 ? pos[1] + (j + 1) * h : pos[2] - (j + 1) * h;
        const WavePoint p = wave->evaluate(y * scale, t);
        const double dv = v[i] - p.T.T;
        const double dU = to_U * (w[i] - w_scale * p.u);
        const double dth = theta[i] - p.theta_tilde;
        P = p.theta_tilde / p.T.T;
        c = std::sqrt(2.0 * p.theta_tilde) / p.T.T;
        // d = a_- (1, c, -P) + a_0 (1, 0, P) + a_+ (1, -c, -P); keep the outgoing a.
        amp[j] = 0.5 * (0.5 * (dv - dth / P) + sign * dU / c);
      }
      for (int k = 0; k < 2; ++k) {
        // Inner ghost one cell beyond the boundary cell, outer ghost two.
        const int slot = side == 0 ? 1 - k : 2 + k;
        const double a = (k + 2) * amp[0] - (k + 1) * amp[1];
        g.v[slot] += a;
        g.w[slot] += sign * c * a / to_U;
        g.theta[slot] -= P * a;
      }
    }
  }
};

struct ConstantGhosts {
  std::array<double, 3> left;
  std::array<double, 3> right;

  void operator()(double, detail::Ghosts& g, const double*, const double*, const double*,
                  int) const {
    for (int k = 0; k < 4; ++k) {
      const auto& s = k < 2 ? left : right;
      g.v[k] = s[0];
      g.w[k] = s[1];
      g.theta[k] = s[2];
    }
  }
};

void check_positive(const FieldState& s) {
  for (int i = 0; i < s.size(); ++i) {
    if (!(s.v[i] > 0.0) || !(s.theta[i] > 0.0) || !std::isfinite(s.U[i])) {
      throw PositivityLoss(fmt::format("v = {}, theta = {} in cell {} at tau = {}", s.v[i],
                                       s.theta[i], i, s.tau),
                           s.tau);
    }
  }
}

}  // namespace

void GridSpec::validate() const {
  if (n_cells < kMinCells) {
    throw InvalidArgument(fmt::format("n_cells = {} is below {}", n_cells, kMinCells));
  }
  if (!(y_max > 0.0) || !std::isfinite(y_max) || y_min != -y_max) {
    throw InvalidArgument("grid must be symmetric with y_max > 0");
  }
}

GridSpec GridSpec::symmetric(double y_max, int n_cells) {
  GridSpec g{-y_max, y_max, n_cells};
  g.validate();
  return g;
}

GridSpec GridSpec::for_run(double epsilon, double t_end, int n_cells) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  return symmetric(6.0 * std::sqrt(1.0 + t_end) / epsilon + 10.0, n_cells);
}

std::string to_string(Conduction c) {
  return c == Conduction::ExplicitSubstep ? "explicit-substep" : "implicit-trapezoidal";
}

std::string to_string(BoundaryKind b) {
  switch (b) {
    case BoundaryKind::ProfileDirichlet:
      return "profile-dirichlet";
    case BoundaryKind::ProfileCharacteristic:
      return "profile-characteristic";
    case BoundaryKind::ConstantFarfield:
      break;
  }
  return "constant-farfield";
}

std::string to_string(Limiter l) { return l == Limiter::Minmod ? "minmod" : "none"; }

Conduction conduction_from_string(const std::string& s) {
  if (s == "explicit-substep") return Conduction::ExplicitSubstep;
  if (s == "implicit-trapezoidal") return Conduction::ImplicitTrapezoidal;
  throw InvalidArgument(fmt::format("unknown conduction scheme '{}'", s));
}

BoundaryKind boundary_from_string(const std::string& s) {
  if (s == "profile-dirichlet") return BoundaryKind::ProfileDirichlet;
  if (s == "profile-characteristic") return BoundaryKind::ProfileCharacteristic;
  if (s == "constant-farfield") return BoundaryKind::ConstantFarfield;
  throw InvalidArgument(fmt::format("unknown boundary kind '{}'", s));
}

Limiter limiter_from_string(const std::string& s) {
  if (s == "minmod") return Limiter::Minmod;
  if (s == "none") return Limiter::None;
  throw InvalidArgument(fmt::format("unknown limiter '{}'", s));
}

void SolverConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 0.9)) {
    throw InvalidArgument(fmt::format("cfl = {} outside (0, 0.9]", cfl));
  }
}

FieldState init_state(const WaveField& wave, const GridSpec& grid) {
  grid.validate();
  const double eps = wave.epsilon();
  if (!(eps > 0.0)) throw InvalidArgument("the scaled solver needs epsilon > 0");
  const double delta = wave.profile().delta();
  const double edge_slope = std::abs(profile_eval(wave.profile(), eps * grid.y_max).Tp);
  if (delta > 0.0 && edge_slope >= 1e-10 * delta) {
    throw GridTooNarrow(fmt::format("|T'| = {:.3e} at the domain edge x = {}; widen the grid",
                                    edge_slope, eps * grid.y_max));
  }

  FieldState s;
  s.grid = grid;
  s.epsilon = eps;
  const int n = grid.n_cells;
  s.v.resize(n);
  s.U.resize(n);
  s.theta.resize(n);
  for (int i = 0; i < n; ++i) {
    const WavePoint w = wave.evaluate(eps * grid.center(i), 0.0);
    s.v[i] = w.T.T;
    s.U[i] = eps * w.u;
    s.theta[i] = w.theta_tilde;
  }
  s.far_left = {wave.theta_minus(), 0.0, wave.theta_minus()};
  s.far_right = {wave.theta_plus(), 0.0, wave.theta_plus()};
  return s;
}

FieldState uniform_state(const GridSpec& grid, double epsilon, double v, double U, double theta) {
  grid.validate();
  if (!(v > 0.0) || !(theta > 0.0)) throw InvalidArgument("uniform state must be positive");
  FieldState s;
  s.grid = grid;
  s.epsilon = epsilon;
  s.v.assign(grid.n_cells, v);
  s.U.assign(grid.n_cells, U);
  s.theta.assign(grid.n_cells, theta);
  s.far_left = {v, U, theta};
  s.far_right = {v, U, theta};
  return s;
}

double stable_dtau(const FieldState& state, const SolverConfig& config, double kappa) {
  const double h = state.grid.h();
  double speed = 0.0;
  double v_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < state.size(); ++i) {
    speed = std::max(speed, std::sqrt(2.0 * state.theta[i]) / state.v[i]);
    v_min = std::min(v_min, state.v[i]);
  }
  double dt = config.cfl * h / speed;
  if (config.conduction == Conduction::ExplicitSubstep && kappa > 0.0) {
    dt = std::min(dt, config.cfl * h * h * v_min / (2.0 * kappa));
  }
  return dt;
}

HydroSolver::HydroSolver(SolverConfig config, const WaveField& wave)
    : config_(config), wave_(wave) {
  config_.validate();
}

HydroSolver::~HydroSolver() = default;
HydroSolver::HydroSolver(HydroSolver&&) noexcept = default;

void HydroSolver::advance(FieldState& state, double dtau) {
  if (!(dtau > 0.0)) throw InvalidArgument("dtau must be positive");
  const GridSpec& g = state.grid;
  if (!scheme_ || scheme_grid_.n_cells != g.n_cells || scheme_grid_.y_max != g.y_max) {
    scheme_ = std::make_unique<detail::Scheme>(detail::Physics::scaled(), config_, g.h(), kappa(),
                                               g.n_cells);
    scheme_grid_ = g;
  }

  detail::FluxLedger ledger{state.flux_left, state.flux_right};
  if (config_.bc != BoundaryKind::ConstantFarfield) {
    const double e = state.epsilon;
    ProfileGhosts ghosts{&wave_, ghost_positions(g), e, e * e, e,
                         config_.bc == BoundaryKind::ProfileCharacteristic, g.h()};
    scheme_->step(state.v.data(), state.U.data(), state.theta.data(), state.tau, dtau, ghosts,
                ledger);
  } else {
    ConstantGhosts ghosts{state.far_left, state.far_right};
    scheme_->step(state.v.data(), state.U.data(), state.theta.data(), state.tau, dtau, ghosts,
                ledger);
  }
  state.flux_left = ledger.left;
  state.flux_right = ledger.right;
  state.tau += dtau;
  check_positive(state);
}

std::vector<FieldState> HydroSolver::run(FieldState state, double tau_end,
                                         const std::vector<double>& sample_taus) {
  if (!(tau_end >= state.tau)) throw InvalidArgument("tau_end precedes the initial state");
  std::vector<double> samples;
  for (double s : sample_taus) {
    if (s >= state.tau && s <= tau_end) samples.push_back(s);
  }
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
  if (samples.empty()) samples.push_back(tau_end);

  std::vector<FieldState> out;
  out.reserve(samples.size());
  for (double target : samples) {
    while (state.tau < target) {
      double dt = stable_dtau(state, config_, kappa());
      const double remaining = target - state.tau;
      // Avoid a sliver step right before the sample.
      if (dt >= remaining || remaining - dt < 1e-3 * dt) dt = remaining;
      const bool last = dt == remaining;
      advance(state, dt);
      if (last) state.tau = target;
      if (on_step) on_step(state);
    }
    out.push_back(state);
  }
  return out;
}

FieldState step(const FieldState& state, double dtau, const SolverConfig& config,
                const WaveField& wave) {
  HydroSolver solver(config, wave);
  FieldState next = state;
  solver.advance(next, dtau);
  return next;
}

std::vector<FieldState> run(const FieldState& state, double tau_end, const SolverConfig& config,
                            const WaveField& wave, const std::vector<double>& sample_taus) {
  HydroSolver solver(config, wave);
  return solver.run(state, tau_end, sample_taus);
}

std::array<double, 3> conserved_totals(const FieldState& state) {
  CompensatedSum v, U, E;
  for (int i = 0; i < state.size(); ++i) {
    v.add(state.v[i]);
    U.add(state.U[i]);
    E.add(state.theta[i] + 0.5 * state.U[i] * state.U[i]);
  }
  const double h = state.grid.h();
  return {v.value() * h, U.value() * h, E.value() * h};
}

double ConservationReport::max_imbalance_per_tau() const {
  double m = 0.0;
  for (int k = 0; k < 3; ++k) m = std::max({m, total[k].imbalance_per_tau, worst_interval_per_tau[k]});
  return m;
}

ConservationReport conservation_report(const std::vector<FieldState>& trajectory) {
  ConservationReport report;
  if (trajectory.size() < 2) return report;
  auto entry = [](const FieldState& a, const FieldState& b, int k) {
    const auto ta = conserved_totals(a);
    const auto tb = conserved_totals(b);
    ConservationEntry e;
    e.change = tb[k] - ta[k];
    e.boundary_inflow = (b.flux_left[k] - a.flux_left[k]) - (b.flux_right[k] - a.flux_right[k]);
    e.imbalance = std::abs(e.change - e.boundary_inflow);
    const double span = b.tau - a.tau;
    const double scale = std::max(1.0, std::abs(ta[k]));
    e.imbalance_per_tau = span > 0.0 ? e.imbalance / (span * scale) : 0.0;
    return e;
  };
  for (int k = 0; k < 3; ++k) {
    report.total[k] = entry(trajectory.front(), trajectory.back(), k);
    for (std::size_t j = 1; j < trajectory.size(); ++j) {
      report.worst_interval_per_tau[k] = std::max(
          report.worst_interval_per_tau[k], entry(trajectory[j - 1], trajectory[j], k).imbalance_per_tau);
    }
  }
  return report;
}

EquivalenceResult verify_unscaled_equivalence(const WaveField& wave, const GridSpec& grid,
                                              int steps, const SolverConfig& config) {
  if (steps < 1) throw InvalidArgument("steps must be positive");
  config.validate();
  FieldState scaled = init_state(wave, grid);
  const double eps = scaled.epsilon;
  const double kappa = wave.kappa();
  const double dtau = stable_dtau(scaled, config, kappa);

  UnscaledState plain;
  plain.grid = {eps * grid.y_min, eps * grid.y_max, grid.n_cells};
  plain.v = scaled.v;
  plain.theta = scaled.theta;
  plain.u.resize(scaled.U.size());
  for (std::size_t i = 0; i < plain.u.size(); ++i) plain.u[i] = scaled.U[i] / eps;

  detail::Scheme a(detail::Physics::scaled(), config, grid.h(), kappa, grid.n_cells);
  detail::Scheme b(detail::Physics::unscaled(eps), config, plain.grid.h(), kappa, grid.n_cells);
  detail::FluxLedger la, lb;
  const double dt = eps * eps * dtau;

  for (int s = 0; s < steps; ++s) {
    if (config.bc != BoundaryKind::ConstantFarfield) {
      const bool ch = config.bc == BoundaryKind::ProfileCharacteristic;
      a.step(scaled.v.data(), scaled.U.data(), scaled.theta.data(), scaled.tau, dtau,
             ProfileGhosts{&wave, ghost_positions(grid), eps, eps * eps, eps, ch, grid.h()}, la);
      b.step(plain.v.data(), plain.u.data(), plain.theta.data(), plain.t, dt,
             ProfileGhosts{&wave, ghost_positions(plain.grid), 1.0, 1.0, 1.0, ch,
                           plain.grid.h()},
             lb);
    } else {
      a.step(scaled.v.data(), scaled.U.data(), scaled.theta.data(), scaled.tau, dtau,
             ConstantGhosts{scaled.far_left, scaled.far_right}, la);
      const std::array<double, 3> fl{scaled.far_left[0], scaled.far_left[1] / eps,
                                     scaled.far_left[2]};
      const std::array<double, 3> fr{scaled.far_right[0], scaled.far_right[1] / eps,
                                     scaled.far_right[2]};
      b.step(plain.v.data(), plain.u.data(), plain.theta.data(), plain.t, dt,
             ConstantGhosts{fl, fr}, lb);
    }
    scaled.tau += dtau;
    plain.t += dt;
  }

  EquivalenceResult r;
  r.steps = steps;
  r.dtau = dtau;
  for (int i = 0; i < grid.n_cells; ++i) {
    r.discrepancy = std::max({r.discrepancy, std::abs(scaled.v[i] - plain.v[i]),
                              std::abs(scaled.U[i] - eps * plain.u[i]),
                              std::abs(scaled.theta[i] - plain.theta[i])});
  }
  if (!std::isfinite(r.discrepancy)) r.discrepancy = std::numeric_limits<double>::infinity();
  return r;
}

EquivalenceResult verify_unscaled_equivalence(const WaveField& wave, const GridSpec& grid,
                                              double t_end, const SolverConfig& config) {
  if (!(t_end > 0.0)) throw InvalidArgument("t_end must be positive");
  const FieldState probe = init_state(wave, grid);
  const double dtau = stable_dtau(probe, config, wave.kappa());
  const double eps = probe.epsilon;
  const int steps = std::max(1, static_cast<int>(std::ceil(t_end / (eps * eps * dtau))));
  return verify_unscaled_equivalence(wave, grid, steps, config);
}

std::string snapshot_file_name(double tau) { return fmt::format("state_tau={:.10g}.csv", tau); }

void write_snapshot_csv(const FieldState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path));
  out << "y,v,U,theta\n";
  for (int i = 0; i < state.size(); ++i) {
    out << fmt::format("{:.16e},{:.16e},{:.16e},{:.16e}\n", state.grid.center(i), state.v[i],
                       state.U[i], state.theta[i]);
  }
  if (!out) throw Error(fmt::format("write to {} failed", path));
}

}  // namespace diffwave
