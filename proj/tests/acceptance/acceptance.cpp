// Acceptance suite: one PASS/FAIL line per criterion on the canonical case
// (theta_minus = 0.9, theta_plus = 1.1, kappa = 1, 8192 cells, t_end = 100).
// Exit status 0 only when every criterion passes.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "collocation_oracle.hpp"
#include "diffwave/harness.hpp"

using namespace diffwave;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  int id;
  bool pass;
  std::string text;
};

std::vector<Line> lines;

void report(int id, bool pass, const std::string& text) {
  lines.push_back({id, pass, text});
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << text << std::endl;
}

// Second differences of O(1) data stop improving near this level.
double rounding_floor(double scale, double h) {
  return 256.0 * std::numeric_limits<double>::epsilon() * scale / (h * h);
}

std::string order_text(double order) {
  return std::isfinite(order) ? fmt::format("{:.2f}", order) : "rounding";
}

ProfileParams canonical_params() {
  ProfileParams p;
  p.theta_minus = 0.9;
  p.theta_plus = 1.1;
  p.kappa = 1.0;
  return p;
}

SolverConfig rate_solver() {
  SolverConfig s;
  s.limiter = Limiter::None;
  s.bc = BoundaryKind::ProfileCharacteristic;
  return s;
}

// Criteria 1-3: profile and approximate system.
void profile_criteria(const std::shared_ptr<const SelfSimilarProfile>& profile, double solve_s) {
  const oracle::CollocationProfile o(0.9, 1.1, 1.0, 2000, 8.0);
  double err = 0.0;
  for (int k = 0; k <= 1600; ++k) {
    const double eta = -8.0 + 0.01 * k;
    err = std::max(err, std::abs(profile_eval(*profile, eta).T - o.T(eta)));
  }
  report(1, err <= 1e-8 && solve_s < 5.0,
         fmt::format("max |T - T_oracle| = {:.2e} (<= 1e-8), solve time {:.3f} s (< 5 s)", err, solve_s));

  const auto tail = verify_tail(*profile);
  report(2, tail.relative_error_plus() <= 0.1 && tail.relative_error_minus() <= 0.1,
         fmt::format("tail slopes {:.4f} / {:.4f} vs {:.4f} / {:.4f}, relative errors {:.3f} / {:.3f} (<= 0.1)",
                     tail.slope_plus, tail.slope_minus, tail.theory_plus, tail.theory_minus,
                     tail.relative_error_plus(), tail.relative_error_minus()));

  const WaveField wave(profile, 0.1);
  const double h = 0.02;
  const auto c = verify_approximate_system(wave, 8.0, 1.0, h);
  const auto f = verify_approximate_system(wave, 8.0, 1.0, h / 2.0);
  const double lc = verify_limit_identity(wave, 8.0, 1.0, h);
  const double lf = verify_limit_identity(wave, 8.0, 1.0, h / 2.0);
  const double floor = rounding_floor(1.1, h / 2.0);
  const std::array<double, 4> orders{observed_order(c.eq1, f.eq1, floor),
                                     observed_order(c.eq2, f.eq2, floor),
                                     observed_order(c.eq3, f.eq3, floor),
                                     observed_order(lc, lf, floor)};
  const bool ok = std::all_of(orders.begin(), orders.end(), [](double o) { return o >= 1.8; });
  report(3, ok,
         fmt::format("orders eq1 {} eq2 {} eq3 {} limit identity {} (>= 1.8)", order_text(orders[0]),
                     order_text(orders[1]), order_text(orders[2]), order_text(orders[3])));
}

// Criterion 4.
void equivalence_criterion(const std::shared_ptr<const SelfSimilarProfile>& profile) {
  double worst = 0.0;
  for (const SolverConfig& solver : {SolverConfig{}, rate_solver()}) {
    for (double eps : {0.1, 0.2, 0.5}) {
      const WaveField wave(profile, eps, 1.0);
      const auto r = verify_unscaled_equivalence(wave, GridSpec::for_run(eps, 1.0, 1024), 100, solver);
      worst = std::max(worst, r.discrepancy);
    }
  }
  report(4, worst <= 1e-10,
         fmt::format("max scaled/unscaled discrepancy over 100 steps, eps in {{0.1, 0.2, 0.5}}: {:.2e} (<= 1e-10)",
                     worst));
}

// Criterion 7; returns the trajectories for the conservation ledger.
std::vector<std::vector<FieldState>> systems_criterion(const WaveField& wave) {
  const double tau0 = 20.0;
  const int sizes[3] = {1024, 2048, 4096};
  std::array<SystemResiduals, 3> res;
  std::array<double, 3> h{};
  std::vector<std::vector<FieldState>> trajectories;
  const double eps = wave.epsilon();
  for (int k = 0; k < 3; ++k) {
    const GridSpec grid = GridSpec::for_run(eps, tau0 * eps * eps + 1.0, sizes[k]);
    h[k] = grid.h();
    const double d = 2.0 * grid.h();
    HydroSolver hs(rate_solver(), wave);
    auto traj = hs.run(init_state(wave, grid), tau0 + d, {0.0, tau0 - d, tau0, tau0 + d});
    res[k] = verify_perturbation_systems({traj[1], traj[2], traj[3]}, wave);
    trajectories.push_back(std::move(traj));
  }
  const std::array<double, 3> SystemResiduals::*arrays[3] = {
      &SystemResiduals::fin1, &SystemResiduals::fin2, &SystemResiduals::fin3};
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (int k = 0; k < 2; ++k) {
    const double floor = rounding_floor(1.1, h[k + 1]);
    for (int s = 0; s < 3; ++s) {
      for (int q = 0; q < 3; ++q) {
        const double o = observed_order((res[k].*arrays[s])[q], (res[k + 1].*arrays[s])[q], floor);
        if (o < worst) {
          worst = o;
          where = fmt::format("fin{} eq {} at n = {} -> {}", s + 1, q + 1, sizes[k], sizes[k + 1]);
        }
      }
    }
  }
  report(7, worst >= 1.0,
         fmt::format("min observed order of 9 fin residuals over n = 1024 -> 2048 -> 4096: {} ({}) (>= 1)",
                     order_text(worst), where));
  return trajectories;
}

// Criterion 5 on every stored snapshot of the sweep.
void identity_criterion(const std::vector<CaseResult>& results) {
  double id_ratio = 0.0, round_trip = 0.0, lambda_off = 0.0, lr_err = 0.0;
  int snapshots = 0;
  for (const auto& r : results) {
    const auto profile = std::make_shared<const SelfSimilarProfile>(solve_profile(r.spec.profile_params()));
    const WaveField wave(profile, r.spec.epsilon, r.spec.t_end);
    for (const auto& s : r.snapshots) {
      ++snapshots;
      const auto p = compute_perturbation_unchecked(s, wave);
      if (p.identity_bound > 0.0) id_ratio = std::max(id_ratio, p.identity_residual / p.identity_bound);
      const auto ch = char_decompose(p, wave);
      round_trip = std::max(round_trip, char_round_trip_error(p, ch));
      for (int i = 0; i < p.size(); ++i) {
        const double v = p.profile.v[i];
        const Mat3 L = left_matrix(v), R = right_matrix(v);
        const Mat3 Lam = multiply(multiply(L, convection_matrix(v)), R);
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += 4.0 * L[a][k] * R[k][b];
            lr_err = std::max(lr_err, std::abs(dot - (a == b ? 4.0 : 0.0)));
            if (a != b) lambda_off = std::max(lambda_off, std::abs(Lam[a][b]));
          }
        }
      }
    }
  }
  report(5, snapshots > 0 && id_ratio <= 1.0 && round_trip <= 1e-12 && lambda_off <= 1e-12 && lr_err <= 1e-14,
         fmt::format("{} snapshots: max identity residual / bound {:.3f} (<= 1), round trip {:.1e}, "
                     "Lambda off-diagonal {:.1e} (<= 1e-12), |l_i r_j - 4 delta_ij| {:.1e} (<= 1e-14)",
                     snapshots, id_ratio, round_trip, lambda_off, lr_err));
}

// Criterion 6 from the per-sample diagnostics.
void energy_criterion(const std::vector<CaseResult>& results) {
  int samples = 0, e1_bad = 0, wy_bad = 0, sandwich_checked = 0, sandwich_bad = 0;
  for (const auto& r : results) {
    for (const auto& d : r.diagnostics) {
      ++samples;
      const auto& e = d.e1;
      const double slack = 1e-12;
      if (!(e.c_lower * e.m_norm_sq <= e.E1 * (1.0 + slack) && e.E1 <= e.c_upper * e.m_norm_sq * (1.0 + slack))) {
        ++e1_bad;
      }
      if (!(e.Wy_norm_sq <= e.Wy_bound * (1.0 + slack))) ++wy_bad;
      sandwich_checked += d.e2.sandwich_checked;
      sandwich_bad += d.e2.sandwich_violations;
    }
  }
  report(6, samples > 0 && e1_bad == 0 && wy_bad == 0 && sandwich_bad == 0,
         fmt::format("{} samples: E1 outside [c, C] ||m||^2 in {}, ||W_y||^2 above (max v/kappa) K1 in {}, "
                     "F-sandwich violations {} of {} guarded cell terms",
                     samples, e1_bad, wy_bad, sandwich_bad, sandwich_checked));
}

// Criteria 8 and 9 from the sweep analysis.
void rate_criteria(const std::vector<CaseResult>& results, const SweepAnalysis& a) {
  bool alpha_ok = true;
  std::string alpha_text;
  for (const auto& r : results) {
    std::string part = fmt::format("eps {}:", r.spec.epsilon);
    for (const auto& t : alpha_targets()) {
      for (const auto& e : a.alpha) {
        if (e.case_id != r.spec.id() || e.key != t.key) continue;
        const bool ok = e.fit && e.fit->slope >= t.lo && e.fit->slope <= t.hi;
        alpha_ok &= ok;
        part += e.fit ? fmt::format(" {} {:.3f} {} [{}, {}]", t.key, e.fit->slope, ok ? "in" : "outside", t.lo, t.hi)
                      : fmt::format(" {} ({})", t.key, e.error);
      }
    }
    const double sup = weighted_sup(r);
    alpha_ok &= std::isfinite(sup);
    alpha_text += part + fmt::format(", sup (1+t)^0.9 ||.||^2 = {:.3e}; ", sup);
  }
  alpha_text.resize(alpha_text.size() - 2);
  report(8, alpha_ok, alpha_text);

  bool beta_ok = true;
  std::string beta_text;
  for (const auto& t : beta_targets()) {
    for (const auto& b : a.beta) {
      if (b.key != t.key) continue;
      const bool ok = b.fit && b.fit->slope >= t.lo;
      beta_ok &= ok;
      beta_text += b.fit ? fmt::format("beta {} {:.3f} (>= {}); ", t.key, b.fit->slope, t.lo)
                         : fmt::format("beta {} ({}); ", t.key, b.error);
    }
  }
  for (const char* key : {"Linf_pert", "Linf_u_err", "Linf_zx"}) {
    for (const auto& b : a.beta) {
      if (b.key != key) continue;
      beta_ok &= b.monotone;
      beta_text += fmt::format("{} {}; ", key, b.monotone ? "monotone" : "not monotone");
    }
  }
  beta_text.resize(beta_text.size() - 2);
  report(9, beta_ok, beta_text);
}

// Criterion 10.
void creep_criterion(const std::vector<CaseResult>& results, double sweep_s) {
  const CaseResult* smallest = nullptr;
  for (const auto& r : results) {
    if (r.spec.epsilon == 0.05) smallest = &r;
  }
  bool ok = smallest && smallest->creep && smallest->creep_error.empty() &&
            smallest->creep->within_bounds() && sweep_s <= 1800.0;
  std::string text;
  if (!smallest || !smallest->creep) {
    text = smallest && !smallest->creep_error.empty() ? smallest->creep_error : "no creep report for eps = 0.05";
  } else {
    const auto& c = *smallest->creep;
    text = fmt::format("eps 0.05, eta0 {}: {} samples, {} cells, u/theta_x in [{:.4f}, {:.4f}], "
                       "bounds [{:.4f}, {:.4f}], {} outside",
                       c.eta0, c.samples, c.cells, c.ratio_min, c.ratio_max, c.bound_lo, c.bound_hi,
                       c.out_of_bounds);
  }
  report(10, ok, text + fmt::format("; sweep wall time {:.0f} s (<= 1800 s)", sweep_s));
}

// Criterion 11 over every run of the suite.
void conservation_criterion(const std::vector<CaseResult>& results,
                            const std::vector<std::vector<FieldState>>& extra) {
  double worst = 0.0;
  bool positive = true;
  int runs = 0;
  for (const auto& r : results) {
    ++runs;
    worst = std::max(worst, r.conservation.max_imbalance_per_tau());
    positive &= std::find(r.flags.begin(), r.flags.end(), "positivity-maintained") != r.flags.end();
  }
  for (const auto& t : extra) {
    ++runs;
    worst = std::max(worst, conservation_report(t).max_imbalance_per_tau());
  }
  report(11, worst <= 1e-8 && positive,
         fmt::format("{} runs: max imbalance {:.2e} per unit tau (<= 1e-8), positivity {}", runs, worst,
                     positive ? "maintained" : "lost"));
}

}  // namespace

int main() {
  const auto t_start = Clock::now();
  std::vector<std::vector<FieldState>> extra_runs;
  try {
    const auto t0 = Clock::now();
    auto profile = std::make_shared<const SelfSimilarProfile>(solve_profile(canonical_params()));
    const double solve_s = seconds_since(t0);
    profile_criteria(profile, solve_s);
    equivalence_criterion(profile);
    extra_runs = systems_criterion(WaveField(profile, 0.1));

    SweepConfig sweep;
    sweep.solver = rate_solver();
    RunOptions options;
    options.log = [](const std::string& s) { std::cerr << s << '\n'; };
    const auto ts = Clock::now();
    const auto results = run_cases(sweep.cases(), sweep_threads(), options);
    const double sweep_s = seconds_since(ts);
    const auto analysis = analyze_sweep(results, sweep);

    identity_criterion(results);
    energy_criterion(results);
    rate_criteria(results, analysis);
    creep_criterion(results, sweep_s);
    conservation_criterion(results, extra_runs);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance suite aborted: " << e.what() << std::endl;
    return 1;
  }

  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  int failed = 0;
  std::cout << "\nsummary (" << fmt::format("{:.0f}", seconds_since(t_start)) << " s):\n";
  for (const auto& l : lines) {
    std::cout << "  " << (l.pass ? "PASS" : "FAIL") << " criterion " << l.id << '\n';
    failed += l.pass ? 0 : 1;
  }
  std::cout << fmt::format("{} of {} criteria pass", lines.size() - failed, lines.size()) << std::endl;
  return failed == 0 ? 0 : 1;
}
