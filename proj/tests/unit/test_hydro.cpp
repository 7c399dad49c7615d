#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>

#include "diffwave/error.hpp"
#include "diffwave/hydro.hpp"

using namespace diffwave;

namespace {

std::shared_ptr<const SelfSimilarProfile> make_profile(double thm, double thp) {
  ProfileParams p;
  p.theta_minus = thm;
  p.theta_plus = thp;
  return std::make_shared<const SelfSimilarProfile>(solve_profile(p));
}

const WaveField& canonical_wave(double eps) {
  static const auto profile = make_profile(0.9, 1.1);
  static std::map<double, std::unique_ptr<WaveField>> cache;
  auto& slot = cache[eps];
  if (!slot) slot = std::make_unique<WaveField>(profile, eps);
  return *slot;
}

const WaveField& flat_wave() {
  static const WaveField w(make_profile(1.0, 1.0), 0.1);
  return w;
}

SolverConfig frozen() {
  SolverConfig c;
  c.bc = BoundaryKind::ConstantFarfield;
  return c;
}

// Smooth acoustic pulse on the unit state, zero at the domain ends.
FieldState pulse_state(int n, double y_max) {
  FieldState s = uniform_state(GridSpec::symmetric(y_max, n), 0.1, 1.0, 0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double y = s.grid.center(i);
    const double g = 0.01 * std::exp(-y * y / 4.0);
    s.v[i] += g;
    s.U[i] -= g;
    s.theta[i] += 0.5 * g;
  }
  return s;
}

// Pure acoustic pulse on the unit state: a (1, -c, -1) + b (1, c, -1) with c = sqrt 2.
FieldState acoustic_pulse(int n, double y_max) {
  FieldState s = uniform_state(GridSpec::symmetric(y_max, n), 0.1, 1.0, 0.0, 1.0);
  const double c = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    const double y = s.grid.center(i);
    const double a = 0.01 * std::exp(-(y - 5.0) * (y - 5.0) / 4.0);
    const double b = 0.01 * std::exp(-(y + 5.0) * (y + 5.0) / 4.0);
    s.v[i] += a + b;
    s.U[i] += c * (b - a);
    s.theta[i] -= a + b;
  }
  return s;
}

double l2_deviation(const FieldState& s) {
  double acc = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    acc += (s.v[i] - 1.0) * (s.v[i] - 1.0) + s.U[i] * s.U[i] + (s.theta[i] - 1.0) * (s.theta[i] - 1.0);
  }
  return std::sqrt(acc * s.grid.h());
}

double max_diff(const FieldState& a, const FieldState& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    m = std::max({m, std::abs(a.v[i] - b.v[i]), std::abs(a.U[i] - b.U[i]),
                  std::abs(a.theta[i] - b.theta[i])});
  }
  return m;
}

}  // namespace

TEST_CASE("grid spec") {
  const auto g = GridSpec::symmetric(6.4, 128);
  CHECK(g.h() == doctest::Approx(0.1));
  CHECK(g.center(0) == doctest::Approx(-6.35));
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_AS(GridSpec::symmetric(6.4, 64).validate(), InvalidArgument);
  GridSpec bad{-1.0, 2.0, 256};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK(GridSpec::for_run(0.1, 100.0, 8192).y_max == doctest::Approx(6.0 * std::sqrt(101.0) / 0.1 + 10.0));
}

TEST_CASE("enum names round trip") {
  for (auto c : {Conduction::ExplicitSubstep, Conduction::ImplicitTrapezoidal}) {
    CHECK(conduction_from_string(to_string(c)) == c);
  }
  for (auto b : {BoundaryKind::ProfileDirichlet, BoundaryKind::ConstantFarfield,
                 BoundaryKind::ProfileCharacteristic}) {
    CHECK(boundary_from_string(to_string(b)) == b);
  }
  for (auto l : {Limiter::None, Limiter::Minmod}) CHECK(limiter_from_string(to_string(l)) == l);
  CHECK(to_string(Conduction::ImplicitTrapezoidal) == "implicit-trapezoidal");
  CHECK_THROWS_AS(limiter_from_string("superbee"), InvalidArgument);
}

TEST_CASE("solver config range") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.cfl = 0.95;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.cfl = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("initial state") {
  const auto flat = init_state(flat_wave(), GridSpec::symmetric(50.0, 256));
  for (int i = 0; i < flat.size(); ++i) {
    CHECK(flat.v[i] == 1.0);
    CHECK(flat.U[i] == 0.0);
    CHECK(flat.theta[i] == 1.0);
  }
  const WaveField& w = canonical_wave(0.1);
  const auto grid = GridSpec::for_run(0.1, 1.0, 1024);
  const auto s = init_state(w, grid);
  CHECK(s.tau == 0.0);
  for (int i = 0; i < s.size(); ++i) {
    const auto c = eval_tilde(w, 0.1 * grid.center(i), 0.0);
    CHECK(s.v[i] == c.v);
    CHECK(s.U[i] == 0.1 * c.u);
    CHECK(s.theta[i] == c.theta);
    CHECK(s.theta[i] / s.v[i] <= 1.0);
  }
  CHECK_THROWS_AS(init_state(w, GridSpec::symmetric(20.0, 256)), GridTooNarrow);
}

TEST_CASE("stable time step") {
  const auto grid = GridSpec::symmetric(6.4, 128);
  SolverConfig c;
  const auto s = uniform_state(grid, 0.1, 1.0, 0.0, 1.0);
  CHECK(stable_dtau(s, c, 1.0) == doctest::Approx(0.5 * 0.1 / std::sqrt(2.0)));
  const auto hot = uniform_state(grid, 0.1, 1.0, 0.0, 2.0);
  CHECK(stable_dtau(s, c, 1.0) / stable_dtau(hot, c, 1.0) == doctest::Approx(std::sqrt(2.0)));
  c.conduction = Conduction::ExplicitSubstep;
  CHECK(stable_dtau(s, c, 10.0) == doctest::Approx(0.5 * 0.01 * 1.0 / 20.0));

  // Near the canonical profile the fastest cells sit at the theta_minus end.
  const WaveField& w = canonical_wave(0.1);
  const auto p = init_state(w, GridSpec::for_run(0.1, 1.0, 1024));
  const auto far = uniform_state(p.grid, 0.1, 0.9, 0.0, 0.9);
  const SolverConfig d;
  CHECK(std::abs(stable_dtau(p, d, 1.0) / stable_dtau(far, d, 1.0) - 1.0) < 0.05);
}

TEST_CASE("constant states are preserved") {
  for (auto bc : {BoundaryKind::ConstantFarfield, BoundaryKind::ProfileDirichlet,
                  BoundaryKind::ProfileCharacteristic}) {
    for (auto lim : {Limiter::Minmod, Limiter::None}) {
      for (auto cond : {Conduction::ImplicitTrapezoidal, Conduction::ExplicitSubstep}) {
        SolverConfig c;
        c.bc = bc;
        c.limiter = lim;
        c.conduction = cond;
        FieldState s = uniform_state(GridSpec::symmetric(50.0, 256), 0.1, 1.0, 0.0, 1.0);
        const FieldState s0 = s;
        HydroSolver solver(c, flat_wave());
        for (int k = 0; k < 20; ++k) solver.advance(s, stable_dtau(s, c, 1.0));
        CHECK(max_diff(s, s0) <= 1e-14);
        for (int q = 0; q < 3; ++q) {
          CHECK(std::abs(s.flux_left[q] - s.flux_right[q]) <= 1e-13);
        }
      }
    }
  }
}

TEST_CASE("one step against two half steps from profile data") {
  const WaveField& w = canonical_wave(0.1);
  const auto grid = GridSpec::for_run(0.1, 1.0, 1024);
  const auto s0 = init_state(w, grid);
  const SolverConfig c;
  const double dt = stable_dtau(s0, c, 1.0);
  const auto one = step(s0, dt, c, w);
  const auto two = step(step(s0, 0.5 * dt, c, w), 0.5 * dt, c, w);
  // Residual forcing per step in scaled units: dt eps^3 |R_x| ~ dt eps^3 delta.
  double growth = 0.0;
  for (int i = 0; i < one.size(); ++i) {
    const auto c1 = eval_tilde(w, 0.1 * grid.center(i), 0.01 * dt);
    growth = std::max({growth, std::abs(one.v[i] - c1.v), std::abs(one.U[i] - 0.1 * c1.u),
                       std::abs(one.theta[i] - c1.theta)});
  }
  double r_max = 0.0;
  for (int i = 1; i + 1 < grid.n_cells; ++i) {
    const double y = grid.center(i), hh = grid.h();
    const auto rp = residuals(w, 0.1 * (y + hh), 0.0), rm = residuals(w, 0.1 * (y - hh), 0.0);
    r_max = std::max({r_max, std::abs(rp.R1 - rm.R1) / (2.0 * hh), std::abs(rp.R2 - rm.R2) / (2.0 * hh)});
  }
  CHECK(growth <= 10.0 * dt * r_max + 1e-6);
  CHECK(max_diff(one, two) <= growth);
}

TEST_CASE("frozen-boundary pulse conserves totals to rounding") {
  FieldState s = pulse_state(512, 64.0);
  const SolverConfig c = frozen();
  HydroSolver solver(c, flat_wave());
  std::vector<FieldState> traj{s};
  for (int k = 0; k < 50; ++k) {
    const auto before = conserved_totals(s);
    const auto fl = s.flux_left, fr = s.flux_right;
    solver.advance(s, stable_dtau(s, c, 1.0));
    const auto after = conserved_totals(s);
    for (int q = 0; q < 3; ++q) {
      const double inflow = (s.flux_left[q] - fl[q]) - (s.flux_right[q] - fr[q]);
      CHECK(std::abs(after[q] - before[q] - inflow) <= 1e-12);
    }
    traj.push_back(s);
  }
  const auto rep = conservation_report(traj);
  CHECK(rep.max_imbalance_per_tau() <= 1e-12);
}

TEST_CASE("profile-dirichlet run conserves up to boundary fluxes") {
  const WaveField& w = canonical_wave(0.1);
  const auto grid = GridSpec::for_run(0.1, 1.0, 1024);
  const SolverConfig c;
  const auto traj = run(init_state(w, grid), 100.0, c, w, {0.0, 25.0, 50.0, 75.0, 100.0});
  REQUIRE(traj.size() == 5);
  CHECK(conservation_report(traj).max_imbalance_per_tau() <= 1e-8);
  for (const auto& s : traj) {
    for (int i = 0; i < s.size(); ++i) {
      CHECK(s.v[i] > 0.0);
      CHECK(s.theta[i] > 0.0);
    }
  }
}

TEST_CASE("constant run has zero fluxes") {
  const FieldState s = uniform_state(GridSpec::symmetric(50.0, 256), 0.1, 1.0, 0.0, 1.0);
  const auto traj = run(s, 10.0, frozen(), flat_wave(), {0.0, 5.0, 10.0});
  const auto rep = conservation_report(traj);
  for (int q = 0; q < 3; ++q) {
    CHECK(std::abs(rep.total[q].change) <= 1e-12);
    CHECK(std::abs(rep.total[q].boundary_inflow) <= 1e-12);
  }
}

TEST_CASE("run sampling") {
  const FieldState s = pulse_state(256, 32.0);
  const auto same = run(s, 0.0, frozen(), flat_wave(), {});
  REQUIRE(same.size() == 1);
  CHECK(max_diff(same[0], s) == 0.0);

  const auto traj = run(s, 3.0, frozen(), flat_wave(), {0.5, 1.0, 3.0});
  REQUIRE(traj.size() == 3);
  CHECK(traj[0].tau == 0.5);
  CHECK(traj[1].tau == 1.0);
  CHECK(traj[2].tau == 3.0);

  const auto again = run(s, 3.0, frozen(), flat_wave(), {0.5, 1.0, 3.0});
  CHECK(max_diff(traj[2], again[2]) == 0.0);
}

TEST_CASE("pulse energy does not grow") {
  const FieldState s = pulse_state(1024, 64.0);
  const double e0 = l2_deviation(s);
  const auto traj = run(s, 100.0, frozen(), flat_wave(), {10.0, 25.0, 50.0, 100.0});
  for (const auto& x : traj) CHECK(l2_deviation(x) <= 1.01 * e0);
}

TEST_CASE("positivity loss is reported with its time") {
  FieldState s = uniform_state(GridSpec::symmetric(10.0, 128), 0.1, 1.0, 0.0, 1.0);
  for (int i = 0; i < s.size(); ++i) s.U[i] = s.grid.center(i) > 0.0 ? 20.0 : -20.0;
  SolverConfig c = frozen();
  c.cfl = 0.9;
  bool thrown = false;
  try {
    run(s, 5.0, c, flat_wave(), {});
  } catch (const PositivityLoss& e) {
    thrown = true;
    CHECK(e.tau() > 0.0);
    CHECK(e.tau() <= 5.0);
  }
  CHECK(thrown);
}

TEST_CASE("scaled and unscaled forms agree step by step") {
  const auto flat = std::make_shared<const SelfSimilarProfile>(solve_profile([] {
    ProfileParams p;
    p.theta_minus = p.theta_plus = 1.0;
    return p;
  }()));
  const WaveField w_flat(flat, 0.5);
  const auto one = verify_unscaled_equivalence(w_flat, GridSpec::symmetric(30.0, 256), 1, SolverConfig{});
  CHECK(one.discrepancy == 0.0);

  for (auto bc : {BoundaryKind::ProfileDirichlet, BoundaryKind::ProfileCharacteristic}) {
    SolverConfig c;
    c.bc = bc;
    for (double eps : {0.1, 0.2, 0.5}) {
      const WaveField& w = canonical_wave(eps);
      const auto r = verify_unscaled_equivalence(w, GridSpec::for_run(eps, 1.0, 512), 100, c);
      CHECK(r.steps == 100);
      CHECK(r.discrepancy <= 1e-10);
    }
  }
}

TEST_CASE("grid convergence at t = 1") {
  const WaveField& w = canonical_wave(0.1);
  auto solve = [&](int n, SolverConfig c) {
    return run(init_state(w, GridSpec::for_run(0.1, 1.0, n)), 100.0, c, w, {}).back();
  };
  // L2 difference between n and 2n after averaging the fine cells in pairs.
  auto diff = [](const FieldState& coarse, const FieldState& fine) {
    double acc = 0.0;
    for (int i = 0; i < coarse.size(); ++i) {
      const auto avg = [&](const std::vector<double>& f) { return 0.5 * (f[2 * i] + f[2 * i + 1]); };
      acc += std::pow(coarse.v[i] - avg(fine.v), 2) + std::pow(coarse.U[i] - avg(fine.U), 2) +
             std::pow(coarse.theta[i] - avg(fine.theta), 2);
    }
    return std::sqrt(acc * coarse.grid.h());
  };
  auto order = [&](int n, SolverConfig c) {
    const auto a = solve(n, c), b = solve(2 * n, c), f = solve(4 * n, c);
    return std::log2(diff(a, b) / diff(b, f));
  };

  SolverConfig limited;
  CHECK(order(1024, limited) >= 1.0);

  // Without the limiter the acoustic transient must leave through the ends:
  // the Dirichlet ends reflect it into a grid-scale layer that does not refine.
  SolverConfig smooth;
  smooth.limiter = Limiter::None;
  smooth.bc = BoundaryKind::ProfileCharacteristic;
  CHECK(order(2048, smooth) >= 1.8);
}

TEST_CASE("characteristic ends let an acoustic pulse leave") {
  const FieldState s = acoustic_pulse(1024, 64.0);
  const double e0 = l2_deviation(s);
  SolverConfig c;
  c.limiter = Limiter::None;
  c.bc = BoundaryKind::ProfileCharacteristic;
  const auto open = run(s, 100.0, c, flat_wave(), {}).back();
  c.bc = BoundaryKind::ProfileDirichlet;
  const auto closed = run(s, 100.0, c, flat_wave(), {}).back();
  CHECK(l2_deviation(open) <= 0.01 * e0);
  CHECK(l2_deviation(closed) >= 5.0 * l2_deviation(open));
}

TEST_CASE("snapshot CSV") {
  const FieldState s = pulse_state(128, 8.0);
  const auto path = std::filesystem::temp_directory_path() / "diffwave_snapshot_test.csv";
  write_snapshot_csv(s, path.string());
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "y,v,U,theta");
  double y = 0.0, v = 0.0;
  REQUIRE(std::sscanf(row.c_str(), "%lf,%lf", &y, &v) == 2);
  CHECK(y == s.grid.center(0));
  CHECK(v == s.v[0]);
  int rows = 1;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 128);
  std::filesystem::remove(path);
  CHECK(snapshot_file_name(2500.0) == "state_tau=2500.csv");
}
