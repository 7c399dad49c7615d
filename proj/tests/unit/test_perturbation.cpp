#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "diffwave/error.hpp"
#include "diffwave/perturbation.hpp"

using namespace diffwave;

namespace {

std::shared_ptr<const SelfSimilarProfile> make_profile(double thm, double thp) {
  ProfileParams p;
  p.theta_minus = thm;
  p.theta_plus = thp;
  return std::make_shared<const SelfSimilarProfile>(solve_profile(p));
}

const WaveField& canonical_wave() {
  static const WaveField w(make_profile(0.9, 1.1), 0.1);
  return w;
}

const WaveField& flat_wave() {
  static const WaveField w(make_profile(1.0, 1.0), 0.1);
  return w;
}

// Corrected profile plus a smooth bump of amplitude 1e-3 centred at y0.
FieldState bumped(int n, double y0 = 0.0) {
  FieldState s = init_state(canonical_wave(), GridSpec::for_run(0.1, 1.0, n));
  for (int i = 0; i < n; ++i) {
    const double y = s.grid.center(i) - y0;
    const double g = 1e-3 * std::exp(-y * y / 25.0);
    s.v[i] += g;
    s.U[i] += 0.5 * g * std::sin(0.3 * y);
    s.theta[i] -= 0.7 * g;
  }
  return s;
}

}  // namespace

TEST_CASE("profile data gives a zero perturbation") {
  const auto s = init_state(canonical_wave(), GridSpec::for_run(0.1, 1.0, 1024));
  const auto p = compute_perturbation(s, canonical_wave());
  for (int i = 0; i < p.size(); ++i) {
    CHECK(p.phi[i] == 0.0);
    CHECK(p.psi[i] == 0.0);
    CHECK(p.zeta[i] == 0.0);
    CHECK(p.W[i] == 0.0);
  }
  const auto d = norms_report(p, s, canonical_wave());
  CHECK(d.norms.L2x_pert == 0.0);
  CHECK(d.e1.E1 == 0.0);
  CHECK(d.e2.E2 == 0.0);
  CHECK(d.e2.ratio == 0.0);
}

TEST_CASE("epsilon mismatch is rejected") {
  FieldState s = init_state(canonical_wave(), GridSpec::for_run(0.1, 1.0, 512));
  s.epsilon = 0.2;
  CHECK_THROWS_AS(compute_perturbation(s, canonical_wave()), InvalidArgument);
}

TEST_CASE("bump perturbation fields") {
  const auto s = bumped(1024);
  const auto p = compute_perturbation(s, canonical_wave());
  const double h = p.h();
  CHECK(p.identity_residual <= p.identity_bound);
  // Antiderivatives are trapezoid integrals from the first cell.
  double acc = 0.0;
  for (int i = 1; i < p.size(); ++i) {
    acc += 0.5 * h * (p.phi[i - 1] + p.phi[i]);
    CHECK(p.Phi[i] == doctest::Approx(acc).epsilon(1e-12).scale(1e-9));
  }
  const int mid = p.size() / 2;
  CHECK(p.phi[mid] == doctest::Approx(s.v[mid] - p.profile.v[mid]));
  CHECK(p.psi[mid] == doctest::Approx(s.U[mid] - 0.1 * p.profile.u[mid]));
}

TEST_CASE("zeta identity converges at second order") {
  // The bump is centred between cells on both grids.
  const auto c = compute_perturbation_unchecked(bumped(1024, 1.0), canonical_wave());
  const auto f = compute_perturbation_unchecked(bumped(2048, 1.0), canonical_wave());
  CHECK(std::log2(c.identity_residual / f.identity_residual) >= 1.8);
}

TEST_CASE("eigenvector matrices") {
  for (double v : {0.9, 1.0, 1.1}) {
    const Mat3 L = left_matrix(v), R = right_matrix(v);
    const Mat3 I = multiply(L, R);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) CHECK(std::abs(I[i][j] - (i == j ? 1.0 : 0.0)) <= 1e-14);
    }
    // Unnormalized rows (2 L) against columns (2 R): 4 delta_ij.
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += 2.0 * L[i][k] * 2.0 * R[k][j];
        CHECK(std::abs(dot - (i == j ? 4.0 : 0.0)) <= 1e-14);
      }
    }
    const Mat3 Lam = multiply(multiply(L, convection_matrix(v)), R);
    std::array<double, 3> diag{};
    for (int i = 0; i < 3; ++i) {
      diag[i] = Lam[i][i];
      for (int j = 0; j < 3; ++j) {
        if (i != j) CHECK(std::abs(Lam[i][j]) <= 1e-12);
      }
    }
    std::sort(diag.begin(), diag.end());
    CHECK(diag[0] == doctest::Approx(-std::sqrt(2.0 / v)));
    CHECK(std::abs(diag[1]) <= 1e-12);
    CHECK(diag[2] == doctest::Approx(std::sqrt(2.0 / v)));
  }
}

TEST_CASE("dissipation matrix is positive semidefinite") {
  std::mt19937 rng(7);
  std::normal_distribution<double> normal;
  const Mat3 D = dissipation_matrix(0.95, 1.0);
  for (int k = 0; k < 200; ++k) {
    const std::array<double, 3> x{normal(rng), normal(rng), normal(rng)};
    double q = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) q += x[i] * D[i][j] * x[j];
    }
    CHECK(q >= -1e-15);
  }
  // Rank one along w = (1, sqrt2, 1) with eigenvalue kappa / v.
  const std::array<double, 3> w{1.0, std::sqrt(2.0), 1.0};
  for (int i = 0; i < 3; ++i) {
    double Dw = 0.0;
    for (int j = 0; j < 3; ++j) Dw += D[i][j] * w[j];
    CHECK(Dw == doctest::Approx(w[i] / 0.95));
  }
}

TEST_CASE("characteristic round trip") {
  const auto s = bumped(1024);
  const auto p = compute_perturbation(s, canonical_wave());
  const auto ch = char_decompose(p, canonical_wave());
  CHECK(char_round_trip_error(p, ch) <= 1e-12);
  for (int i = 0; i < ch.size(); ++i) {
    CHECK(ch.lambda1[i] < 0.0);
    CHECK(ch.lambda3[i] > 0.0);
  }
  CHECK(ch.T1_deviation <= 1.0 / 1.1 + 1e-12);
}

TEST_CASE("weight exponent is the smallest admissible one") {
  const auto s = bumped(1024);
  const auto p = compute_perturbation(s, canonical_wave());
  auto ch = char_decompose(p, canonical_wave());
  const long N = select_weight_N(ch, canonical_wave());
  REQUIRE(ch.status == WeightStatus::Found);
  CHECK(ch.N == N);
  const double thp = canonical_wave().theta_plus();
  CHECK(weight_condition_violations(ch, thp, N) == 0);
  // Independent linear scan.
  long scan = 0;
  while (weight_condition_violations(ch, thp, scan) > 0) ++scan;
  CHECK(scan == N);

  const auto flat = uniform_state(GridSpec::for_run(0.1, 1.0, 512), 0.1, 1.0, 0.0, 1.0);
  auto cf = char_decompose(compute_perturbation(flat, flat_wave()), flat_wave());
  CHECK(select_weight_N(cf, flat_wave()) == 0);
  CHECK(cf.status == WeightStatus::Vacuous);
  CHECK(to_string(WeightStatus::NoAdmissibleN) != to_string(WeightStatus::Found));
}

TEST_CASE("energy equivalences") {
  const auto s = bumped(1024);
  const auto p = compute_perturbation(s, canonical_wave());
  auto ch = char_decompose(p, canonical_wave());
  select_weight_N(ch, canonical_wave());
  const auto e1 = energy_E1_K1(p, ch, canonical_wave());
  CHECK(e1.m_norm_sq > 0.0);
  CHECK(e1.c_lower > 0.0);
  CHECK(e1.c_lower * e1.m_norm_sq <= e1.E1);
  CHECK(e1.E1 <= e1.c_upper * e1.m_norm_sq);
  CHECK(e1.Wy_norm_sq <= e1.Wy_bound);
  CHECK(e1.equivalence_ok());

  const auto e2 = energy_E2_K2(p, s, canonical_wave());
  CHECK(e2.E2 > 0.0);
  CHECK(e2.sandwich_checked > 0);
  CHECK(e2.sandwich_violations == 0);
  CHECK(e2.zeta_y_norm_sq <= e2.zeta_y_bound);
  CHECK(e2.ratio == doctest::Approx(e2.E2 / e2.pert_norm_sq));
}

TEST_CASE("entropy function") {
  CHECK(entropy_F(1.0) == 0.0);
  CHECK(entropy_F(2.0) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-15));
  // Near s = 1 the naive formula cancels; compare with the series.
  for (double d : {1e-3, -1e-4, 1e-6}) {
    const double series = d * d / 2.0 - d * d * d / 3.0 + d * d * d * d / 4.0;
    CHECK(entropy_F(1.0 + d) == doctest::Approx(series).epsilon(1e-9));
  }
  CHECK_THROWS_AS(entropy_F(0.0), InvalidArgument);
}

TEST_CASE("norm conversions between y and x") {
  const auto s = bumped(1024);
  const auto n = perturbation_norms(compute_perturbation(s, canonical_wave()));
  const double eps = 0.1;
  CHECK(n.L2x_pert == doctest::Approx(std::sqrt(eps) * n.L2y_pert));
  CHECK(n.L2x_dpert == doctest::Approx(n.L2y_dpert / std::sqrt(eps)));
  CHECK(n.L2x_zxx == doctest::Approx(n.L2y_zyy / std::pow(eps, 1.5)));
  CHECK(n.Linf_pert == doctest::Approx(1e-3).epsilon(1e-3));
  CHECK(n.a_priori >= n.Linf_antideriv * n.Linf_antideriv);
}

TEST_CASE("diagnostics CSV row") {
  const auto s = bumped(512);
  const auto p = compute_perturbation(s, canonical_wave());
  const auto d = norms_report(p, s, canonical_wave());
  const std::string row = diagnostics_csv_row(d), header = diagnostics_csv_header();
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
}

TEST_CASE("perturbation systems vanish on constant states") {
  const auto s = uniform_state(GridSpec::for_run(0.1, 1.0, 512), 0.1, 1.0, 0.0, 1.0);
  SolverConfig c;
  c.bc = BoundaryKind::ConstantFarfield;
  const auto traj = run(s, 2.0, c, flat_wave(), {0.0, 1.0, 2.0});
  const auto r = verify_perturbation_systems(traj, flat_wave());
  CHECK(r.triples == 1);
  CHECK(r.max() <= 1e-12);
  CHECK_THROWS_AS(verify_perturbation_systems({traj[0], traj[1]}, flat_wave()), InvalidArgument);
}
