#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "diffwave/error.hpp"
#include "diffwave/harness.hpp"

using namespace diffwave;

namespace {

SweepConfig small_sweep() {
  SweepConfig s;
  s.epsilons = {0.5, 0.4, 0.3};
  s.t_end = 2.0;
  s.t_samples = {0.0, 0.5, 1.0, 1.5, 2.0};
  s.n_cells = 256;
  s.t_ref = 1.0;
  s.fit_t_lo = 0.5;
  s.fit_t_hi = 2.0;
  return s;
}

const std::vector<CaseResult>& small_results() {
  static const std::vector<CaseResult> r = run_cases(small_sweep().cases(), 1);
  return r;
}

}  // namespace

TEST_CASE("time exponent fit recovers an exact power law") {
  std::vector<double> t{0.0, 1.0, 10.0, 20.0, 50.0, 100.0}, n;
  for (double x : t) n.push_back(3.0 * std::pow(1.0 + x, -0.6));
  const auto f = fit_time_exponent(t, n, 10.0, 100.0);
  CHECK(f.points == 4);
  CHECK(f.slope == doctest::Approx(-1.2).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-12));
  CHECK(f.residual <= 1e-12);
  CHECK_THROWS_AS(fit_time_exponent(t, n, 50.0, 100.0), DegenerateFit);
  CHECK_THROWS_AS(fit_time_exponent(t, std::vector<double>(6, 0.0), 0.0, 100.0), DegenerateFit);
  CHECK_THROWS_AS(fit_time_exponent(t, {1.0, 2.0}, 0.0, 100.0), InvalidArgument);
}

TEST_CASE("epsilon exponent fit recovers an exact power law") {
  const std::vector<double> eps{0.2, 0.1, 0.05};
  std::vector<double> n;
  for (double e : eps) n.push_back(2.0 * std::pow(e, 1.5));
  const auto f = fit_eps_exponent(eps, n);
  CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.points == 3);
  CHECK_THROWS_AS(fit_eps_exponent({0.2, 0.1}, {1.0, 0.5}), DegenerateFit);
  CHECK_THROWS_AS(fit_eps_exponent(eps, {0.0, 1e-16, 0.0}), DegenerateFit);
}

TEST_CASE("case validation and identifiers") {
  CaseSpec c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.id() == "eps=0.1_thm=0.9_thp=1.1_kappa=1");
  CHECK(c.delta() == doctest::Approx(0.2));
  c.epsilon = 0.6;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = CaseSpec{};
  c.t_samples = {0.0, 200.0};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);

  SweepConfig s;
  const auto cases = s.cases();
  REQUIRE(cases.size() == 3);
  CHECK(cases[0].creep_eta0 == 0.0);
  CHECK(cases[2].epsilon == 0.05);
  CHECK(cases[2].creep_eta0 == 1.0);
  s.fit_t_lo = s.fit_t_hi;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("sweep thread count") {
  ::setenv("DIFFWAVE_THREADS", "3", 1);
  CHECK(sweep_threads() == 3);
  ::setenv("DIFFWAVE_THREADS", "many", 1);
  CHECK(sweep_threads() == static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  ::unsetenv("DIFFWAVE_THREADS");
}

TEST_CASE("equal end states give an all-zero perturbation") {
  CaseSpec c;
  c.epsilon = 0.5;
  c.theta_minus = c.theta_plus = 1.0;
  c.t_end = 1.0;
  c.t_samples = {0.0, 0.5, 1.0};
  c.n_cells = 256;
  const auto r = run_case(c);
  CHECK(r.zero_perturbation());
  REQUIRE(r.diagnostics.size() == 3);
  for (const auto& d : r.diagnostics) CHECK(d.norms.L2x_pert <= 1e-13);
  const auto has = [&](const std::string& f) {
    return std::find(r.flags.begin(), r.flags.end(), f) != r.flags.end();
  };
  CHECK(has("all-zero-perturbation"));
  CHECK(has("positivity-maintained"));
  CHECK(r.conservation.max_imbalance_per_tau() <= 1e-12);
  CHECK_THROWS_AS(check_thermal_creep(r.snapshots, WaveField(std::make_shared<const SelfSimilarProfile>(
                                                                  solve_profile(c.profile_params())),
                                                              0.5),
                                      1.0),
                  InvalidArgument);
}

TEST_CASE("small sweep") {
  const auto& r = small_results();
  REQUIRE(r.size() == 3);
  for (const auto& c : r) {
    CHECK(c.diagnostics.size() == 5);
    CHECK(c.conservation.max_imbalance_per_tau() <= 1e-8);
    CHECK(!c.zero_perturbation());
  }
  // Creep runs on the smallest epsilon only.
  CHECK(!r[0].creep);
  REQUIRE(r[2].creep);
  CHECK(r[2].creep->within_bounds());

  const auto cfg = small_sweep();
  const auto a = analyze_sweep(r, cfg);
  CHECK(a.alpha.size() == 3 * norm_keys().size());
  CHECK(a.beta.size() == norm_keys().size());
  for (const auto& b : a.beta) CHECK_MESSAGE(b.fit.has_value(), b.error);

  // Reports are deterministic and independent of the thread count.
  const std::string once = emit_report(r, a, cfg);
  CHECK(emit_report(r, analyze_sweep(r, cfg), cfg) == once);
  const auto again = run_cases(cfg.cases(), 2);
  CHECK(emit_report(again, analyze_sweep(again, cfg), cfg) == once);
}

TEST_CASE("case JSON round trip") {
  const auto& r = small_results();
  const auto a = analyze_sweep(r, small_sweep());
  for (const auto& c : r) {
    const std::string text = case_to_json(c, a);
    const CaseResult back = case_from_json(text);
    CHECK(back.spec.id() == c.spec.id());
    CHECK(back.diagnostics.size() == c.diagnostics.size());
    CHECK(case_to_json(back, a) == text);
    CHECK(diagnostics_csv(back) == diagnostics_csv(c));
  }
  CHECK_THROWS_AS(case_from_json("[1, 2"), ParseError);
}

TEST_CASE("weighted supremum") {
  CaseResult r;
  for (double t : {0.0, 3.0, 10.0}) {
    EnergyDiagnostics d;
    d.t = t;
    d.norms.L2x_pert = 1.0 / (1.0 + t);
    r.diagnostics.push_back(d);
  }
  CHECK(weighted_sup(r) == doctest::Approx(1.0));
  CHECK(weighted_sup(r, 2.5) == doctest::Approx(std::sqrt(11.0)));
}
