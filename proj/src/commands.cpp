#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "diffwave/cli.hpp"
#include "diffwave/error.hpp"

namespace diffwave {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kConservationTol = 1e-8;
constexpr double kTailTol = 0.1;

struct Context {
  const RunConfig& cfg;
  std::ostream& err;
  std::vector<std::string> files;  // relative to output_dir

  void log(const std::string& s) const {
    static std::mutex m;  // sweep workers log concurrently
    std::lock_guard<std::mutex> lock(m);
    if (cfg.verbosity >= 1) err << s << '\n' << std::flush;
  }
  void debug(const std::string& s) const {
    if (cfg.verbosity >= 2) err << s << '\n' << std::flush;
  }
  void fail(const std::string& s) const { err << "FAIL " << s << '\n' << std::flush; }

  void write(const std::string& rel, const std::string& text) {
    const fs::path p = fs::path(cfg.output_dir) / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", p.string()));
    out << text;
    files.push_back(rel);
  }
  std::string read(const std::string& rel) const {
    const fs::path p = fs::path(cfg.output_dir) / rel;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(fmt::format("missing input file '{}'", p.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  RunOptions options(bool keep) const {
    RunOptions o;
    o.keep_snapshots = keep;
    if (cfg.verbosity >= 1) o.log = [this](const std::string& s) { log(s); };
    return o;
  }
};

std::string case_file_stem(const CaseSpec& c) { return "cases/" + c.id(); }

// ---- profile ---------------------------------------------------------------

int run_profile(Context& ctx) {
  const ProfileParams params = ctx.cfg.profile_params();
  const SelfSimilarProfile profile = solve_profile(params);
  ctx.write("profile.json", profile_to_json(profile));

  bool pass = true;
  ojson rep;
  rep["shoot_param"] = profile.shoot_param();
  rep["achieved_mismatch"] = profile.achieved_mismatch();
  rep["ode_residual_max"] = ode_residual_max(profile);
  if (profile.constant()) {
    rep["tail"] = nullptr;
    rep["slope_bounds"] = nullptr;
  } else {
    const TailReport t = verify_tail(profile);
    const bool tail_ok =
        t.relative_error_plus() <= kTailTol && t.relative_error_minus() <= kTailTol;
    rep["tail"] = {{"slope_plus", t.slope_plus},
                   {"theory_plus", t.theory_plus},
                   {"relative_error_plus", t.relative_error_plus()},
                   {"residual_plus", t.residual_plus},
                   {"nodes_plus", t.nodes_plus},
                   {"slope_minus", t.slope_minus},
                   {"theory_minus", t.theory_minus},
                   {"relative_error_minus", t.relative_error_minus()},
                   {"residual_minus", t.residual_minus},
                   {"nodes_minus", t.nodes_minus},
                   {"tolerance", kTailTol},
                   {"pass", tail_ok}};
    if (!tail_ok) {
      ctx.fail(fmt::format("tail slopes {:.4f} / {:.4f} vs {:.4f} / {:.4f}", t.slope_plus,
                           t.slope_minus, t.theory_plus, t.theory_minus));
    }
    const SlopeBoundReport b = verify_slope_bounds(profile, -1.0, 1.0);
    rep["slope_bounds"] = {{"window", {b.eta_lo, b.eta_hi}},
                           {"r_min", b.r_min},
                           {"r_max", b.r_max},
                           {"sign", b.sign},
                           {"samples", b.samples},
                           {"pass", b.bounded()}};
    if (!b.bounded()) ctx.fail("slope bounds on [-1, 1]");
    pass = tail_ok && b.bounded();
    ctx.log(fmt::format("T(0) = {:.12f}, tail slopes {:.4f} / {:.4f}", profile.shoot_param(),
                        t.slope_plus, t.slope_minus));
  }
  rep["pass"] = pass;
  ctx.write("profile_report.json", rep.dump(2) + "\n");
  return pass ? 0 : 1;
}

// ---- simulate / sweep ------------------------------------------------------

bool case_checks(const Context& ctx, const CaseResult& r) {
  bool pass = true;
  const double imb = r.conservation.max_imbalance_per_tau();
  if (!(imb <= kConservationTol)) {
    ctx.fail(fmt::format("[{}] conservation imbalance {:.3e} per unit tau", r.spec.id(), imb));
    pass = false;
  }
  if (!r.creep_error.empty()) {
    ctx.fail(fmt::format("[{}] creep: {}", r.spec.id(), r.creep_error));
    pass = false;
  } else if (r.creep && !r.creep->within_bounds()) {
    ctx.fail(fmt::format("[{}] creep ratio [{:.4f}, {:.4f}] outside [{:.4f}, {:.4f}]", r.spec.id(),
                         r.creep->ratio_min, r.creep->ratio_max, r.creep->bound_lo,
                         r.creep->bound_hi));
    pass = false;
  }
  if (r.spec.delta() == 0.0 && !r.zero_perturbation()) {
    ctx.fail(fmt::format("[{}] nonzero perturbation for a constant state", r.spec.id()));
    pass = false;
  }
  return pass;
}

bool analysis_checks(const Context& ctx, const SweepAnalysis& a) {
  bool pass = true;
  for (const auto& e : a.alpha) {
    for (const auto& t : alpha_targets()) {
      if (t.key != e.key) continue;
      if (!e.fit || e.fit->slope < t.lo || e.fit->slope > t.hi) {
        ctx.fail(fmt::format("[{}] alpha({}) = {} outside [{}, {}]", e.case_id, e.key,
                             e.fit ? fmt::format("{:.4f}", e.fit->slope) : e.error, t.lo, t.hi));
        pass = false;
      }
    }
  }
  for (const auto& e : a.beta) {
    for (const auto& t : beta_targets()) {
      if (t.key != e.key) continue;
      if (!e.fit || e.fit->slope < t.lo) {
        ctx.fail(fmt::format("beta({}) = {} below {}", e.key,
                             e.fit ? fmt::format("{:.4f}", e.fit->slope) : e.error, t.lo));
        pass = false;
      }
    }
    if (e.key.rfind("Linf", 0) == 0 && !e.monotone) {
      ctx.fail(fmt::format("{} does not shrink monotonically with epsilon", e.key));
      pass = false;
    }
  }
  return pass;
}

int run_simulate(Context& ctx) {
  const CaseSpec spec = ctx.cfg.case_spec();
  const CaseResult r = run_case(spec, ctx.options(true));
  for (const auto& s : r.snapshots) {
    const std::string rel = "snapshots/" + snapshot_file_name(s.tau);
    const fs::path p = fs::path(ctx.cfg.output_dir) / rel;
    fs::create_directories(p.parent_path());
    write_snapshot_csv(s, p.string());
    ctx.files.push_back(rel);
  }
  ctx.write("diagnostics.csv", diagnostics_csv(r));
  SweepConfig sc = ctx.cfg.sweep_config();
  const SweepAnalysis a = analyze_sweep({r}, sc);
  ctx.write("case.json", case_to_json(r, a));
  return case_checks(ctx, r) ? 0 : 1;
}

bool finish_sweep(Context& ctx, const std::vector<CaseResult>& results, const SweepConfig& sc) {
  const SweepAnalysis a = analyze_sweep(results, sc);
  ctx.write("rate_report.json", emit_report(results, a, sc));
  bool pass = true;
  for (const auto& r : results) pass &= case_checks(ctx, r);
  pass &= analysis_checks(ctx, a);
  return pass;
}

int run_sweep(Context& ctx) {
  const SweepConfig sc = ctx.cfg.sweep_config();
  sc.validate();
  const auto specs = sc.cases();
  const int threads = sweep_threads();
  ctx.log(fmt::format("sweep: {} cases on up to {} threads", specs.size(), threads));
  const auto results = run_cases(specs, threads, ctx.options(false));
  const SweepAnalysis a = analyze_sweep(results, sc);
  for (const auto& r : results) {
    ctx.write(case_file_stem(r.spec) + ".json", case_to_json(r, a));
    ctx.write(case_file_stem(r.spec) + ".csv", diagnostics_csv(r));
  }
  return finish_sweep(ctx, results, sc) ? 0 : 1;
}

int run_report(Context& ctx) {
  const SweepConfig sc = ctx.cfg.sweep_config();
  sc.validate();
  std::vector<CaseResult> results;
  for (const auto& spec : sc.cases()) {
    results.push_back(case_from_json(ctx.read(case_file_stem(spec) + ".json")));
  }
  return finish_sweep(ctx, results, sc) ? 0 : 1;
}

// ---- verify ----------------------------------------------------------------

// Rounding level of a second difference of O(scale) data on spacing h.
double rounding_floor(double scale, double h) {
  return 256.0 * std::numeric_limits<double>::epsilon() * scale / (h * h);
}

ojson order_entry(double coarse, double fine, double min_order, double floor, bool& pass) {
  const double order = observed_order(coarse, fine, floor);
  const bool ok = order >= min_order;
  pass &= ok;
  return {{"coarse", coarse},
          {"fine", fine},
          {"order", std::isfinite(order) ? ojson(order) : ojson("rounding")},
          {"pass", ok}};
}

ojson verify_profile_identities(Context& ctx, const WaveField& wave, bool& pass) {
  const VerifySettings& v = ctx.cfg.verify;
  const double h = v.h_coarse;
  const auto c = verify_approximate_system(wave, v.half_width, v.t_check, h);
  const auto f = verify_approximate_system(wave, v.half_width, v.t_check, h / 2.0);
  const double floor = rounding_floor(
      std::max(wave.theta_minus(), wave.theta_plus()) * std::max(1.0, wave.kappa()), h / 2.0);
  bool ok = true;
  ojson j;
  j["h"] = {h, h / 2.0};
  j["rounding_floor"] = floor;
  j["eq1"] = order_entry(c.eq1, f.eq1, v.min_order, floor, ok);
  j["eq2"] = order_entry(c.eq2, f.eq2, v.min_order, floor, ok);
  j["eq3"] = order_entry(c.eq3, f.eq3, v.min_order, floor, ok);
  j["eq1_analytic"] = {c.eq1_analytic, f.eq1_analytic};
  j["limit_identity"] = order_entry(verify_limit_identity(wave, v.half_width, v.t_check, h),
                                    verify_limit_identity(wave, v.half_width, v.t_check, h / 2.0),
                                    v.min_order, floor, ok);
  j["pass"] = ok;
  if (!ok) ctx.fail("approximate system or limit identity order");
  pass &= ok;
  return j;
}

ojson verify_systems(Context& ctx, const WaveField& wave, bool& pass) {
  const VerifySettings& v = ctx.cfg.verify;
  SolverConfig solver = ctx.cfg.solver;
  // The differentiated system is only smooth for the unlimited reconstruction.
  solver.limiter = Limiter::None;
  const double eps = wave.epsilon();
  std::array<SystemResiduals, 2> res;
  std::array<double, 2> h{};
  for (int k = 0; k < 2; ++k) {
    const int n = v.n_cells << k;
    const GridSpec grid = GridSpec::for_run(eps, v.systems_tau0 * eps * eps + 1.0, n);
    h[k] = grid.h();
    const double d = 2.0 * grid.h();
    HydroSolver hs(solver, wave);
    const double t0 = v.systems_tau0;
    auto traj = hs.run(init_state(wave, grid), t0 + d, {t0 - d, t0, t0 + d});
    res[k] = verify_perturbation_systems(traj, wave);
    ctx.debug(fmt::format("systems n = {}: max residual {:.3e}", n, res[k].max()));
  }
  const double floor = rounding_floor(
      std::max(wave.theta_minus(), wave.theta_plus()) * std::max(1.0, wave.kappa()), h[1]);
  bool ok = true;
  ojson j;
  j["limiter"] = to_string(solver.limiter);
  j["h"] = h;
  j["rounding_floor"] = floor;
  const char* names[3] = {"fin1", "fin2", "fin3"};
  const std::array<double, 3> SystemResiduals::*arrays[3] = {
      &SystemResiduals::fin1, &SystemResiduals::fin2, &SystemResiduals::fin3};
  for (int s = 0; s < 3; ++s) {
    ojson eqs = ojson::array();
    for (int q = 0; q < 3; ++q) {
      eqs.push_back(order_entry((res[0].*arrays[s])[q], (res[1].*arrays[s])[q],
                                v.systems_min_order, floor, ok));
    }
    j[names[s]] = eqs;
  }
  j["pass"] = ok;
  if (!ok) ctx.fail("perturbation system residual order");
  pass &= ok;
  return j;
}

ojson verify_equivalence(Context& ctx, bool& pass) {
  const VerifySettings& v = ctx.cfg.verify;
  auto profile = std::make_shared<const SelfSimilarProfile>(solve_profile(ctx.cfg.profile_params()));
  ojson arr = ojson::array();
  bool ok = true;
  for (double eps : v.equivalence_epsilons) {
    const WaveField wave(profile, eps, 1.0);
    const GridSpec grid = GridSpec::for_run(eps, 1.0, v.n_cells);
    const auto e = verify_unscaled_equivalence(wave, grid, v.equivalence_steps, ctx.cfg.solver);
    const bool good = e.discrepancy <= v.equivalence_tol;
    ok &= good;
    arr.push_back({{"epsilon", eps},
                   {"steps", e.steps},
                   {"dtau", e.dtau},
                   {"discrepancy", e.discrepancy},
                   {"pass", good}});
    if (!good) ctx.fail(fmt::format("scaled/unscaled discrepancy {:.3e} at eps = {}", e.discrepancy, eps));
  }
  pass &= ok;
  return {{"tolerance", v.equivalence_tol}, {"cases", arr}, {"pass", ok}};
}

ojson verify_conservation(Context& ctx, const WaveField& wave, bool& pass) {
  const VerifySettings& v = ctx.cfg.verify;
  const double eps = wave.epsilon();
  const GridSpec grid = GridSpec::for_run(eps, v.conservation_t_end, v.n_cells);
  HydroSolver hs(ctx.cfg.solver, wave);
  const double tau_end = v.conservation_t_end / (eps * eps);
  std::vector<double> taus;
  for (int k = 0; k <= 4; ++k) taus.push_back(tau_end * k / 4.0);
  const auto traj = hs.run(init_state(wave, grid), tau_end, taus);
  const ConservationReport c = conservation_report(traj);
  const double imb = c.max_imbalance_per_tau();
  const bool cons_ok = imb <= v.conservation_tol;
  if (!cons_ok) ctx.fail(fmt::format("conservation imbalance {:.3e} per unit tau", imb));

  // Structural identity on every stored snapshot.
  bool id_ok = true;
  double worst = 0.0;
  for (const auto& s : traj) {
    const PerturbationState p = compute_perturbation_unchecked(s, wave);
    worst = std::max(worst, p.identity_bound > 0.0 ? p.identity_residual / p.identity_bound : 0.0);
    id_ok &= p.identity_residual <= p.identity_bound;
  }
  if (!id_ok) ctx.fail("zeta = W_y - Y identity above its bound");
  pass &= cons_ok && id_ok;
  ojson totals = ojson::array();
  for (int k = 0; k < 3; ++k) totals.push_back(c.total[k].imbalance_per_tau);
  return {{"t_end", v.conservation_t_end},
          {"imbalance_per_tau", totals},
          {"max_imbalance_per_tau", imb},
          {"tolerance", v.conservation_tol},
          {"identity_worst_ratio", worst},
          {"pass", cons_ok && id_ok}};
}

int run_verify(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  auto profile = std::make_shared<const SelfSimilarProfile>(solve_profile(cfg.profile_params()));
  const WaveField wave(profile, cfg.epsilon, std::max(cfg.verify.t_check, cfg.verify.conservation_t_end) + 1.0);
  bool pass = true;
  ojson doc;
  ctx.log("verify: profile identities");
  doc["approximate_system"] = verify_profile_identities(ctx, wave, pass);
  ctx.log("verify: perturbation systems");
  doc["perturbation_systems"] = verify_systems(ctx, wave, pass);
  ctx.log("verify: scaled/unscaled equivalence");
  doc["equivalence"] = verify_equivalence(ctx, pass);
  ctx.log("verify: conservation");
  doc["conservation"] = verify_conservation(ctx, wave, pass);
  doc["pass"] = pass;
  ctx.write("verify.json", doc.dump(2) + "\n");
  return pass ? 0 : 1;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int dispatch(const RunConfig& config, std::ostream& err) {
  Context ctx{config, err, {}};
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  int status = 1;
  try {
    ctx.write("config.json", config_to_json(config));
    switch (config.command) {
      case Command::Profile: status = run_profile(ctx); break;
      case Command::Simulate: status = run_simulate(ctx); break;
      case Command::Sweep: status = run_sweep(ctx); break;
      case Command::Verify: status = run_verify(ctx); break;
      case Command::Report: status = run_report(ctx); break;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    status = 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    status = 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    status = 1;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ojson meta{{"command", to_string(config.command)},
             {"suite_version", kSuiteVersion},
             {"started_utc", started},
             {"wall_seconds", wall},
             {"threads", sweep_threads()},
             {"exit_status", status},
             {"files", ctx.files}};
  try {
    std::ofstream(fs::path(config.output_dir) / "meta.json") << meta.dump(2) << '\n';
  } catch (...) {
  }
  return status;
}

}  // namespace diffwave
