#include "diffwave/perturbation.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "diffwave/error.hpp"
#include "grid_ops.hpp"

namespace diffwave {
namespace {

constexpr long kMaxWeightN = 1000000;

double max_abs(const std::vector<double>& f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

ProfileSlice sample_profile(const WaveField& wave, const GridSpec& grid, double tau) {
  const double eps = wave.epsilon();
  const int n = grid.n_cells;
  ProfileSlice s;
  s.tau = tau;
  s.t = eps * eps * tau;
  for (auto* a : {&s.v, &s.u, &s.theta, &s.P, &s.u_x, &s.u_t, &s.R1, &s.R2, &s.T_y}) a->resize(n);
  for (int i = 0; i < n; ++i) {
    const WavePoint w = wave.evaluate(eps * grid.center(i), s.t);
    s.v[i] = w.T.T;
    s.u[i] = w.u;
    s.theta[i] = w.theta_tilde;
    s.P[i] = w.P_tilde;
    s.u_x[i] = w.u_x;
    s.u_t[i] = w.u_t;
    s.R1[i] = w.R1;
    s.R2[i] = w.R2;
    s.T_y[i] = eps * w.T.T_x;
  }
  return s;
}

PerturbationState compute_perturbation_unchecked(const FieldState& state, const WaveField& wave) {
  const double eps = wave.epsilon();
  if (std::abs(state.epsilon - eps) > 1e-15 * std::max(1.0, eps)) {
    throw InvalidArgument(
        fmt::format("state epsilon {} differs from wave epsilon {}", state.epsilon, eps));
  }
  PerturbationState p;
  p.grid = state.grid;
  p.tau = state.tau;
  p.epsilon = eps;
  p.profile = sample_profile(wave, state.grid, state.tau);
  const ProfileSlice& pr = p.profile;
  const int n = state.size();
  const double h = state.grid.h();

  for (auto* a : {&p.phi, &p.psi, &p.omega, &p.zeta, &p.W, &p.Y}) a->resize(n);
  for (int i = 0; i < n; ++i) {
    const double eu = eps * pr.u[i];
    p.phi[i] = state.v[i] - pr.v[i];
    p.psi[i] = state.U[i] - eu;
    p.zeta[i] = state.theta[i] - pr.theta[i];
    // (U^2 - (eps u~)^2) / 2 factored to avoid cancellation.
    p.omega[i] = p.zeta[i] + 0.5 * p.psi[i] * (state.U[i] + eu);
  }
  p.Phi = ops::cumulative_trapezoid(p.phi, h);
  p.Psi = ops::cumulative_trapezoid(p.psi, h);
  p.Wbar = ops::cumulative_trapezoid(p.omega, h);

  std::vector<double> g(n);  // eps u~ Psi
  for (int i = 0; i < n; ++i) {
    const double eu = eps * pr.u[i];
    const double eu_y = eps * eps * pr.u_x[i];
    g[i] = eu * p.Psi[i];
    p.W[i] = p.Wbar[i] - g[i];
    p.Y[i] = 0.5 * p.psi[i] * p.psi[i] - eu_y * p.Psi[i];
  }

  double residual = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    const double Wy = (p.W[i + 1] - p.W[i - 1]) / (2.0 * h);
    residual = std::max(residual, std::abs(p.zeta[i] - (Wy - p.Y[i])));
  }
  p.identity_residual = residual;

  // Truncation: central difference of a trapezoid sum is omega + h^2 omega_yy / 4,
  // and of the product term h^2 g_yyy / 6. Rounding enters through W / h.
  double w_yy = 0.0, g_yyy = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    w_yy = std::max(w_yy, std::abs(p.omega[i + 1] - 2.0 * p.omega[i] + p.omega[i - 1]) / (h * h));
  }
  for (int i = 2; i + 2 < n; ++i) {
    g_yyy = std::max(g_yyy, std::abs(g[i + 2] - 2.0 * g[i + 1] + 2.0 * g[i - 1] - g[i - 2]) /
                                (2.0 * h * h * h));
  }
  const double rounding = 16.0 * DBL_EPSILON *
                          ((max_abs(p.Wbar) + max_abs(g)) / h + max_abs(state.theta));
  p.identity_bound = 10.0 * h * h * (w_yy + g_yyy) + rounding;
  return p;
}

PerturbationState compute_perturbation(const FieldState& state, const WaveField& wave) {
  PerturbationState p = compute_perturbation_unchecked(state, wave);
  if (p.identity_residual > p.identity_bound) {
    throw IdentityViolation(fmt::format(
        "max |zeta - (W_y - Y)| = {:.3e} exceeds {:.3e} at tau = {}; state and wave do not match",
        p.identity_residual, p.identity_bound, state.tau));
  }
  return p;
}

std::string to_string(WeightStatus s) {
  switch (s) {
    case WeightStatus::Vacuous:
      return "vacuous";
    case WeightStatus::Found:
      return "found";
    case WeightStatus::NoAdmissibleN:
      return "no-admissible-N";
  }
  return "unknown";
}

Mat3 left_matrix(double v_tilde) {
  const double l3 = std::sqrt(2.0 / v_tilde);
  const double r2 = std::sqrt(2.0);
  return {{{-0.5, -1.0 / l3, 0.5}, {0.5 * r2, 0.0, 0.5 * r2}, {-0.5, 1.0 / l3, 0.5}}};
}

Mat3 right_matrix(double v_tilde) {
  const double l3 = std::sqrt(2.0 / v_tilde);
  const double r2 = std::sqrt(2.0);
  // Columns r1 = (-1, -l3, 1), r2 = (sqrt2, 0, sqrt2), r3 = (-1, l3, 1), times 1/2.
  return {{{-0.5, 0.5 * r2, -0.5}, {-0.5 * l3, 0.0, 0.5 * l3}, {0.5, 0.5 * r2, 0.5}}};
}

Mat3 convection_matrix(double v_tilde) {
  return {{{0.0, -1.0, 0.0}, {-1.0 / v_tilde, 0.0, 1.0 / v_tilde}, {0.0, 1.0, 0.0}}};
}

Mat3 dissipation_matrix(double v_tilde, double kappa) {
  const double c = kappa / (4.0 * v_tilde);
  const double r2 = std::sqrt(2.0);
  return {{{c, c * r2, c}, {c * r2, 2.0 * c, c * r2}, {c, c * r2, c}}};
}

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

CharFields char_decompose(const PerturbationState& pert, const WaveField& wave) {
  const int n = pert.size();
  const double theta_plus = wave.theta_plus();
  const double delta = wave.profile().delta();
  const double half_r2 = 0.5 * std::sqrt(2.0);
  CharFields ch;
  for (auto* a : {&ch.b1, &ch.b2, &ch.b3, &ch.lambda1, &ch.lambda3, &ch.T1, &ch.T_y, &ch.v})
    a->resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = pert.profile.v[i];
    if (!(v > 0.0)) throw InvalidArgument("profile specific volume must be positive");
    const double l3 = std::sqrt(2.0 / v);
    const double Phi = pert.Phi[i], Psi = pert.Psi[i], W = pert.W[i];
    ch.b1[i] = 0.5 * (-Phi - 2.0 / l3 * Psi + W);
    ch.b2[i] = half_r2 * (Phi + W);
    ch.b3[i] = 0.5 * (-Phi + 2.0 / l3 * Psi + W);
    ch.lambda1[i] = -l3;
    ch.lambda3[i] = l3;
    ch.T1[i] = v / theta_plus;
    ch.T_y[i] = pert.profile.T_y[i];
    ch.v[i] = v;
    if (delta > 0.0) ch.T1_deviation = std::max(ch.T1_deviation, std::abs(ch.T1[i] - 1.0) / delta);
  }
  return ch;
}

double char_round_trip_error(const PerturbationState& pert, const CharFields& ch) {
  const double half_r2 = 0.5 * std::sqrt(2.0);
  double err = 0.0, scale = 0.0;
  for (int i = 0; i < ch.size(); ++i) {
    const double l3 = ch.lambda3[i];
    const double Phi = 0.5 * (-ch.b1[i] - ch.b3[i]) + half_r2 * ch.b2[i];
    const double Psi = 0.5 * l3 * (ch.b3[i] - ch.b1[i]);
    const double W = 0.5 * (ch.b1[i] + ch.b3[i]) + half_r2 * ch.b2[i];
    err = std::max({err, std::abs(Phi - pert.Phi[i]), std::abs(Psi - pert.Psi[i]),
                    std::abs(W - pert.W[i])});
    scale = std::max({scale, std::abs(pert.Phi[i]), std::abs(pert.Psi[i]), std::abs(pert.W[i])});
  }
  return scale > 0.0 ? err / scale : err;
}

bool weight_condition_holds(const CharFields& ch, double theta_plus, long N, int i) {
  const double b1s = ch.b1[i] * ch.b1[i];
  const double b3s = ch.b3[i] * ch.b3[i];
  if (b1s + b3s == 0.0) return true;
  const double T1 = ch.T1[i];
  const double Ty = ch.T_y[i];
  const double T1y = Ty / theta_plus;
  const double l1 = ch.lambda1[i], l3 = ch.lambda3[i];
  // lambda3 = sqrt(2 / T)  =>  lambda3_y = -lambda3 T_y / (2 T).
  const double l3y = -l3 * Ty / (2.0 * ch.v[i]);
  const double l1y = -l3y;
  const double logT1 = std::log(T1);
  const double Nd = static_cast<double>(N);
  double lhs = 0.0;
  if (b1s > 0.0) {
    lhs += -0.5 * std::exp((Nd - 1.0) * logT1) * (Nd * l1 * T1y + T1 * l1y) * b1s;
  }
  if (b3s > 0.0) {
    lhs += 0.5 * std::exp((-Nd - 1.0) * logT1) * (Nd * l3 * T1y - T1 * l3y) * b3s;
  }
  return lhs >= 2.0 * std::abs(Ty) * (b1s + b3s);
}

int weight_condition_violations(const CharFields& ch, double theta_plus, long N) {
  int bad = 0;
  for (int i = 0; i < ch.size(); ++i) bad += weight_condition_holds(ch, theta_plus, N, i) ? 0 : 1;
  return bad;
}

long select_weight_N(CharFields& ch, const WaveField& wave) {
  if (wave.profile().delta() == 0.0) {
    ch.N = 0;
    ch.status = WeightStatus::Vacuous;
    return 0;
  }
  const double theta_plus = wave.theta_plus();
  const int n = ch.size();
  long N = 0;
  int start = 0;
  for (;;) {
    int bad = -1;
    for (int k = 0; k < n; ++k) {
      const int i = (start + k) % n;
      if (!weight_condition_holds(ch, theta_plus, N, i)) {
        bad = i;
        break;
      }
    }
    if (bad < 0) break;
    // Every skipped N fails on this cell, so minimality is preserved.
    while (!weight_condition_holds(ch, theta_plus, N, bad)) {
      if (++N > kMaxWeightN) {
        ch.N = 0;
        ch.status = WeightStatus::NoAdmissibleN;
        return 0;
      }
    }
    start = bad;
  }
  ch.N = N;
  ch.status = WeightStatus::Found;
  return N;
}

bool EnergyE1::equivalence_ok() const {
  const double slack = 1e-12;
  return c_lower * m_norm_sq <= E1 * (1.0 + slack) && E1 <= c_upper * m_norm_sq * (1.0 + slack) &&
         Wy_norm_sq <= Wy_bound * (1.0 + slack);
}

EnergyE1 energy_E1_K1(const PerturbationState& pert, const CharFields& ch, const WaveField& wave) {
  const int n = pert.size();
  const double h = pert.h();
  const double kappa = wave.kappa();
  const double Nd = static_cast<double>(ch.N);
  const double r2 = std::sqrt(2.0);

  const std::vector<double> Wy = ops::derivative(pert.W, h);
  const std::vector<double> b1y = ops::derivative(ch.b1, h);
  const std::vector<double> b2y = ops::derivative(ch.b2, h);
  const std::vector<double> b3y = ops::derivative(ch.b3, h);

  std::vector<double> e(n), k(n), m(n), wy2(n);
  double v_min = std::numeric_limits<double>::infinity(), v_max = 0.0, w_max = 1.0;
  for (int i = 0; i < n; ++i) {
    const double v = ch.v[i];
    const double Phi = pert.Phi[i], Psi = pert.Psi[i], W = pert.W[i];
    const double logT1 = std::log(ch.T1[i]);
    const double wp = std::exp(Nd * logT1), wm = std::exp(-Nd * logT1);
    e[i] = 0.5 * Phi * Phi + 0.5 * v * Psi * Psi + 0.5 * W * W + 0.5 * wp * ch.b1[i] * ch.b1[i] +
           0.5 * ch.b2[i] * ch.b2[i] + 0.5 * wm * ch.b3[i] * ch.b3[i];
    const double s = b1y[i] + r2 * b2y[i] + b3y[i];
    k[i] = kappa / v * Wy[i] * Wy[i] + kappa / (4.0 * v) * s * s;
    m[i] = Phi * Phi + Psi * Psi + W * W;
    wy2[i] = Wy[i] * Wy[i];
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
    w_max = std::max({w_max, wp, wm});
  }
  EnergyE1 r;
  r.E1 = ops::trapezoid(e, h);
  r.K1 = ops::trapezoid(k, h);
  r.m_norm_sq = ops::trapezoid(m, h);
  r.Wy_norm_sq = ops::trapezoid(wy2, h);
  r.Wy_bound = kappa > 0.0 ? v_max / kappa * r.K1 : std::numeric_limits<double>::infinity();
  // First integrand lies in [min(1, v)/2, max(1, v)/2] |m|^2, the second in
  // [0, max(weights)/2 |L|_F^2 |m|^2] with |L|_F^2 = 2 + v.
  r.c_lower = 0.5 * std::min(1.0, v_min);
  r.c_upper = 0.5 * std::max(1.0, v_max) + 0.5 * w_max * (2.0 + v_max);
  return r;
}

double entropy_F(double s) {
  if (!(s > 0.0)) throw InvalidArgument("entropy function needs s > 0");
  return ops::entropy_from_deviation(s - 1.0);
}

EnergyE2 energy_E2_K2(const PerturbationState& pert, const FieldState& state,
                      const WaveField& wave) {
  const int n = pert.size();
  const double h = pert.h();
  const double kappa = wave.kappa();
  const ProfileSlice& pr = pert.profile;
  for (int i = 0; i < n; ++i) {
    if (!(state.v[i] > 0.0) || !(state.theta[i] > 0.0) || !(pr.v[i] > 0.0) ||
        !(pr.theta[i] > 0.0)) {
      throw InvalidArgument(fmt::format("non-positive state in cell {}", i));
    }
  }
  const std::vector<double> zy = ops::derivative(pert.zeta, h);

  double th_min = std::numeric_limits<double>::infinity(), th_max = 0.0;
  double v_min = th_min, v_max = 0.0, vt_max = 0.0;
  for (int i = 0; i < n; ++i) {
    th_min = std::min(th_min, pr.theta[i]);
    th_max = std::max(th_max, pr.theta[i]);
    v_min = std::min(v_min, pr.v[i]);
    v_max = std::max(v_max, pr.v[i]);
    vt_max = std::max(vt_max, state.v[i] * state.theta[i]);
  }
  const double C1v = th_min / (3.0 * v_max * v_max), C2v = th_max / (v_min * v_min);
  const double C1t = th_min / (3.0 * th_max * th_max), C2t = th_max / (th_min * th_min);

  EnergyE2 r;
  std::vector<double> e(n), k(n), q(n), zy2(n);
  const double slack = 1e-12;
  for (int i = 0; i < n; ++i) {
    const double dv = pert.phi[i] / pr.v[i];
    const double dt = pert.zeta[i] / pr.theta[i];
    const double Fv = pr.theta[i] * ops::entropy_from_deviation(dv);
    const double Ft = pr.theta[i] * ops::entropy_from_deviation(dt);
    e[i] = Fv + 0.5 * pert.psi[i] * pert.psi[i] + Ft;
    k[i] = kappa / (state.v[i] * state.theta[i]) * zy[i] * zy[i];
    q[i] = pert.phi[i] * pert.phi[i] + pert.psi[i] * pert.psi[i] + pert.zeta[i] * pert.zeta[i];
    zy2[i] = zy[i] * zy[i];
    if (std::abs(dv) <= 0.5) {
      ++r.sandwich_checked;
      const double p2 = pert.phi[i] * pert.phi[i];
      if (Fv < C1v * p2 * (1.0 - slack) || Fv > C2v * p2 * (1.0 + slack)) ++r.sandwich_violations;
    }
    if (std::abs(dt) <= 0.5) {
      ++r.sandwich_checked;
      const double z2 = pert.zeta[i] * pert.zeta[i];
      if (Ft < C1t * z2 * (1.0 - slack) || Ft > C2t * z2 * (1.0 + slack)) ++r.sandwich_violations;
    }
  }
  r.E2 = ops::trapezoid(e, h);
  r.K2 = ops::trapezoid(k, h);
  r.pert_norm_sq = ops::trapezoid(q, h);
  r.ratio = r.pert_norm_sq > 0.0 ? r.E2 / r.pert_norm_sq : 0.0;
  r.zeta_y_norm_sq = ops::trapezoid(zy2, h);
  r.zeta_y_bound = kappa > 0.0 ? vt_max / kappa * r.K2 : std::numeric_limits<double>::infinity();
  return r;
}

NormTable perturbation_norms(const PerturbationState& p) {
  const double h = p.h();
  const double eps = p.epsilon;
  const int n = p.size();
  const auto phi_y = ops::derivative(p.phi, h);
  const auto psi_y = ops::derivative(p.psi, h);
  const auto zeta_y = ops::derivative(p.zeta, h);
  const auto phi_yy = ops::second_derivative(p.phi, h);
  const auto psi_yy = ops::second_derivative(p.psi, h);
  const auto zeta_yy = ops::second_derivative(p.zeta, h);

  std::vector<double> a(n), b(n), c(n), d(n);
  NormTable t;
  for (int i = 0; i < n; ++i) {
    a[i] = p.phi[i] * p.phi[i] + p.psi[i] * p.psi[i] + p.zeta[i] * p.zeta[i];
    b[i] = phi_y[i] * phi_y[i] + psi_y[i] * psi_y[i] + zeta_y[i] * zeta_y[i];
    c[i] = zeta_yy[i] * zeta_yy[i];
    d[i] = phi_yy[i] * phi_yy[i] + psi_yy[i] * psi_yy[i] + c[i];
    t.Linfy_pert = std::max({t.Linfy_pert, std::abs(p.phi[i]), std::abs(p.psi[i]),
                             std::abs(p.zeta[i])});
    t.Linfy_dpert = std::max({t.Linfy_dpert, std::abs(phi_y[i]), std::abs(psi_y[i]),
                              std::abs(zeta_y[i])});
    t.Linf_antideriv = std::max({t.Linf_antideriv, std::abs(p.Phi[i]), std::abs(p.Psi[i]),
                                 std::abs(p.W[i])});
    t.Linf_pert = std::max({t.Linf_pert, std::abs(p.phi[i]), std::abs(p.zeta[i])});
    t.Linf_u_err = std::max(t.Linf_u_err, std::abs(p.psi[i]));
    t.Linf_zx = std::max(t.Linf_zx, std::abs(zeta_y[i]));
  }
  const double A = ops::trapezoid(a, h), B = ops::trapezoid(b, h);
  const double C = ops::trapezoid(c, h), D = ops::trapezoid(d, h);
  t.L2y_pert = std::sqrt(A);
  t.L2y_dpert = std::sqrt(B);
  t.L2y_zyy = std::sqrt(C);
  t.L2y_ddpert = std::sqrt(D);
  // dx = eps dy and d/dx = eps^-1 d/dy.
  t.L2x_pert = std::sqrt(eps * A);
  t.L2x_dpert = std::sqrt(B / eps);
  t.L2x_zxx = std::sqrt(C / (eps * eps * eps));
  if (eps > 0.0) {
    t.Linf_u_err /= eps;
    t.Linf_zx /= eps;
  }
  t.a_priori = t.Linf_antideriv * t.Linf_antideriv + A + (B + D) / (eps * eps);
  return t;
}

EnergyDiagnostics norms_report(const PerturbationState& pert, const FieldState& state,
                               const WaveField& wave) {
  EnergyDiagnostics d;
  d.tau = pert.tau;
  d.t = pert.profile.t;
  CharFields ch = char_decompose(pert, wave);
  select_weight_N(ch, wave);
  d.N = ch.N;
  d.weight_status = ch.status;
  d.round_trip_error = char_round_trip_error(pert, ch);
  d.e1 = energy_E1_K1(pert, ch, wave);
  d.e2 = energy_E2_K2(pert, state, wave);
  d.identity_residual = pert.identity_residual;
  d.identity_bound = pert.identity_bound;
  d.norms = perturbation_norms(pert);
  return d;
}

std::string diagnostics_csv_header() {
  return "tau,t,E1,K1,E2,K2,L2x_pert,L2x_dpert,L2x_zxx,Linf_pert,Linf_u_err,Linf_zx";
}

std::string diagnostics_csv_row(const EnergyDiagnostics& d) {
  return fmt::format(
      "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},"
      "{:.16e}",
      d.tau, d.t, d.e1.E1, d.e1.K1, d.e2.E2, d.e2.K2, d.norms.L2x_pert, d.norms.L2x_dpert,
      d.norms.L2x_zxx, d.norms.Linf_pert, d.norms.Linf_u_err, d.norms.Linf_zx);
}

}  // namespace diffwave
