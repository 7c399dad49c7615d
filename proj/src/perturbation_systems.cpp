#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "diffwave/error.hpp"
#include "diffwave/perturbation.hpp"
#include "grid_ops.hpp"

namespace diffwave {
namespace {

// Three-point derivative at the middle of (t0, t1, t2).
struct TimeStencil {
  double c0, c1, c2;
  TimeStencil(double t0, double t1, double t2) {
    const double a = t1 - t0, b = t2 - t1;
    c0 = -b / (a * (a + b));
    c1 = (b - a) / (a * b);
    c2 = a / (b * (a + b));
  }
  double operator()(const std::vector<double>& f0, const std::vector<double>& f1,
                    const std::vector<double>& f2, int i) const {
    return c0 * f0[i] + c1 * f1[i] + c2 * f2[i];
  }
};

// Conservative (f_y / v)_y with the face coefficient averaged as 1/v.
std::vector<double> flux_divergence(const std::vector<double>& f, const std::vector<double>& v,
                                    double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double right = 0.5 * (1.0 / v[i] + 1.0 / v[i + 1]) * (f[i + 1] - f[i]);
    const double left = 0.5 * (1.0 / v[i - 1] + 1.0 / v[i]) * (f[i] - f[i - 1]);
    d[i] = (right - left) / (h * h);
  }
  return d;
}

}  // namespace

double SystemResiduals::max() const {
  double m = 0.0;
  for (const auto* a : {&fin1, &fin2, &fin3})
    for (double x : *a) m = std::max(m, x);
  return m;
}

SystemResiduals verify_perturbation_systems(const std::vector<FieldState>& trajectory,
                                            const WaveField& wave, int margin) {
  if (trajectory.size() < 3) throw InvalidArgument("need at least three snapshots");
  const GridSpec& grid = trajectory.front().grid;
  for (const auto& s : trajectory) {
    if (s.grid.n_cells != grid.n_cells || s.grid.y_max != grid.y_max) {
      throw InvalidArgument("snapshots must share one grid");
    }
  }
  const int n = grid.n_cells;
  const double h = grid.h();
  const double eps = wave.epsilon();
  const double kappa = wave.kappa();
  const int lo = std::max(2, margin), hi = n - 1 - std::max(2, margin);

  std::vector<PerturbationState> perts;
  perts.reserve(trajectory.size());
  for (const auto& s : trajectory) perts.push_back(compute_perturbation_unchecked(s, wave));

  SystemResiduals r;
  for (std::size_t k = 1; k + 1 < trajectory.size(); ++k) {
    const FieldState& s = trajectory[k];
    const PerturbationState& a = perts[k - 1];
    const PerturbationState& p = perts[k];
    const PerturbationState& b = perts[k + 1];
    const ProfileSlice& pr = p.profile;
    const TimeStencil dtau(a.tau, p.tau, b.tau);

    std::vector<double> P(n), dP(n);
    for (int i = 0; i < n; ++i) {
      P[i] = s.theta[i] / s.v[i];
      dP[i] = P[i] - pr.P[i];
    }
    const auto Psi_y = ops::derivative(p.Psi, h);
    const auto Phi_y = ops::derivative(p.Phi, h);
    const auto W_y = ops::derivative(p.W, h);
    const auto W_yy = ops::second_derivative(p.W, h);
    const auto Y_y = ops::derivative(p.Y, h);
    const auto psi_y = ops::derivative(p.psi, h);
    const auto dP_y = ops::derivative(dP, h);
    const auto R1_y = ops::derivative(pr.R1, h);
    const auto R2_y = ops::derivative(pr.R2, h);
    const auto P_tilde_y = ops::derivative(pr.P, h);
    const auto U_y = ops::derivative(s.U, h);
    const auto th_y = ops::derivative(s.theta, h);
    const auto tht_y = ops::derivative(pr.theta, h);
    const auto cond = flux_divergence(s.theta, s.v, h);
    const auto cond_tilde = flux_divergence(pr.theta, pr.v, h);

    for (int i = lo; i <= hi; ++i) {
      const double v = s.v[i], vt = pr.v[i];
      const double eu = eps * pr.u[i];
      const double eu_y = eps * eps * pr.u_x[i];
      const double eu_tau = eps * eps * eps * pr.u_t[i];  // eps u~_tau with u~_tau = eps^2 u~_t
      const double heat = kappa * (th_y[i] / v - tht_y[i] / vt);

      const double Phi_t = dtau(a.Phi, p.Phi, b.Phi, i);
      const double Psi_t = dtau(a.Psi, p.Psi, b.Psi, i);
      const double Wbar_t = dtau(a.Wbar, p.Wbar, b.Wbar, i);
      const double W_t = dtau(a.W, p.W, b.W, i);
      const double phi_t = dtau(a.phi, p.phi, b.phi, i);
      const double psi_t = dtau(a.psi, p.psi, b.psi, i);
      const double zeta_t = dtau(a.zeta, p.zeta, b.zeta, i);

      // Integrated system.
      const double f1a = Phi_t - Psi_y[i];
      const double f1b = Psi_t + dP[i] + pr.R1[i];
      const double f1c = Wbar_t + P[i] * s.U[i] - pr.P[i] * eu - heat + eps * pr.R2[i];

      // W form.
      const double J1 = (pr.P[i] - 1.0) / vt * Phi_y[i] -
                        (dP[i] + pr.P[i] / vt * (v - vt) - (s.theta[i] - pr.theta[i]) / vt);
      const double Q1 = J1 + p.Y[i] / vt - pr.R1[i];
      const double J2 = (1.0 - P[i]) * Psi_y[i];
      const double Q2 = kappa * (1.0 / v - 1.0 / vt) * th_y[i] + J2 - eu_tau * p.Psi[i] -
                        kappa / vt * Y_y[i] - eps * pr.R2[i] + eu * pr.R1[i];
      const double f2b = Psi_t - Phi_y[i] / vt + W_y[i] / vt - Q1;
      const double f2c = W_t + Psi_y[i] - kappa / vt * W_yy[i] - Q2;

      // Differentiated system; (u~^2)_tau = 2 eps^2 u~ u~_t.
      const double Q3 = eps * P_tilde_y[i] * pr.u[i] +
                        0.5 * eps * eps * (2.0 * eps * eps * pr.u[i] * pr.u_t[i]) -
                        eps * R2_y[i];
      const double f3a = phi_t - psi_y[i];
      const double f3b = psi_t + dP_y[i] + R1_y[i];
      const double f3c = zeta_t + P[i] * U_y[i] - pr.P[i] * eu_y -
                         kappa * (cond[i] - cond_tilde[i]) - Q3;

      r.fin1[0] = std::max(r.fin1[0], std::abs(f1a));
      r.fin1[1] = std::max(r.fin1[1], std::abs(f1b));
      r.fin1[2] = std::max(r.fin1[2], std::abs(f1c));
      r.fin2[0] = std::max(r.fin2[0], std::abs(f1a));
      r.fin2[1] = std::max(r.fin2[1], std::abs(f2b));
      r.fin2[2] = std::max(r.fin2[2], std::abs(f2c));
      r.fin3[0] = std::max(r.fin3[0], std::abs(f3a));
      r.fin3[1] = std::max(r.fin3[1], std::abs(f3b));
      r.fin3[2] = std::max(r.fin3[2], std::abs(f3c));
    }
    ++r.triples;
  }
  return r;
}

}  // namespace diffwave
