#pragma once

// Finite-volume kernel shared by the scaled solver and the unscaled check.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "diffwave/hydro.hpp"

namespace diffwave::detail {

// Coefficients of the conservation law
//   v_t - w_x = 0,  w_t + (a P)_x = 0,  (theta + k w^2/2)_t + (P w)_x = kappa (theta_x / v)_x
// with sound speed s sqrt(2 theta) / v. Scaled: a = k = s = 1.
struct Physics {
  double pressure = 1.0;
  double kinetic = 1.0;
  double speed = 1.0;

  static Physics scaled() { return {}; }
  static Physics unscaled(double epsilon) {
    return {1.0 / (epsilon * epsilon), epsilon * epsilon, 1.0 / epsilon};
  }
};

// Primitive (v, w, theta) in the two ghost cells on each side, ordered
// left-outer, left-inner, right-inner, right-outer.
struct Ghosts {
  std::array<double, 4> v{};
  std::array<double, 4> w{};
  std::array<double, 4> theta{};
};

struct FluxLedger {
  std::array<double, 3> left{};
  std::array<double, 3> right{};
};

class Scheme {
 public:
  Scheme(Physics physics, const SolverConfig& config, double h, double kappa, int n)
      : ph_(physics), cfg_(config), h_(h), kappa_(kappa), n_(n) {
    const std::size_t padded = n + 4;
    for (auto* a : {&pv_, &pw_, &pE_, &sv_, &sw_, &sE_}) a->assign(padded, 0.0);
    for (auto* a : {&v0_, &w0_, &E0_, &dv_, &dw_, &dE_, &ta_, &tb_, &tc_, &td_, &th_}) a->assign(n, 0.0);
    for (auto* a : {&fv_, &fw_, &fE_, &D_}) a->assign(n + 1, 0.0);
  }

  int size() const { return n_; }

  // One Strang step (half conduction, hyperbolic, half conduction) from
  // `time` to `time + dt`; `ghost(time, Ghosts&, v, w, theta, n)` supplies
  // boundary states and may read the current interior (v, w, theta).
  template <class GhostFn>
  void step(double* v, double* w, double* theta, double time, double dt, GhostFn&& ghost,
            FluxLedger& ledger) {
    const double mid = time + 0.5 * dt, end = time + dt;
    ghost(time, g0_, v, w, theta, n_);
    ghost(mid, gh_, v, w, theta, n_);
    conduct(v, theta, 0.5 * dt, g0_, gh_, ledger);
    hyperbolic(v, w, theta, time, dt, ghost, ledger);
    ghost(mid, gh_, v, w, theta, n_);
    ghost(end, g1_, v, w, theta, n_);
    conduct(v, theta, 0.5 * dt, gh_, g1_, ledger);
  }

  double max_speed(const double* v, const double* theta) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s = std::max(s, std::sqrt(2.0 * theta[i]) / v[i]);
    return s * ph_.speed;
  }

 private:
  static double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
  }

  double slope(double a, double b) const {
    return cfg_.limiter == Limiter::Minmod ? minmod(a, b) : 0.5 * (a + b);
  }

  void load_ghosts(const Ghosts& g) {
    static constexpr int offset[4] = {0, 1, 0, 1};
    for (int k = 0; k < 4; ++k) {
      const int p = k < 2 ? offset[k] : n_ + 2 + offset[k];
      pv_[p] = g.v[k];
      pw_[p] = g.w[k];
      pE_[p] = g.theta[k] + 0.5 * ph_.kinetic * g.w[k] * g.w[k];
    }
  }

  // dq = -(F_{i+1/2} - F_{i-1/2}) / h on the padded conserved arrays.
  void rhs() {
    const int last = n_ + 2;
    for (int p = 1; p <= last; ++p) {
      sv_[p] = slope(pv_[p] - pv_[p - 1], pv_[p + 1] - pv_[p]);
      sw_[p] = slope(pw_[p] - pw_[p - 1], pw_[p + 1] - pw_[p]);
      sE_[p] = slope(pE_[p] - pE_[p - 1], pE_[p + 1] - pE_[p]);
    }
    const double k2 = 0.5 * ph_.kinetic;
    for (int f = 0; f <= n_; ++f) {
      const int l = f + 1, r = f + 2;
      const double vl = pv_[l] + 0.5 * sv_[l], vr = pv_[r] - 0.5 * sv_[r];
      const double wl = pw_[l] + 0.5 * sw_[l], wr = pw_[r] - 0.5 * sw_[r];
      const double El = pE_[l] + 0.5 * sE_[l], Er = pE_[r] - 0.5 * sE_[r];
      const double thl = El - k2 * wl * wl, thr = Er - k2 * wr * wr;
      const double Pl = thl / vl, Pr = thr / vr;
      const double a = ph_.speed * std::max(std::sqrt(2.0 * thl) / vl, std::sqrt(2.0 * thr) / vr);
      fv_[f] = -0.5 * (wl + wr) - 0.5 * a * (vr - vl);
      fw_[f] = 0.5 * ph_.pressure * (Pl + Pr) - 0.5 * a * (wr - wl);
      fE_[f] = 0.5 * (Pl * wl + Pr * wr) - 0.5 * a * (Er - El);
    }
    const double inv_h = 1.0 / h_;
    for (int i = 0; i < n_; ++i) {
      dv_[i] = -(fv_[i + 1] - fv_[i]) * inv_h;
      dw_[i] = -(fw_[i + 1] - fw_[i]) * inv_h;
      dE_[i] = -(fE_[i + 1] - fE_[i]) * inv_h;
    }
  }

  void book_faces(FluxLedger& ledger, double weight) const {
    ledger.left[0] += weight * fv_[0];
    ledger.left[1] += weight * fw_[0];
    ledger.left[2] += weight * fE_[0];
    ledger.right[0] += weight * fv_[n_];
    ledger.right[1] += weight * fw_[n_];
    ledger.right[2] += weight * fE_[n_];
  }

  // SSP-RK2 on the conserved variables (v, w, theta + k w^2 / 2).
  // Stage ghosts come from the stage state.
  template <class GhostFn>
  void hyperbolic(double* v, double* w, double* theta, double time, double dt, GhostFn& ghost,
                  FluxLedger& ledger) {
    const double k2 = 0.5 * ph_.kinetic;
    ghost(time, ga_, v, w, theta, n_);
    for (int i = 0; i < n_; ++i) {
      v0_[i] = v[i];
      w0_[i] = w[i];
      E0_[i] = theta[i] + k2 * w[i] * w[i];
      pv_[i + 2] = v0_[i];
      pw_[i + 2] = w0_[i];
      pE_[i + 2] = E0_[i];
    }
    load_ghosts(ga_);
    rhs();
    book_faces(ledger, 0.5 * dt);
    for (int i = 0; i < n_; ++i) {
      pv_[i + 2] += dt * dv_[i];
      pw_[i + 2] += dt * dw_[i];
      pE_[i + 2] += dt * dE_[i];
    }
    for (int i = 0; i < n_; ++i) th_[i] = pE_[i + 2] - k2 * pw_[i + 2] * pw_[i + 2];
    ghost(time + dt, ga_, pv_.data() + 2, pw_.data() + 2, th_.data(), n_);
    load_ghosts(ga_);
    rhs();
    book_faces(ledger, 0.5 * dt);
    for (int i = 0; i < n_; ++i) {
      v[i] = 0.5 * (v0_[i] + pv_[i + 2] + dt * dv_[i]);
      w[i] = 0.5 * (w0_[i] + pw_[i + 2] + dt * dw_[i]);
      const double E = 0.5 * (E0_[i] + pE_[i + 2] + dt * dE_[i]);
      theta[i] = E - k2 * w[i] * w[i];
    }
  }

  // Heat flux G = -D (theta_i - theta_{i-1}) / h on face i with D the
  // arithmetic mean of kappa / v; v is frozen over the substep.
  void face_coefficients(const double* v, const Ghosts& g, double& left, double& right) {
    for (int i = 1; i < n_; ++i) D_[i] = 0.5 * kappa_ * (1.0 / v[i - 1] + 1.0 / v[i]);
    left = 0.5 * kappa_ * (1.0 / g.v[1] + 1.0 / v[0]);
    right = 0.5 * kappa_ * (1.0 / v[n_ - 1] + 1.0 / g.v[2]);
  }

  void conduct(const double* v, double* theta, double dt, const Ghosts& ga, const Ghosts& gb,
               FluxLedger& ledger) {
    if (kappa_ == 0.0) return;
    double DLa, DRa, DLb, DRb;
    face_coefficients(v, ga, DLa, DRa);
    face_coefficients(v, gb, DLb, DRb);
    const double r = dt / (h_ * h_);
    const int m = n_ - 1;

    // Explicit heat fluxes at the old level.
    const double GLa = -DLa * (theta[0] - ga.theta[1]) / h_;
    const double GRa = -DRa * (ga.theta[2] - theta[m]) / h_;
    auto diff = [&](int i, double left_face_D, double right_face_D, double tl, double tr) {
      return right_face_D * (tr - theta[i]) - left_face_D * (theta[i] - tl);
    };

    if (cfg_.conduction == Conduction::ExplicitSubstep) {
      for (int i = 0; i < n_; ++i) {
        const double Dl = i == 0 ? DLa : D_[i];
        const double Dr = i == m ? DRa : D_[i + 1];
        const double tl = i == 0 ? ga.theta[1] : theta[i - 1];
        const double tr = i == m ? ga.theta[2] : theta[i + 1];
        td_[i] = theta[i] + r * diff(i, Dl, Dr, tl, tr);
      }
      std::copy(td_.begin(), td_.end(), theta);
      ledger.left[2] += dt * GLa;
      ledger.right[2] += dt * GRa;
      return;
    }

    // Crank-Nicolson; D_ holds the interior faces, identical at both levels.
    const double q = 0.5 * r;
    for (int i = 0; i < n_; ++i) {
      const double Dl_a = i == 0 ? DLa : D_[i];
      const double Dr_a = i == m ? DRa : D_[i + 1];
      const double Dl_b = i == 0 ? DLb : D_[i];
      const double Dr_b = i == m ? DRb : D_[i + 1];
      const double tl = i == 0 ? ga.theta[1] : theta[i - 1];
      const double tr = i == m ? ga.theta[2] : theta[i + 1];
      ta_[i] = -q * Dl_b;
      tb_[i] = 1.0 + q * (Dl_b + Dr_b);
      tc_[i] = -q * Dr_b;
      td_[i] = theta[i] + q * diff(i, Dl_a, Dr_a, tl, tr);
    }
    td_[0] += q * DLb * gb.theta[1];
    td_[m] += q * DRb * gb.theta[2];
    ta_[0] = 0.0;
    tc_[m] = 0.0;
    // Thomas algorithm.
    for (int i = 1; i < n_; ++i) {
      const double f = ta_[i] / tb_[i - 1];
      tb_[i] -= f * tc_[i - 1];
      td_[i] -= f * td_[i - 1];
    }
    theta[m] = td_[m] / tb_[m];
    for (int i = m - 1; i >= 0; --i) theta[i] = (td_[i] - tc_[i] * theta[i + 1]) / tb_[i];

    const double GLb = -DLb * (theta[0] - gb.theta[1]) / h_;
    const double GRb = -DRb * (gb.theta[2] - theta[m]) / h_;
    ledger.left[2] += 0.5 * dt * (GLa + GLb);
    ledger.right[2] += 0.5 * dt * (GRa + GRb);
  }

  Physics ph_;
  SolverConfig cfg_;
  double h_;
  double kappa_;
  int n_;
  Ghosts g0_, gh_, g1_, ga_;
  std::vector<double> pv_, pw_, pE_, sv_, sw_, sE_;
  std::vector<double> v0_, w0_, E0_, dv_, dw_, dE_;
  std::vector<double> fv_, fw_, fE_, D_;
  std::vector<double> ta_, tb_, tc_, td_, th_;
};

}  // namespace diffwave::detail
