#include "diffwave/wave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "diffwave/error.hpp"

namespace diffwave {
namespace {

struct Grid1d {
  std::vector<double> x;
  double h;
};

Grid1d make_grid(double half_width, double h) {
  const int intervals = std::max(4, static_cast<int>(std::lround(2.0 * half_width / h)));
  Grid1d g;
  g.h = 2.0 * half_width / intervals;
  g.x.resize(intervals + 1);
  for (int i = 0; i <= intervals; ++i) g.x[i] = -half_width + i * g.h;
  return g;
}

double central(const std::vector<double>& f, std::size_t i, double h) {
  return (f[i + 1] - f[i - 1]) / (2.0 * h);
}

// kappa (f_x / v)_x in conservative form with face values of v averaged.
double conduction(const std::vector<double>& f, const std::vector<double>& v, std::size_t i,
                  double h, double kappa) {
  const double right = (f[i + 1] - f[i]) / h * 2.0 / (v[i] + v[i + 1]);
  const double left = (f[i] - f[i - 1]) / h * 2.0 / (v[i] + v[i - 1]);
  return kappa * (right - left) / h;
}

}  // namespace

WaveField::WaveField(std::shared_ptr<const SelfSimilarProfile> profile, double epsilon,
                     double t_max)
    : profile_(std::move(profile)), epsilon_(epsilon) {
  if (!profile_) throw InvalidArgument("wave field needs a profile");
  if (!(epsilon_ >= 0.0 && epsilon_ <= 1.0)) {
    throw InvalidArgument("epsilon must lie in [0, 1]");
  }
  constexpr int kProbePoints = 4096;
  for (double t : {0.0, t_max}) {
    const double half = 10.0 * std::sqrt(1.0 + t);
    for (int i = 0; i < kProbePoints; ++i) {
      const double x = -half + 2.0 * half * i / (kProbePoints - 1);
      const WavePoint w = evaluate(x, t);
      if (!(w.theta_tilde > 0.0) || !(w.T.T > 0.0)) {
        throw NonPositiveTemperature(fmt::format(
            "corrected temperature {} <= 0 at x = {}, t = {}; epsilon too large", w.theta_tilde,
            x, t));
      }
    }
  }
}

WavePoint WaveField::evaluate(double x, double t) const {
  WavePoint w;
  const double kappa = this->kappa();
  const double one_t = 1.0 + t;
  const double root = std::sqrt(one_t);
  const double eta = x / root;
  const ProfileSample p = profile_eval(*profile_, eta);
  w.T.T = p.T;
  w.T.T_x = p.Tp / root;
  w.T.T_t = -0.5 * eta * p.Tp / one_t;
  w.T.T_xx = p.Tpp / one_t;
  const double T = p.T;

  w.u = 0.5 * kappa * w.T.T_x / T;
  w.u_x = 0.5 * kappa * (w.T.T_xx / T - w.T.T_x * w.T.T_x / (T * T));
  // u_t = (kappa / 2) (T_t / T)_x with T_tx = -(T' + eta T'') / (2 (1+t)^{3/2}).
  const double T_tx = -0.5 * (p.Tp + eta * p.Tpp) / (one_t * root);
  w.u_t = 0.5 * kappa * (T_tx / T - w.T.T_t * w.T.T_x / (T * T));

  const double eu = epsilon_ * w.u;
  w.theta_tilde = T - 0.5 * eu * eu;
  w.P_tilde = w.theta_tilde / T;

  const double e2 = epsilon_ * epsilon_;
  w.R1 = e2 * kappa * w.T.T_t / (2.0 * T) - e2 * w.u * w.u / (2.0 * T);
  w.R2 = e2 * kappa * w.u * w.u_x / T - e2 * w.u * w.u * w.u / (2.0 * T);
  return w;
}

BarState eval_bar(const WaveField& wave, double x, double t) {
  const WavePoint w = wave.evaluate(x, t);
  return {w.T.T, w.u, w.T.T};
}

TildeState eval_tilde(const WaveField& wave, double x, double t) {
  const WavePoint w = wave.evaluate(x, t);
  if (!(w.theta_tilde > 0.0)) {
    throw NonPositiveTemperature(
        fmt::format("corrected temperature {} <= 0 at x = {}, t = {}", w.theta_tilde, x, t));
  }
  return {w.T.T, w.u, w.theta_tilde, w.P_tilde, w.u_x, w.u_t};
}

ResidualSample residuals(const WaveField& wave, double x, double t) {
  const WavePoint w = wave.evaluate(x, t);
  return {w.R1, w.R2};
}

ApproxSystemResidual verify_approximate_system(const WaveField& wave, double half_width, double t,
                                               double h) {
  const Grid1d g = make_grid(half_width, h);
  const std::size_t n = g.x.size();
  const double e2 = wave.epsilon() * wave.epsilon();
  const double kappa = wave.kappa();

  std::vector<double> v(n), u(n), theta(n), P(n), Pu(n), R1(n), R2(n), T_t(n), u_t(n), u_x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const WavePoint w = wave.evaluate(g.x[i], t);
    v[i] = w.T.T;
    u[i] = w.u;
    theta[i] = w.theta_tilde;
    P[i] = w.P_tilde;
    Pu[i] = w.P_tilde * w.u;
    R1[i] = w.R1;
    R2[i] = w.R2;
    T_t[i] = w.T.T_t;
    u_t[i] = w.u_t;
    u_x[i] = w.u_x;
  }

  ApproxSystemResidual r;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // [theta + (eps u)^2 / 2] = T, so its t-derivative is T_t.
    r.eq1_analytic = std::max(r.eq1_analytic, std::abs(T_t[i] - u_x[i]));
    r.eq1 = std::max(r.eq1, std::abs(T_t[i] - central(u, i, g.h)));
    r.eq2 = std::max(r.eq2,
                     std::abs(e2 * u_t[i] + central(P, i, g.h) - central(R1, i, g.h)));
    r.eq3 = std::max(r.eq3, std::abs(T_t[i] + central(Pu, i, g.h) -
                                     conduction(theta, v, i, g.h, kappa) - central(R2, i, g.h)));
  }
  return r;
}

double verify_limit_identity(const WaveField& wave, double half_width, double t, double h) {
  const Grid1d g = make_grid(half_width, h);
  const std::size_t n = g.x.size();
  std::vector<double> T(n), u(n), T_t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const WavePoint w = wave.evaluate(g.x[i], t);
    T[i] = w.T.T;
    u[i] = w.u;
    T_t[i] = w.T.T_t;
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    worst = std::max(worst, std::abs(T_t[i] + central(u, i, g.h) -
                                     conduction(T, T, i, g.h, wave.kappa())));
  }
  return worst;
}

double verify_conduction_identity(const WaveField& wave, double half_width, double t, double h) {
  const Grid1d g = make_grid(half_width, h);
  const std::size_t n = g.x.size();
  std::vector<double> T(n), u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const WavePoint w = wave.evaluate(g.x[i], t);
    T[i] = w.T.T;
    u[i] = w.u;
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    worst = std::max(worst,
                     std::abs(conduction(T, T, i, g.h, wave.kappa()) - 2.0 * central(u, i, g.h)));
  }
  return worst;
}

double observed_order(double coarse, double fine, double floor) {
  if (coarse <= floor && fine <= floor) return std::numeric_limits<double>::infinity();
  if (fine <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log2(coarse / fine);
}

}  // namespace diffwave
