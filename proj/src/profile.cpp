#include "diffwave/profile.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "diffwave/error.hpp"

namespace diffwave {
namespace {

namespace odeint = boost::numeric::odeint;

// (T, g) with g = T'/T, so that T' = g T and g' = -(eta / kappa) g T.
using OdeState = std::array<double, 2>;

constexpr double kAbsTol = 1e-30;
constexpr double kRelTol = 1e-13;
constexpr int kMaxBisections = 200;
constexpr int kMaxBracketDoublings = 80;

struct SelfSimilarRhs {
  double kappa;
  void operator()(const OdeState& s, OdeState& ds, double eta) const {
    ds[0] = s[1] * s[0];
    ds[1] = -(eta / kappa) * s[1] * s[0];
  }
};

auto make_stepper() {
  return odeint::make_controlled<odeint::runge_kutta_dopri5<OdeState>>(kAbsTol, kRelTol);
}

void advance(OdeState& s, double from, double to, double kappa) {
  if (from == to) return;
  auto stepper = make_stepper();
  const double dt0 = (to > from ? 1.0 : -1.0) * std::min(1e-3, std::abs(to - from));
  odeint::integrate_adaptive(stepper, SelfSimilarRhs{kappa}, s, from, to, dt0);
}

// Limit of T as eta -> dir * infinity for the initial data (T0, g0) at eta = 0.
// Integrates in unit chunks until the remaining change in log T, estimated from
// the Gaussian tail as |g| kappa / (|eta| T), drops below double precision.
double far_limit(double T0, double g0, int dir, double kappa) {
  OdeState s{T0, g0};
  double eta = 0.0;
  const double chunk = std::sqrt(kappa);
  for (int i = 0; i < 100000; ++i) {
    const double next = eta + dir * chunk;
    advance(s, eta, next, kappa);
    eta = next;
    if (!(s[0] > 0.0) || !std::isfinite(s[0])) return s[0];
    const double remaining = std::abs(s[1]) * kappa / (std::abs(eta) * s[0]);
    if (remaining < 1e-17) break;
  }
  return s[0];
}

// Quintic Hermite interpolation from value, first and second derivative at
// both ends of an interval of width h; s in [0, 1].
double hermite5(double s, double h, double f0, double d0, double c0, double f1, double d1,
                double c1) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double s4 = s3 * s;
  const double s5 = s4 * s;
  const double h00 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  const double h10 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double h20 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
  const double h01 = 10 * s3 - 15 * s4 + 6 * s5;
  const double h11 = -4 * s3 + 7 * s4 - 3 * s5;
  const double h21 = 0.5 * (s3 - 2 * s4 + s5);
  return h00 * f0 + h10 * h * d0 + h20 * h * h * c0 + h01 * f1 + h11 * h * d1 +
         h21 * h * h * c1;
}

SelfSimilarProfile constant_profile(const ProfileParams& params) {
  const int n = params.n_nodes;
  std::vector<double> eta(n);
  for (int i = 0; i < n; ++i) {
    eta[i] = -params.eta_max + 2.0 * params.eta_max * i / (n - 1);
  }
  return SelfSimilarProfile(params, std::move(eta), std::vector<double>(n, params.theta_plus),
                            std::vector<double>(n, 0.0), params.theta_plus, 0.0);
}

}  // namespace

double ProfileParams::delta() const { return std::abs(theta_plus - theta_minus); }

void ProfileParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
  };
  require(theta_minus > 0.0 && std::isfinite(theta_minus), "theta_minus must be positive");
  require(theta_plus > 0.0 && std::isfinite(theta_plus), "theta_plus must be positive");
  require(kappa > 0.0 && std::isfinite(kappa), "kappa must be positive");
  require(eta_max > 0.0 && std::isfinite(eta_max), "eta_max must be positive");
  require(n_nodes >= 64, "n_nodes must be at least 64");
  require(tol > 0.0, "tol must be positive");
}

SelfSimilarProfile::SelfSimilarProfile(ProfileParams params, std::vector<double> eta_nodes,
                                       std::vector<double> T_values,
                                       std::vector<double> Tp_values, double shoot_param,
                                       double achieved_mismatch)
    : params_(params),
      eta_(std::move(eta_nodes)),
      T_(std::move(T_values)),
      Tp_(std::move(Tp_values)),
      shoot_param_(shoot_param),
      mismatch_(achieved_mismatch) {
  params_.validate();
  if (eta_.size() != T_.size() || eta_.size() != Tp_.size() || eta_.size() < 2) {
    throw InvalidArgument("profile arrays must have equal length >= 2");
  }
  if (!std::is_sorted(eta_.begin(), eta_.end()) ||
      std::adjacent_find(eta_.begin(), eta_.end()) != eta_.end()) {
    throw InvalidArgument("eta nodes must be strictly increasing");
  }
  for (double T : T_) {
    if (!(T > 0.0)) throw InvalidArgument("profile temperature must be positive");
  }
}

double SelfSimilarProfile::second_derivative(double eta, double T, double Tp) const {
  return Tp * Tp / T - eta * T * Tp / params_.kappa;
}

double SelfSimilarProfile::third_derivative(double eta, double T, double Tp, double Tpp) const {
  return 2.0 * Tp * Tpp / T - Tp * Tp * Tp / (T * T) -
         (T * Tp + eta * Tp * Tp + eta * T * Tpp) / params_.kappa;
}

SelfSimilarProfile solve_profile(const ProfileParams& params) {
  params.validate();
  if (params.degenerate()) return constant_profile(params);

  const double kappa = params.kappa;
  const double target = std::log(params.theta_plus / params.theta_minus);
  const double dir = target > 0 ? 1.0 : -1.0;

  // Unit problem T(0) = 1, T'(0) = c. The ratio of the far-field limits is
  // monotone in c, so c is bracketed and bisected; the left limit is then
  // matched exactly through the scaling symmetry S(eta) = mu^2 T(mu eta).
  auto log_ratio = [&](double c) {
    const double right = far_limit(1.0, c, +1, kappa);
    const double left = far_limit(1.0, c, -1, kappa);
    if (!(right > 0.0) || !(left > 0.0) || !std::isfinite(right) || !std::isfinite(left)) {
      return dir * std::numeric_limits<double>::infinity();
    }
    return std::log(right / left);
  };

  double lo = 0.0;
  double hi = dir * 0.25;
  int doublings = 0;
  while (dir * (log_ratio(hi) - target) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > kMaxBracketDoublings) {
      throw NoConvergence("shooting bracket not found");
    }
  }
  for (int it = 0; it < kMaxBisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (dir * (log_ratio(mid) - target) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double c = 0.5 * (lo + hi);
  const double left_unit = far_limit(1.0, c, -1, kappa);
  const double mu = std::sqrt(params.theta_minus / left_unit);
  const double T0 = mu * mu;
  const double g0 = mu * c;

  const int n = params.n_nodes;
  std::vector<double> eta(n), T(n), Tp(n);
  for (int i = 0; i < n; ++i) {
    eta[i] = -params.eta_max + 2.0 * params.eta_max * i / (n - 1);
  }
  // First node with eta >= 0; integrate outward from 0 in both directions.
  const int split = static_cast<int>(std::lower_bound(eta.begin(), eta.end(), 0.0) - eta.begin());
  {
    OdeState s{T0, g0};
    double at = 0.0;
    for (int i = split; i < n; ++i) {
      advance(s, at, eta[i], kappa);
      at = eta[i];
      T[i] = s[0];
      Tp[i] = s[1] * s[0];
    }
  }
  {
    OdeState s{T0, g0};
    double at = 0.0;
    for (int i = split - 1; i >= 0; --i) {
      advance(s, at, eta[i], kappa);
      at = eta[i];
      T[i] = s[0];
      Tp[i] = s[1] * s[0];
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!(dir * Tp[i] > 0.0)) {
      throw NonMonotone(fmt::format("T' changes sign at eta = {}", eta[i]));
    }
  }
  const double mismatch =
      std::max(std::abs(T.front() - params.theta_minus), std::abs(T.back() - params.theta_plus));
  if (!(mismatch <= params.tol)) {
    throw NoConvergence(fmt::format(
        "far-field mismatch {:.3e} exceeds tol {:.3e}; increase eta_max or relax tol", mismatch,
        params.tol));
  }
  // The far-field approach is monotone; undershoot here is rounding (<= mismatch).
  const double t_lo = std::min(params.theta_minus, params.theta_plus);
  const double t_hi = std::max(params.theta_minus, params.theta_plus);
  for (double& x : T) x = std::clamp(x, t_lo, t_hi);
  return SelfSimilarProfile(params, std::move(eta), std::move(T), std::move(Tp), T0, mismatch);
}

ProfileSample profile_eval(const SelfSimilarProfile& profile, double eta) {
  const auto& nodes = profile.eta_nodes();
  const auto& params = profile.params();
  if (profile.constant()) return {params.theta_plus, 0.0, 0.0};
  if (eta < nodes.front()) return {params.theta_minus, 0.0, 0.0};
  if (eta > nodes.back()) return {params.theta_plus, 0.0, 0.0};

  auto it = std::upper_bound(nodes.begin(), nodes.end(), eta);
  std::size_t k = (it == nodes.begin()) ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  k = std::min(k, nodes.size() - 2);

  const auto& T = profile.T_values();
  const auto& Tp = profile.Tp_values();
  const double h = nodes[k + 1] - nodes[k];
  const double s = (eta - nodes[k]) / h;
  const double e0 = nodes[k], e1 = nodes[k + 1];
  const double Tpp0 = profile.second_derivative(e0, T[k], Tp[k]);
  const double Tpp1 = profile.second_derivative(e1, T[k + 1], Tp[k + 1]);
  const double Tppp0 = profile.third_derivative(e0, T[k], Tp[k], Tpp0);
  const double Tppp1 = profile.third_derivative(e1, T[k + 1], Tp[k + 1], Tpp1);

  ProfileSample out;
  out.T = hermite5(s, h, T[k], Tp[k], Tpp0, T[k + 1], Tp[k + 1], Tpp1);
  out.Tp = hermite5(s, h, Tp[k], Tpp0, Tppp0, Tp[k + 1], Tpp1, Tppp1);
  out.Tpp = profile.second_derivative(eta, out.T, out.Tp);
  return out;
}

SpacetimeSample spacetime_fields(const SelfSimilarProfile& profile, double x, double t) {
  const double one_t = 1.0 + t;
  const double root = std::sqrt(one_t);
  const double eta = x / root;
  const ProfileSample p = profile_eval(profile, eta);
  SpacetimeSample out;
  out.T = p.T;
  out.T_x = p.Tp / root;
  out.T_t = -0.5 * eta * p.Tp / one_t;
  out.T_xx = p.Tpp / one_t;
  return out;
}

double TailReport::relative_error_plus() const {
  return std::abs(slope_plus - theory_plus) / std::abs(theory_plus);
}

double TailReport::relative_error_minus() const {
  return std::abs(slope_minus - theory_minus) / std::abs(theory_minus);
}

TailReport verify_tail(const SelfSimilarProfile& profile) {
  if (profile.constant()) {
    throw InsufficientTail("constant profile has no tail");
  }
  const auto& p = profile.params();
  const auto& eta = profile.eta_nodes();
  const auto& Tp = profile.Tp_values();
  const double delta = profile.delta();
  if (!(std::abs(Tp.front()) < 1e-3 * delta && std::abs(Tp.back()) < 1e-3 * delta)) {
    throw InsufficientTail("eta_max too small: |T'(eta_max)| >= 1e-3 delta");
  }

  // Fits log|T'| = a + slope * eta^2 on nodes with lo <= |eta| <= hi.
  auto fit = [&](int side, double& slope, double& residual, int& count) {
    const double lo = 0.5 * p.eta_max;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      const double e = side * eta[i];
      if (e >= lo && e <= p.eta_max && Tp[i] != 0.0) {
        pts.emplace_back(eta[i] * eta[i], std::log(std::abs(Tp[i])));
      }
    }
    count = static_cast<int>(pts.size());
    if (count < 16) {
      throw InsufficientTail(fmt::format("only {} nodes in tail window", count));
    }
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = count;
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss = 0.0;
    for (auto [x, y] : pts) {
      const double r = y - intercept - slope * x;
      ss += r * r;
    }
    residual = std::sqrt(ss / n);
  };

  TailReport out;
  fit(+1, out.slope_plus, out.residual_plus, out.nodes_plus);
  fit(-1, out.slope_minus, out.residual_minus, out.nodes_minus);
  out.theory_plus = -p.theta_plus / (2.0 * p.kappa);
  out.theory_minus = -p.theta_minus / (2.0 * p.kappa);
  return out;
}

bool SlopeBoundReport::bounded() const {
  return samples > 0 && std::isfinite(r_min) && std::isfinite(r_max) && r_min > 0.0 &&
         r_min <= r_max;
}

SlopeBoundReport verify_slope_bounds(const SelfSimilarProfile& profile, double eta_lo,
                                     double eta_hi) {
  if (profile.constant()) {
    throw InvalidArgument("slope bounds need theta_plus != theta_minus");
  }
  if (eta_hi < eta_lo) std::swap(eta_lo, eta_hi);
  const auto& p = profile.params();
  SlopeBoundReport out;
  out.eta_lo = eta_lo;
  out.eta_hi = eta_hi;
  out.sign = p.theta_plus > p.theta_minus ? 1 : -1;
  out.r_min = std::numeric_limits<double>::infinity();
  out.r_max = -std::numeric_limits<double>::infinity();
  const double delta = profile.delta();
  auto take = [&](double eta) {
    const double r = out.sign * profile_eval(profile, eta).Tp / delta;
    out.r_min = std::min(out.r_min, r);
    out.r_max = std::max(out.r_max, r);
    ++out.samples;
  };
  take(eta_lo);
  for (double e : profile.eta_nodes()) {
    if (e > eta_lo && e < eta_hi) take(e);
  }
  if (eta_hi > eta_lo) take(eta_hi);
  return out;
}

double ode_residual_max(const SelfSimilarProfile& profile) {
  const auto& eta = profile.eta_nodes();
  const auto& T = profile.T_values();
  const auto& Tp = profile.Tp_values();
  const double kappa = profile.params().kappa;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < eta.size(); ++i) {
    const double dq = (Tp[i + 1] / T[i + 1] - Tp[i - 1] / T[i - 1]) / (eta[i + 1] - eta[i - 1]);
    worst = std::max(worst, std::abs(eta[i] / kappa * Tp[i] + dq));
  }
  return worst;
}

}  // namespace diffwave
