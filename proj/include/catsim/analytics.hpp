#pragma once

// Closed-form results for the repeated-measurement protocol and the
// statistics applied to simulation output.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "catsim/catness.hpp"
#include "catsim/spin_blocks.hpp"

namespace catsim {

namespace detail {

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// p * log(x) with the convention 0^0 = 1.
inline double xlogy(double p, double x) {
  if (p == 0.0) return 0.0;
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return p * std::log(x);
}

inline double log_sum_exp(const std::vector<double>& v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (top == -std::numeric_limits<double>::infinity()) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trajectory statistics for the all-up initial state

struct PkDistribution {
  int n = 0;
  int m = 0;
  double gt = 0.0;
  std::vector<double> p;  // p[k], k = 0..m

  double total() const {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
  }
};

/// Probability that W+ fires k times in m measurements on |up>^N:
///   p(k) = C(m,k) 2^-N sum_r C(N,r) ((1+sin(gt(2r-N)))/2)^k ((1-sin(gt(2r-N)))/2)^(m-k)
inline PkDistribution pk_distribution(int n, int m, double gt) {
  if (n < 1) throw DomainError("N must be positive");
  if (m < 0) throw DomainError("m must be >= 0");
  PkDistribution d;
  d.n = n;
  d.m = m;
  d.gt = gt;
  d.p.resize(m + 1);
  std::vector<double> prob_up(n + 1), prob_down(n + 1), log_weight(n + 1);
  for (int r = 0; r <= n; ++r) {
    const double s = std::sin(gt * (2 * r - n));
    prob_up[r] = (1.0 + s) / 2.0;
    prob_down[r] = (1.0 - s) / 2.0;
    log_weight[r] = detail::log_binomial(n, r) - n * std::numbers::ln2;
  }
  std::vector<double> terms(n + 1);
  for (int k = 0; k <= m; ++k) {
    for (int r = 0; r <= n; ++r) {
      terms[r] = log_weight[r] + detail::xlogy(k, prob_up[r]) + detail::xlogy(m - k, prob_down[r]);
    }
    d.p[k] = std::exp(detail::log_binomial(m, k) + detail::log_sum_exp(terms));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Fixed point of the repeated measurement

struct ConvergencePrediction {
  bool wide_regime = false;        // gt * N > pi / 2
  std::vector<double> candidates;  // stationary Sx values theta (real-valued)
  std::vector<int> eigenvalues;    // predicted Sx eigenvalue(s), ascending
  bool degenerate = false;         // two admissible eigenvalues tie
  double distance = 0.0;           // rounding distance of the selected candidate

  int L() const { return eigenvalues.front(); }
};

/// Sx eigenvalue the state converges to after k "+" outcomes out of m.
/// Rounding is to the nearest eigenvalue with the parity of N; exact ties
/// return both neighbours with `degenerate` set.
inline ConvergencePrediction predict_convergence(int n, int m, int k, double gt) {
  if (n < 1) throw DomainError("N must be positive");
  if (m < 1) throw DomainError("m must be >= 1");
  if (k < 0 || k > m) throw DomainError("k/m must lie in [0, 1]");
  if (!(gt > 0.0) || !std::isfinite(gt)) throw DomainError("gt must be positive and finite");
  constexpr double kTieTolerance = 1e-9;
  const double x = std::asin(std::clamp(2.0 * k / m - 1.0, -1.0, 1.0));
  const double reach = gt * n;

  ConvergencePrediction pred;
  pred.wide_regime = reach > std::numbers::pi / 2.0;
  if (!pred.wide_regime) {
    pred.candidates.push_back(x / gt);
  } else {
    const double two_pi = 2.0 * std::numbers::pi;
    for (double base : {x, std::numbers::pi - x}) {
      const auto lo = static_cast<long>(std::ceil((-reach - base) / two_pi - 1e-12));
      const auto hi = static_cast<long>(std::floor((reach - base) / two_pi + 1e-12));
      for (long j = lo; j <= hi; ++j) {
        const double angle = base + two_pi * static_cast<double>(j);
        if (angle < -reach - 1e-12 || angle > reach + 1e-12) continue;
        pred.candidates.push_back(angle / gt);
      }
    }
    std::sort(pred.candidates.begin(), pred.candidates.end());
    pred.candidates.erase(std::unique(pred.candidates.begin(), pred.candidates.end(),
                                      [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                          pred.candidates.end());
  }

  struct Option {
    int value;
    double h;
  };
  std::vector<Option> options;
  for (double theta : pred.candidates) {
    const double pos = (theta + n) / 2.0;  // index of the eigenvalue 2a - N
    const int lower = std::clamp(static_cast<int>(std::floor(pos)), 0, n);
    const int upper = std::clamp(lower + 1, 0, n);
    for (int a : {lower, upper}) {
      const int value = 2 * a - n;
      options.push_back({value, std::abs(theta - value)});
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : options) best = std::min(best, o.h);
  for (const auto& o : options) {
    if (o.h <= best + kTieTolerance) pred.eigenvalues.push_back(o.value);
  }
  std::sort(pred.eigenvalues.begin(), pred.eigenvalues.end());
  pred.eigenvalues.erase(std::unique(pred.eigenvalues.begin(), pred.eigenvalues.end()),
                         pred.eigenvalues.end());
  pred.degenerate = pred.eigenvalues.size() > 1;
  pred.distance = best;
  return pred;
}

/// |f| at any stationary point sin(x) = 2k/m - 1:  sqrt((m-k)^(m-k) k^k / m^m).
inline double fixed_point_magnitude(int m, int k) {
  if (m < 0 || k < 0 || k > m) throw DomainError("need 0 <= k <= m");
  const double log_value =
      0.5 * (detail::xlogy(m - k, m - k) + detail::xlogy(k, k) - detail::xlogy(m, m));
  return std::exp(log_value);
}

// ---------------------------------------------------------------------------
// Single projective measurement references (zero temperature)

struct ReferenceTerm {
  int m_value = 0;
  double probability = 0.0;  // C(N, (N+M)/2) / 2^N
  double trace_norm = 0.0;   // ||[Sz,[Sz, rho_M]]||_1 of the normalized post-state
  double trace_form = 0.0;   // N^2 - M^2 + 2N
};

/// Per-outcome terms of the projective-measurement references on |up>^N.
inline std::vector<ReferenceTerm> reference_terms(int n, int dense_limit = kMaxParticles) {
  if (n > dense_limit) throw ConfigError("N exceeds the configured trace-norm limit");
  const auto basis = build_block_basis(n);
  std::vector<ReferenceTerm> terms;
  for (int mv = -n; mv <= n; mv += 2) {
    ReferenceTerm t;
    t.m_value = mv;
    t.probability = std::exp(detail::log_binomial(n, (n + mv) / 2) - n * std::numbers::ln2);
    // P(M)|up>^N normalized is the Dicke state |Sx = M>; its outcome probability
    // underflows the post-selection guard at large N, so build it directly.
    t.trace_norm = 2.0 * catness(dicke_state(basis, mv)).value;
    t.trace_form = static_cast<double>(n) * n - static_cast<double>(mv) * mv + 2.0 * n;
    terms.push_back(t);
  }
  return terms;
}

/// sum_M P(M) ||[Sz,[Sz, rho_M]]||_1, literal (no factor 1/2).
inline double reference_ideal(int n, int dense_limit = kMaxParticles) {
  double total = 0.0;
  for (const auto& t : reference_terms(n, dense_limit)) total += t.probability * t.trace_norm;
  return total;
}

/// sum_M P(M) (N^2 - M^2 + 2N), which equals N^2 + N.
inline double reference_closed_form(int n) {
  if (n < 1) throw DomainError("N must be positive");
  double total = 0.0;
  for (int mv = -n; mv <= n; mv += 2) {
    const double p = std::exp(detail::log_binomial(n, (n + mv) / 2) - n * std::numbers::ln2);
    total += p * (static_cast<double>(n) * n - static_cast<double>(mv) * mv + 2.0 * n);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Scaling fit

struct ScalingPoint {
  double n = 0.0;
  double value = 0.0;
  double standard_error = 0.0;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double q = 0.0;  // slope of ln(value) against ln(N)
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Unweighted least squares on (ln N, ln value).
inline ScalingFit fit_scaling(std::vector<ScalingPoint> points) {
  if (points.size() < 2) throw DomainError("fit_scaling needs at least two points");
  const double count = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    if (!(p.value > 0.0) || !(p.n > 0.0)) throw DomainError("fit_scaling needs positive data");
    mx += std::log(p.n);
    my += std::log(p.value);
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.n) - mx;
    const double dy = std::log(p.value) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw DomainError("fit_scaling needs at least two distinct N");
  ScalingFit fit;
  fit.q = sxy / sxx;
  fit.intercept = my - fit.q * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = std::move(points);
  return fit;
}

// ---------------------------------------------------------------------------
// Ramsey sensitivity

struct SensitivityEstimate {
  double probability = 0.0;
  double dp_domega = 0.0;
  double t_int = 0.0;
  double total_time = 0.0;
  double delta_omega = 0.0;
};

/// delta omega = sqrt(P(1-P)) / |dP/domega| / sqrt(T / t_int).
inline SensitivityEstimate ramsey_uncertainty(double p, double dp_domega, double t_int,
                                              double total_time) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("degenerate probability: P must lie in (0, 1)");
  if (dp_domega == 0.0 || !std::isfinite(dp_domega)) throw DomainError("dP/domega must be nonzero");
  if (!(t_int > 0.0) || !(total_time >= t_int)) throw DomainError("need 0 < t_int <= T");
  SensitivityEstimate e;
  e.probability = p;
  e.dp_domega = dp_domega;
  e.t_int = t_int;
  e.total_time = total_time;
  e.delta_omega = std::sqrt(p * (1.0 - p)) / std::abs(dp_domega) / std::sqrt(total_time / t_int);
  return e;
}

/// |dP/domega| as omega -> 0:  t_int |Tr(eta [Sz, rho])|.
inline double derivative_small_omega(const EnsembleState& state, const ProjectorSpec& eta,
                                     double t_int) {
  return t_int * q_prime(state, eta);
}

/// P(omega) = Tr(eta exp(-i omega t Sz) rho exp(i omega t Sz)), evaluated by
/// rotating each block to the Sz basis.
inline double ramsey_signal(const EnsembleState& state, const ProjectorSpec& eta, double omega,
                            double t_int) {
  Complex total = 0.0;
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    const auto& s = state.basis().sector(i);
    Eigen::VectorXcd phases(s.dim());
    for (int a = 0; a < s.dim(); ++a) {
      phases(a) = std::exp(Complex(0.0, -omega * t_int * (-s.twice_j + 2 * a)));
    }
    const Matrix u = s.rotation_zx.adjoint() * phases.asDiagonal() * s.rotation_zx;
    total += s.weight * (eta.blocks[i] * u * state.block(i) * u.adjoint()).trace();
  }
  return total.real();
}

}  // namespace catsim
