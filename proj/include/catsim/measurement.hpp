#pragma once

// One ancilla Ramsey cycle acting on the ensemble: the Kraus pair
//   W+ = (1-i)/sqrt2 * sin(pi/4 + gt Sx / 2)
//   W- = (1+i)/sqrt2 * sin(pi/4 - gt Sx / 2)
// Both are functions of Sx, hence diagonal in the working basis.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "catsim/spin_blocks.hpp"

namespace catsim {

enum class Outcome : int { minus = -1, plus = +1 };

inline constexpr int sign_of(Outcome o) { return static_cast<int>(o); }

struct KrausPair {
  double gt = 0.0;
  /// Per sector, the diagonal entries of W+ and W- in the Sx basis.
  std::vector<std::vector<Complex>> plus;
  std::vector<std::vector<Complex>> minus;
  /// Set when gt * N > pi/2, where several Sx values compete for the fixed point.
  bool wide_coupling = false;

  const std::vector<std::vector<Complex>>& entries(Outcome o) const {
    return o == Outcome::plus ? plus : minus;
  }
};

inline Complex kraus_plus_entry(double gt, int sx) {
  const Complex phase = Complex(1.0, -1.0) / std::numbers::sqrt2;
  return phase * std::sin(std::numbers::pi / 4.0 + 0.5 * gt * sx);
}

inline Complex kraus_minus_entry(double gt, int sx) {
  const Complex phase = Complex(1.0, 1.0) / std::numbers::sqrt2;
  return phase * std::sin(std::numbers::pi / 4.0 - 0.5 * gt * sx);
}

inline KrausPair build_kraus(const BlockBasis& basis, double gt) {
  if (!std::isfinite(gt)) throw DomainError("gt must be finite");
  KrausPair k;
  k.gt = gt;
  k.wide_coupling = std::abs(gt) * basis.particle_count() > std::numbers::pi / 2.0;
  for (const auto& s : basis.sectors()) {
    std::vector<Complex> p, m;
    p.reserve(s.dim());
    m.reserve(s.dim());
    for (int sx : s.sx_eigenvalues) {
      p.push_back(kraus_plus_entry(gt, sx));
      m.push_back(kraus_minus_entry(gt, sx));
    }
    k.plus.push_back(std::move(p));
    k.minus.push_back(std::move(m));
  }
  return k;
}

struct OutcomeProbabilities {
  double plus = 0.0;
  double minus = 0.0;

  double of(Outcome o) const { return o == Outcome::plus ? plus : minus; }
};

namespace detail {

inline double kraus_weight(const EnsembleState& state, const std::vector<std::vector<Complex>>& w) {
  double total = 0.0;
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    const auto& b = state.block(i);
    double block_sum = 0.0;
    for (Eigen::Index a = 0; a < b.rows(); ++a) block_sum += std::norm(w[i][a]) * b(a, a).real();
    total += state.basis().sector(i).weight * block_sum;
  }
  return total;
}

inline double clamp_probability(double p) {
  if (p < -1e-12 || p > 1.0 + 1e-12) {
    throw ContractViolation("outcome probability outside [0, 1]: " + std::to_string(p));
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace detail

/// Prob[sigma_2 = +-1] = Tr(W+- rho W+-^dagger).
inline OutcomeProbabilities outcome_probabilities(const EnsembleState& state,
                                                  const KrausPair& kraus) {
  if (std::abs(state.weighted_trace() - 1.0) > 1e-8) {
    throw ContractViolation("outcome_probabilities requires a normalized state");
  }
  OutcomeProbabilities p;
  p.plus = detail::clamp_probability(detail::kraus_weight(state, kraus.plus));
  p.minus = detail::clamp_probability(detail::kraus_weight(state, kraus.minus));
  return p;
}

/// In-place rho -> W rho W^dagger / Prob. Returns the outcome probability.
inline double apply_outcome_inplace(EnsembleState& state, const KrausPair& kraus, Outcome outcome) {
  const auto& w = kraus.entries(outcome);
  const double prob = detail::kraus_weight(state, w);
  if (!(prob > 1e-15)) {
    throw ImpossibleOutcome("outcome " + std::to_string(sign_of(outcome)) +
                            " has probability " + std::to_string(prob));
  }
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    auto& b = state.block(i);
    const Eigen::Map<const Eigen::VectorXcd> d(w[i].data(), static_cast<Eigen::Index>(w[i].size()));
    b = d.asDiagonal() * b * d.conjugate().asDiagonal();
    b /= prob;
  }
  return prob;
}

inline EnsembleState apply_outcome(EnsembleState state, const KrausPair& kraus, Outcome outcome) {
  apply_outcome_inplace(state, kraus, outcome);
  return state;
}

}  // namespace catsim
