#pragma once

// Brute-force reference implementation on the full 2^N Hilbert space.
//
// Nothing here uses the sector decomposition except embed() /
// sector_frames(), which build the sector copies independently (highest-weight
// vectors plus lowering) to map block states into the dense space. Computational
// basis: bit l of the index set means spin l points down (sigma_z = -1).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "catsim/catness.hpp"
#include "catsim/measurement.hpp"
#include "catsim/rng.hpp"
#include "catsim/spin_blocks.hpp"
#include "catsim/trajectory.hpp"

namespace catsim::oracle {

inline constexpr int kMaxDenseParticles = 10;

struct DenseState {
  int n = 0;
  Matrix rho;
};

struct DenseStep {
  DenseState state;
  double probability = 0.0;
};

inline void check_size(int n) {
  if (n < 1 || n > kMaxDenseParticles) {
    throw ConfigError("dense oracle supports 1 <= N <= " + std::to_string(kMaxDenseParticles));
  }
}

inline Eigen::Index dimension(int n) { return Eigen::Index{1} << n; }

inline int sz_value(int n, Eigen::Index index) {
  return n - 2 * std::popcount(static_cast<unsigned>(index));
}

inline Matrix sz(int n) {
  check_size(n);
  Matrix out = Matrix::Zero(dimension(n), dimension(n));
  for (Eigen::Index i = 0; i < dimension(n); ++i) out(i, i) = sz_value(n, i);
  return out;
}

inline Matrix sx(int n) {
  check_size(n);
  Matrix out = Matrix::Zero(dimension(n), dimension(n));
  for (Eigen::Index i = 0; i < dimension(n); ++i) {
    for (int l = 0; l < n; ++l) out(i ^ (Eigen::Index{1} << l), i) += 1.0;
  }
  return out;
}

/// S+ = sum_l (sigma_x + i sigma_y)(l) = sum_l 2 |up><down|_l.
inline Matrix splus(int n) {
  check_size(n);
  Matrix out = Matrix::Zero(dimension(n), dimension(n));
  for (Eigen::Index i = 0; i < dimension(n); ++i) {
    for (int l = 0; l < n; ++l) {
      const Eigen::Index bit = Eigen::Index{1} << l;
      if (i & bit) out(i & ~bit, i) += 2.0;
    }
  }
  return out;
}

inline Matrix sminus(int n) { return splus(n).adjoint(); }

/// H^(x)N; maps sigma_z eigenvectors onto sigma_x eigenvectors.
inline Matrix hadamard(int n) {
  check_size(n);
  const double scale = std::pow(2.0, -0.5 * n);
  Matrix out(dimension(n), dimension(n));
  for (Eigen::Index i = 0; i < dimension(n); ++i) {
    for (Eigen::Index j = 0; j < dimension(n); ++j) {
      out(i, j) = (std::popcount(static_cast<unsigned>(i & j)) % 2 ? -scale : scale);
    }
  }
  return out;
}

/// f(Sx) built as H diag(f(s)) H.
template <typename F>
Matrix function_of_sx(int n, F&& f) {
  const Matrix h = hadamard(n);
  Eigen::VectorXcd d(dimension(n));
  for (Eigen::Index i = 0; i < dimension(n); ++i) d(i) = f(sz_value(n, i));
  return h * d.asDiagonal() * h;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// (exp(-beta omega sigma_z) / (2 cosh(beta omega)))^(x)N.
inline DenseState dense_thermal(int n, double beta, double omega_p) {
  check_size(n);
  if (!(beta >= 0.0)) throw DomainError("inverse temperature must be >= 0");
  const double x = beta * omega_p;
  Matrix single = Matrix::Zero(2, 2);
  single(0, 0) = 1.0 / (1.0 + std::exp(2.0 * x));   // up:   e^{-x} / 2cosh x
  single(1, 1) = 1.0 / (1.0 + std::exp(-2.0 * x));  // down: e^{+x} / 2cosh x
  Matrix rho = single;
  for (int l = 1; l < n; ++l) rho = kron(single, rho);
  return {n, rho};
}

inline DenseState dense_all_up(int n) {
  check_size(n);
  Matrix rho = Matrix::Zero(dimension(n), dimension(n));
  rho(0, 0) = 1.0;
  return {n, rho};
}

struct DenseKraus {
  Matrix plus;
  Matrix minus;
};

inline DenseKraus dense_kraus_ops(int n, double gt) {
  return {function_of_sx(n, [gt](int s) { return kraus_plus_entry(gt, s); }),
          function_of_sx(n, [gt](int s) { return kraus_minus_entry(gt, s); })};
}

inline DenseStep dense_kraus_step(const DenseState& state, const DenseKraus& ops, Outcome outcome) {
  const Matrix& w = outcome == Outcome::plus ? ops.plus : ops.minus;
  Matrix next = w * state.rho * w.adjoint();
  const double prob = next.trace().real();
  if (!(prob > 1e-15)) throw ImpossibleOutcome("dense oracle: outcome has zero probability");
  next /= prob;
  return {{state.n, next}, prob};
}

inline DenseStep dense_kraus_step(const DenseState& state, double gt, Outcome outcome) {
  return dense_kraus_step(state, dense_kraus_ops(state.n, gt), outcome);
}

inline Matrix dense_double_commutator(const DenseState& state) {
  const Matrix z = sz(state.n);
  const Matrix c = z * state.rho - state.rho * z;
  return z * c - c * z;
}

inline double trace_norm(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (hermitian + hermitian.adjoint()),
                                                Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().sum();
}

inline double dense_catness(const DenseState& state) {
  return 0.5 * trace_norm(dense_double_commutator(state));
}

inline Matrix dense_sx_projector(int n, int m_value) {
  check_sx_value(n, m_value);
  return function_of_sx(n, [m_value](int s) { return Complex(s == m_value ? 1.0 : 0.0); });
}

inline DenseStep dense_projection(const DenseState& state, int m_value) {
  const Matrix p = dense_sx_projector(state.n, m_value);
  Matrix next = p * state.rho * p;
  const double prob = next.trace().real();
  if (!(prob > 1e-15)) throw ImpossibleOutcome("dense oracle: projection has zero probability");
  next /= prob;
  return {{state.n, next}, prob};
}

/// |Tr(eta [Sz, rho])|
inline double dense_q_prime(const DenseState& state, const Matrix& eta) {
  const Matrix z = sz(state.n);
  return std::abs((eta * (z * state.rho - state.rho * z)).trace());
}

/// Tr(eta exp(-i omega t Sz) rho exp(i omega t Sz)).
inline double dense_ramsey_signal(const DenseState& state, const Matrix& eta, double omega,
                                  double t_int) {
  Eigen::VectorXcd phases(dimension(state.n));
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::exp(Complex(0.0, -omega * t_int * sz_value(state.n, i)));
  }
  const Matrix evolved = phases.asDiagonal() * state.rho * phases.conjugate().asDiagonal();
  return (eta * evolved).trace().real();
}

// ---------------------------------------------------------------------------
// Sector copies inside the dense space

/// Orthonormal columns spanning every copy of one sector, in the same Sx
/// eigenbasis as the block representation.
struct SectorFrame {
  int twice_j = 0;
  std::vector<Matrix> copies;  // each 2^N x (2j+1)
};

inline std::vector<SectorFrame> sector_frames(const BlockBasis& basis) {
  const int n = basis.particle_count();
  check_size(n);
  const Matrix lower = sminus(n);
  const Matrix raise = splus(n);
  std::vector<SectorFrame> frames;
  for (const auto& sector : basis.sectors()) {
    SectorFrame frame;
    frame.twice_j = sector.twice_j;
    const int ups = (n + sector.twice_j) / 2;
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < dimension(n); ++i) {
      if (n - std::popcount(static_cast<unsigned>(i)) == ups) members.push_back(i);
    }
    // Highest-weight vectors: the kernel of S+ restricted to Sz = 2j.
    Matrix restricted(dimension(n), static_cast<Eigen::Index>(members.size()));
    for (std::size_t c = 0; c < members.size(); ++c) restricted.col(c) = raise.col(members[c]);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(restricted.adjoint() * restricted);
    for (Eigen::Index c = 0; c < solver.eigenvalues().size(); ++c) {
      if (solver.eigenvalues()(c) > 1e-8) continue;
      Matrix z_frame = Matrix::Zero(dimension(n), sector.dim());
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension(n));
      for (std::size_t r = 0; r < members.size(); ++r) v(members[r]) = solver.eigenvectors()(r, c);
      for (int idx = sector.dim() - 1; idx >= 0; --idx) {
        z_frame.col(idx) = v;
        if (idx > 0) {
          v = lower * v;
          v /= v.norm();
        }
      }
      frame.copies.push_back(z_frame * sector.rotation_zx);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

/// Dense operator sum_j sum_copies X_c B_j X_c^dagger for block matrices B_j.
inline Matrix embed_blocks(const BlockBasis& basis, std::span<const Matrix> blocks,
                           const std::vector<SectorFrame>& frames) {
  const int n = basis.particle_count();
  Matrix out = Matrix::Zero(dimension(n), dimension(n));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (const auto& x : frames[i].copies) out += x * blocks[i] * x.adjoint();
  }
  return out;
}

inline DenseState embed(const EnsembleState& state, const std::vector<SectorFrame>& frames) {
  return {state.particle_count(), embed_blocks(state.basis(), state.blocks(), frames)};
}

inline DenseState embed(const EnsembleState& state) {
  const auto frames = sector_frames(state.basis());
  return {state.particle_count(), embed_blocks(state.basis(), state.blocks(), frames)};
}

inline Matrix embed(const ProjectorSpec& eta) {
  const auto frames = sector_frames(*eta.basis);
  return embed_blocks(*eta.basis, eta.blocks, frames);
}

// ---------------------------------------------------------------------------
// Lockstep equivalence

struct LockstepReport {
  int n = 0;
  std::uint64_t trajectory_index = 0;
  int steps = 0;
  double state_error = 0.0;        // max |block embedded - dense| over all steps
  double probability_error = 0.0;  // max |p_block - p_dense|
  double catness_error = 0.0;      // max |catness_block - catness_dense|
  double lazy_state_error = 0.0;   // trajectory engine vs stepwise update at the end

  bool passed(double state_tol = 1e-10, double prob_tol = 1e-12, double catness_tol = 1e-10) const {
    return state_error <= state_tol && lazy_state_error <= state_tol &&
           probability_error <= prob_tol && catness_error <= catness_tol;
  }
};

inline double max_abs_difference(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Runs the block update, the trajectory engine and the dense oracle on one
/// shared outcome script. Outcomes are drawn from the block probabilities
/// with trajectory stream `index` of `config.master_seed`.
inline LockstepReport lockstep_check(const TrajectoryConfig& config, std::uint64_t index) {
  const TrajectoryContext ctx(config);
  const int n = config.n;
  const auto frames = sector_frames(*ctx.basis);
  const DenseKraus ops = dense_kraus_ops(n, config.gt);
  DenseState dense = config.initial == InitialCondition::gibbs
                         ? dense_thermal(n, config.beta, config.omega_p)
                         : dense_all_up(n);
  EnsembleState block = ctx.initial;
  TrajectoryState lazy(ctx.initial, ctx.kraus);
  RandomStream stream(config.master_seed, index);

  LockstepReport r;
  r.n = n;
  r.trajectory_index = index;
  r.steps = config.m;
  auto compare = [&] {
    r.state_error = std::max(r.state_error, max_abs_difference(embed(block, frames).rho, dense.rho));
    r.catness_error =
        std::max(r.catness_error, std::abs(catness(block).value - dense_catness(dense)));
  };
  compare();
  for (int step = 0; step < config.m; ++step) {
    const auto p = outcome_probabilities(block, ctx.kraus);
    const Outcome o = sample_outcome(p.plus, stream);
    const double p_block = apply_outcome_inplace(block, ctx.kraus, o);
    const auto next = dense_kraus_step(dense, ops, o);
    r.probability_error = std::max(r.probability_error, std::abs(p_block - next.probability));
    r.probability_error =
        std::max(r.probability_error, std::abs(lazy.probabilities().of(o) - next.probability));
    dense = next.state;
    lazy.apply(o);
    compare();
  }
  const auto lazy_state = lazy.materialize();
  for (std::size_t i = 0; i < block.basis().sector_count(); ++i) {
    r.lazy_state_error =
        std::max(r.lazy_state_error, max_abs_difference(lazy_state.block(i), block.block(i)));
  }
  return r;
}

}  // namespace catsim::oracle
