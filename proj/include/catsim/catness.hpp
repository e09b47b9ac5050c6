#pragma once

// Catness 1/2 ||[Sz, [Sz, rho]]||_1 and related projector quantities.
//
// All functions are blockwise: the trace norm of a permutation-invariant
// operator is the multiplicity-weighted sum of the per-sector trace norms.

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Eigenvalues>

#include "catsim/spin_blocks.hpp"

namespace catsim {

using BlockMatrices = std::vector<Matrix>;

/// Per sector D = Sz^2 rho - 2 Sz rho Sz + rho Sz^2.
inline BlockMatrices double_commutator(const EnsembleState& state) {
  BlockMatrices out;
  out.reserve(state.basis().sector_count());
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    const auto& sz = state.basis().sector(i).sz_matrix_x;
    const auto& rho = state.block(i);
    const Matrix a = sz * rho;
    const Matrix left = sz * a;   // Sz^2 rho
    const Matrix mid = a * sz;    // Sz rho Sz
    Matrix d = left + left.adjoint() - 2.0 * mid;
    out.push_back(0.5 * (d + d.adjoint()));
  }
  return out;
}

/// Per sector [Sz, rho] (anti-Hermitian).
inline BlockMatrices commutator(const EnsembleState& state) {
  BlockMatrices out;
  out.reserve(state.basis().sector_count());
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    const auto& sz = state.basis().sector(i).sz_matrix_x;
    const auto& rho = state.block(i);
    out.push_back(sz * rho - rho * sz);
  }
  return out;
}

struct CatnessReport {
  int n = 0;
  double value = 0.0;
  /// d(N,j) * 1/2 ||D_j||_1 per sector, in basis order.
  std::vector<double> contributions;
};

namespace detail {

inline bool is_zero_block(const Matrix& m) { return m.cwiseAbs().maxCoeff() == 0.0; }

inline double trace_norm_hermitian(const Matrix& h) {
  if (h.rows() == 0 || is_zero_block(h)) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace detail

inline CatnessReport catness(const EnsembleState& state) {
  CatnessReport r;
  r.n = state.particle_count();
  r.contributions.reserve(state.basis().sector_count());
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    const auto& s = state.basis().sector(i);
    const auto& rho = state.block(i);
    double c = 0.0;
    if (!detail::is_zero_block(rho)) {
      const Matrix a = s.sz_matrix_x * rho;
      const Matrix left = s.sz_matrix_x * a;
      const Matrix d = left + left.adjoint() - 2.0 * (a * s.sz_matrix_x);
      c = 0.5 * s.weight * detail::trace_norm_hermitian(0.5 * (d + d.adjoint()));
    }
    r.contributions.push_back(c);
    r.value += c;
  }
  return r;
}

/// (N^2 - M^2) tanh^2(beta omega_p) + 2N: the Sx=M projector's expectation of
/// the double commutator after projecting a thermal state onto Sx = M.
inline double tr_projection_form(int n, int m_value, double beta, double omega_p) {
  check_sx_value(n, m_value);
  const double t = std::tanh(beta * omega_p);
  return (static_cast<double>(n) * n - static_cast<double>(m_value) * m_value) * t * t + 2.0 * n;
}

struct Postselection {
  EnsembleState state;
  double probability = 0.0;
};

/// Projective measurement onto the Sx = M eigenspace, post-selected and renormalized.
inline Postselection projection_postselect(const EnsembleState& state, int m_value) {
  check_sx_value(state.particle_count(), m_value);
  auto out = EnsembleState::zeros(state.basis_ptr());
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    if (auto a = state.basis().sector(i).index_of(m_value)) {
      out.block(i)(*a, *a) = state.block(i)(*a, *a);
    }
  }
  const double prob = out.weighted_trace();
  if (!(prob > 1e-15)) {
    throw ImpossibleOutcome("Sx = " + std::to_string(m_value) + " has probability " +
                            std::to_string(prob));
  }
  out.normalize();
  return {std::move(out), prob};
}

/// Orthogonal projector given blockwise in the Sx basis.
struct ProjectorSpec {
  std::shared_ptr<const BlockBasis> basis;
  std::vector<Matrix> blocks;
  std::vector<int> ranks;

  /// sum_j d(N,j) rank_j
  double weighted_rank() const {
    double r = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) r += basis->sector(i).weight * ranks[i];
    return r;
  }
};

/// sum_j d(N,j) Tr(eta_j X_j).
inline Complex projector_trace(const ProjectorSpec& eta, const BlockMatrices& x) {
  Complex total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += eta.basis->sector(i).weight * (eta.blocks[i] * x[i]).trace();
  }
  return total;
}

namespace detail {

// Projector onto the eigenvectors of each Hermitian block with eigenvalue
// above -tol (zero modes are included).
inline ProjectorSpec nonnegative_eigenspace(std::shared_ptr<const BlockBasis> basis,
                                            const BlockMatrices& h) {
  double scale = 0.0;
  for (const auto& b : h) {
    if (b.size() > 0) scale = std::max(scale, b.cwiseAbs().maxCoeff());
  }
  // The floor keeps rounding noise in a vanishing matrix from picking a subspace.
  const double tol = std::max(1e-12 * scale, 1e-13);
  ProjectorSpec p;
  p.basis = std::move(basis);
  for (const auto& b : h) {
    const Eigen::Index dim = b.rows();
    if (is_zero_block(b)) {
      p.blocks.push_back(Matrix::Identity(dim, dim));
      p.ranks.push_back(static_cast<int>(dim));
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(b);
    Matrix proj = Matrix::Zero(dim, dim);
    int rank = 0;
    for (Eigen::Index c = 0; c < dim; ++c) {
      if (solver.eigenvalues()(c) > -tol) {
        const auto v = solver.eigenvectors().col(c);
        proj += v * v.adjoint();
        ++rank;
      }
    }
    p.blocks.push_back(proj);
    p.ranks.push_back(rank);
  }
  return p;
}

}  // namespace detail

/// Projector onto the nonnegative eigenspace of D; Tr(eta D) equals the catness.
inline ProjectorSpec optimal_projector(const EnsembleState& state) {
  return detail::nonnegative_eigenspace(state.basis_ptr(), double_commutator(state));
}

/// Projector onto the nonnegative eigenspace of i[Sz, rho]; it maximizes
/// |Tr(eta [Sz, rho])| and so gives the steepest Ramsey signal at omega -> 0.
inline ProjectorSpec signal_projector(const EnsembleState& state) {
  auto c = commutator(state);
  for (auto& b : c) {
    b *= Complex(0.0, 1.0);
    b = (0.5 * (b + b.adjoint())).eval();
  }
  return detail::nonnegative_eigenspace(state.basis_ptr(), c);
}

/// Projector onto the Sx = M eigenspace.
inline ProjectorSpec sx_projector(std::shared_ptr<const BlockBasis> basis, int m_value) {
  check_sx_value(basis->particle_count(), m_value);
  ProjectorSpec p;
  p.basis = basis;
  for (const auto& s : basis->sectors()) {
    Matrix b = Matrix::Zero(s.dim(), s.dim());
    int rank = 0;
    if (auto a = s.index_of(m_value)) {
      b(*a, *a) = 1.0;
      rank = 1;
    }
    p.blocks.push_back(b);
    p.ranks.push_back(rank);
  }
  return p;
}

/// Tr(eta [Sz, [Sz, rho]]) (real for Hermitian eta).
inline double projected_double_commutator(const EnsembleState& state, const ProjectorSpec& eta) {
  return projector_trace(eta, double_commutator(state)).real();
}

/// |Tr(eta [Sz, rho])|; the trace itself is purely imaginary.
inline double q_prime(const EnsembleState& state, const ProjectorSpec& eta) {
  return std::abs(projector_trace(eta, commutator(state)));
}

}  // namespace catsim
