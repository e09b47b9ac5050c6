#pragma once

// Total-spin sector decomposition of N spin-1/2 particles.
//
// Operators follow the Pauli-sum convention: Sz = sum_l sigma_z(l), so within a
// sector of total spin j the collective operators are 2x the usual spin-j
// matrices and the Sz / Sx spectra are {-2j, -2j+2, ..., 2j}.
//
// Every state and Kraus operator is stored in the Sx eigenbasis of each sector.
// A permutation-invariant operator acts identically on the d(N, j) copies of a
// sector, so one (2j+1)x(2j+1) block per sector is enough.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "catsim/errors.hpp"

namespace catsim {

using BigInt = boost::multiprecision::cpp_int;
using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr int kMaxParticles = 200;

/// Exact binomial coefficient; zero outside 0 <= k <= n.
inline BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt result = 1;
  for (int i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

/// Number of copies of the spin-j irrep (j = twice_j / 2) in N spin-1/2 particles.
inline BigInt sector_multiplicity(int n, int twice_j) {
  const int k = (n - twice_j) / 2;
  return binomial(n, k) - binomial(n, k - 1);
}

struct Sector {
  int twice_j = 0;
  BigInt multiplicity;
  double weight = 0.0;  // multiplicity converted to floating point
  /// Sx eigenvalues in ascending order; index a of a block row/column.
  std::vector<int> sx_eigenvalues;
  /// Columns are the Sx eigenvectors written in the Sz eigenbasis
  /// (Sz eigenvalues ascending).
  Matrix rotation_zx;
  /// Sz expressed in the Sx eigenbasis.
  Matrix sz_matrix_x;

  int dim() const { return twice_j + 1; }
  double j() const { return 0.5 * twice_j; }

  /// Row index of an Sx eigenvalue inside this sector, if it occurs here.
  std::optional<int> index_of(int sx_value) const {
    if (std::abs(sx_value) > twice_j || ((sx_value + twice_j) % 2) != 0) return std::nullopt;
    return (sx_value + twice_j) / 2;
  }
};

namespace detail {

// Sx of a spin-j sector (Pauli-sum normalization) in the Sz basis is
// J+ + J-, a symmetric tridiagonal matrix with zero diagonal.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> sx_tridiagonal(int twice_j) {
  const int dim = twice_j + 1;
  const double j = 0.5 * twice_j;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sub(std::max(dim - 1, 0));
  for (int i = 0; i + 1 < dim; ++i) {
    const double m = -j + i;
    sub(i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  return {diag, sub};
}

// Fix each eigenvector's sign so its largest-magnitude component is positive.
// Eigenvectors of Sx satisfy |v_m| = |v_-m|, so near-ties are broken by the
// lowest index to keep the basis deterministic.
inline void fix_phases(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const double largest = vectors.col(c).cwiseAbs().maxCoeff();
    Eigen::Index pick = 0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      if (std::abs(vectors(r, c)) >= largest * (1.0 - 1e-9)) {
        pick = r;
        break;
      }
    }
    if (vectors(pick, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

inline Sector make_sector(int n, int twice_j) {
  Sector s;
  s.twice_j = twice_j;
  s.multiplicity = sector_multiplicity(n, twice_j);
  s.weight = s.multiplicity.convert_to<double>();
  const int dim = twice_j + 1;
  s.sx_eigenvalues.resize(dim);
  for (int a = 0; a < dim; ++a) s.sx_eigenvalues[a] = -twice_j + 2 * a;

  auto [diag, sub] = sx_tridiagonal(twice_j);
  Eigen::MatrixXd rotation;
  if (dim == 1) {
    rotation = Eigen::MatrixXd::Ones(1, 1);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    rotation = solver.eigenvectors();
  }
  fix_phases(rotation);

  Eigen::VectorXd sz_diag(dim);
  for (int i = 0; i < dim; ++i) sz_diag(i) = -twice_j + 2 * i;
  const Eigen::MatrixXd sz_x = rotation.transpose() * sz_diag.asDiagonal() * rotation;

  s.rotation_zx = rotation.cast<Complex>();
  s.sz_matrix_x = sz_x.cast<Complex>();
  return s;
}

}  // namespace detail

/// Immutable sector decomposition for N particles. Sectors are ordered by
/// decreasing j, so sectors()[0] is the fully symmetric (Dicke) sector.
class BlockBasis {
 public:
  explicit BlockBasis(int n) : n_(n) {
    if (n < 1 || n > kMaxParticles) {
      throw ConfigError("particle count must lie in [1, " + std::to_string(kMaxParticles) +
                        "], got " + std::to_string(n));
    }
    for (int twice_j = n; twice_j >= 0; twice_j -= 2) {
      sectors_.push_back(detail::make_sector(n, twice_j));
    }
  }

  int particle_count() const { return n_; }
  std::span<const Sector> sectors() const { return sectors_; }
  const Sector& sector(std::size_t i) const { return sectors_.at(i); }
  std::size_t sector_count() const { return sectors_.size(); }
  const Sector& symmetric_sector() const { return sectors_.front(); }

  /// sum_j d(N,j) (2j+1); equals 2^N.
  BigInt total_dimension() const {
    BigInt total = 0;
    for (const auto& s : sectors_) total += s.multiplicity * s.dim();
    return total;
  }

 private:
  int n_;
  std::vector<Sector> sectors_;
};

inline std::shared_ptr<const BlockBasis> build_block_basis(int n) {
  return std::make_shared<const BlockBasis>(n);
}

/// Block-diagonal density matrix. Normalization: sum_j d(N,j) tr(block_j) = 1.
class EnsembleState {
 public:
  EnsembleState() = default;
  EnsembleState(std::shared_ptr<const BlockBasis> basis, std::vector<Matrix> blocks)
      : basis_(std::move(basis)), blocks_(std::move(blocks)) {
    if (!basis_) throw ContractViolation("EnsembleState needs a basis");
    if (blocks_.size() != basis_->sector_count()) {
      throw ContractViolation("EnsembleState: one block per sector expected");
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const int dim = basis_->sector(i).dim();
      if (blocks_[i].rows() != dim || blocks_[i].cols() != dim) {
        throw ContractViolation("EnsembleState: block size does not match sector");
      }
    }
  }

  static EnsembleState zeros(std::shared_ptr<const BlockBasis> basis) {
    std::vector<Matrix> blocks;
    for (const auto& s : basis->sectors()) blocks.push_back(Matrix::Zero(s.dim(), s.dim()));
    return EnsembleState(std::move(basis), std::move(blocks));
  }

  const BlockBasis& basis() const { return *basis_; }
  const std::shared_ptr<const BlockBasis>& basis_ptr() const { return basis_; }
  int particle_count() const { return basis_->particle_count(); }

  std::span<const Matrix> blocks() const { return blocks_; }
  std::span<Matrix> blocks() { return blocks_; }
  const Matrix& block(std::size_t i) const { return blocks_.at(i); }
  Matrix& block(std::size_t i) { return blocks_.at(i); }

  double weighted_trace() const {
    double total = 0.0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      total += basis_->sector(i).weight * blocks_[i].trace().real();
    }
    return total;
  }

  /// Rescales to unit weighted trace and returns the previous trace.
  double normalize() {
    const double t = weighted_trace();
    if (!(t > 0.0)) throw ContractViolation("cannot normalize a state with nonpositive trace");
    for (auto& b : blocks_) b /= t;
    return t;
  }

 private:
  std::shared_ptr<const BlockBasis> basis_;
  std::vector<Matrix> blocks_;
};

struct StateDiagnostics {
  double hermiticity_error = 0.0;  // max |B - B^dagger|
  double min_eigenvalue = 0.0;     // smallest eigenvalue over all blocks
  double trace_error = 0.0;        // |weighted trace - 1|
};

inline StateDiagnostics diagnose(const EnsembleState& state) {
  StateDiagnostics d;
  d.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& b : state.blocks()) {
    d.hermiticity_error = std::max(d.hermiticity_error, (b - b.adjoint()).cwiseAbs().maxCoeff());
    const Matrix h = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = std::min(d.min_eigenvalue, solver.eigenvalues().minCoeff());
  }
  d.trace_error = std::abs(state.weighted_trace() - 1.0);
  return d;
}

inline bool is_valid_state(const EnsembleState& state) {
  const auto d = diagnose(state);
  return d.hermiticity_error <= 1e-12 && d.min_eigenvalue >= -1e-10 && d.trace_error <= 1e-10;
}

/// Which initial state a run starts from.
enum class InitialCondition {
  gibbs,   ///< exp(-beta omega_p Sz)/Z, favors Sz = -N at low temperature
  all_up,  ///< the pure product state |up>^N (Sz = +N), temperature ignored
};

/// exp(-beta * omega_p * Sz) / Z, Z = (2 cosh(beta omega_p))^N, in the Sx basis.
inline EnsembleState thermal_state(std::shared_ptr<const BlockBasis> basis, double beta,
                                   double omega_p) {
  if (!(beta >= 0.0)) throw DomainError("inverse temperature must be >= 0");
  if (!std::isfinite(beta) || !std::isfinite(omega_p)) {
    throw DomainError("inverse temperature and Zeeman frequency must be finite");
  }
  const double x = beta * omega_p;
  const int n = basis->particle_count();
  // log(2 cosh x) without overflow
  const double log_z = n * (std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))));
  std::vector<Matrix> blocks;
  for (const auto& s : basis->sectors()) {
    Eigen::VectorXd pz(s.dim());
    for (int i = 0; i < s.dim(); ++i) {
      const double sz = -s.twice_j + 2 * i;
      pz(i) = std::exp(-x * sz - log_z);
    }
    const Eigen::MatrixXd r = s.rotation_zx.real();
    const Eigen::MatrixXd rho = r.transpose() * pz.asDiagonal() * r;
    blocks.push_back(rho.cast<Complex>());
  }
  return EnsembleState(std::move(basis), std::move(blocks));
}

/// The product state with every spin along +z.
inline EnsembleState all_up_state(std::shared_ptr<const BlockBasis> basis) {
  auto state = EnsembleState::zeros(basis);
  const auto& top = basis->symmetric_sector();
  const Matrix psi = top.rotation_zx.row(top.dim() - 1).adjoint();
  state.block(0) = psi * psi.adjoint();
  return state;
}

/// (|up>^N + e^{i phase} |down>^N) / sqrt(2).
inline EnsembleState ghz_state(std::shared_ptr<const BlockBasis> basis, double relative_phase = 0.0) {
  auto state = EnsembleState::zeros(basis);
  const auto& top = basis->symmetric_sector();
  const Matrix psi = (top.rotation_zx.row(top.dim() - 1).adjoint() +
                      std::exp(Complex(0.0, relative_phase)) * top.rotation_zx.row(0).adjoint()) /
                     std::sqrt(2.0);
  state.block(0) = psi * psi.adjoint();
  return state;
}

inline EnsembleState initial_state(std::shared_ptr<const BlockBasis> basis, InitialCondition ic,
                                   double beta, double omega_p) {
  return ic == InitialCondition::gibbs ? thermal_state(std::move(basis), beta, omega_p)
                                       : all_up_state(std::move(basis));
}

inline void check_sx_value(int n, int value) {
  if (std::abs(value) > n) throw DomainError("Sx eigenvalue out of range: " + std::to_string(value));
  if (((value + n) % 2) != 0) {
    throw DomainError("Sx eigenvalue " + std::to_string(value) + " has the wrong parity for N=" +
                      std::to_string(n));
  }
}

/// Symmetric Dicke state |Sx = theta>.
inline EnsembleState dicke_state(std::shared_ptr<const BlockBasis> basis, int theta) {
  check_sx_value(basis->particle_count(), theta);
  auto state = EnsembleState::zeros(basis);
  const int a = *basis->symmetric_sector().index_of(theta);
  state.block(0)(a, a) = 1.0;
  return state;
}

/// Var(Sz) of the Dicke state |Sx = xi>.
inline double dicke_variance(int n, int xi) {
  if (std::abs(xi) > n) throw DomainError("|xi| must not exceed N");
  return 0.5 * (static_cast<double>(n) * n - static_cast<double>(xi) * xi) + n;
}

/// <Sz^power> for power 1 or 2.
inline double sz_moment(const EnsembleState& state, int power) {
  double total = 0.0;
  for (std::size_t i = 0; i < state.basis().sector_count(); ++i) {
    const auto& s = state.basis().sector(i);
    const Matrix& b = state.block(i);
    if (b.size() == 0 || b.isZero(0.0)) continue;
    // Tr(A B) = sum_ij A_ji B_ij avoids a full product.
    const Matrix rhs = power == 2 ? Matrix(s.sz_matrix_x * b) : b;
    total += s.weight * s.sz_matrix_x.transpose().cwiseProduct(rhs).sum().real();
  }
  return total;
}

}  // namespace catsim
