#pragma once

// Generators and small helpers shared by the unit tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "catsim/measurement.hpp"
#include "catsim/spin_blocks.hpp"

namespace testing_support {

using catsim::Complex;
using catsim::Matrix;

inline std::mt19937_64& rng() {
  static std::mt19937_64 engine(0xC0FFEEULL);
  return engine;
}

inline double uniform(double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

inline Matrix random_complex(Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(g(rng()), g(rng()));
  }
  return m;
}

/// Random mixed state: per sector A A^dagger with a random rank, some sectors
/// left empty, then normalized.
inline catsim::EnsembleState random_state(std::shared_ptr<const catsim::BlockBasis> basis) {
  std::vector<Matrix> blocks;
  bool any = false;
  for (const auto& s : basis->sectors()) {
    if (uniform() < 0.25 && &s != &basis->sectors().back()) {
      blocks.push_back(Matrix::Zero(s.dim(), s.dim()));
      continue;
    }
    const Matrix a = random_complex(s.dim(), uniform_int(1, s.dim()));
    blocks.push_back(a * a.adjoint());
    any = true;
  }
  if (!any) blocks.back() = Matrix::Identity(blocks.back().rows(), blocks.back().cols());
  catsim::EnsembleState state(basis, std::move(blocks));
  state.normalize();
  return state;
}

/// Random pure state in the symmetric sector.
inline catsim::EnsembleState random_symmetric_pure(std::shared_ptr<const catsim::BlockBasis> basis) {
  auto state = catsim::EnsembleState::zeros(basis);
  Matrix psi = random_complex(basis->symmetric_sector().dim(), 1);
  psi /= psi.norm();
  state.block(0) = psi * psi.adjoint();
  return state;
}

inline std::vector<catsim::Outcome> random_script(int steps) {
  std::vector<catsim::Outcome> out;
  for (int i = 0; i < steps; ++i) {
    out.push_back(uniform() < 0.5 ? catsim::Outcome::plus : catsim::Outcome::minus);
  }
  return out;
}

inline double max_block_difference(const catsim::EnsembleState& a, const catsim::EnsembleState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.basis().sector_count(); ++i) {
    d = std::max(d, (a.block(i) - b.block(i)).cwiseAbs().maxCoeff());
  }
  return d;
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testing_support
