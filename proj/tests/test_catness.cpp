#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "catsim/analytics.hpp"
#include "catsim/catness.hpp"
#include "catsim/oracle.hpp"
#include "support.hpp"

using namespace catsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
namespace ts = testing_support;

namespace {

// e^{-i phi Sz} rho e^{i phi Sz}, computed in the Sz basis of each sector.
EnsembleState rotate_about_z(const EnsembleState& rho, double phi) {
  auto out = rho;
  for (std::size_t i = 0; i < rho.basis().sector_count(); ++i) {
    const auto& s = rho.basis().sector(i);
    Eigen::VectorXcd ph(s.dim());
    for (int a = 0; a < s.dim(); ++a) ph(a) = std::exp(Complex(0.0, -phi * (-s.twice_j + 2 * a)));
    const Matrix u = s.rotation_zx.adjoint() * ph.asDiagonal() * s.rotation_zx;
    out.block(i) = u * rho.block(i) * u.adjoint();
  }
  return out;
}

// Sz -> -Sz: conjugation by the spin flip prod sigma_x = exp(i pi Sx / 2) up to phase.
EnsembleState flip(const EnsembleState& rho) {
  auto out = rho;
  for (std::size_t i = 0; i < rho.basis().sector_count(); ++i) {
    const auto& s = rho.basis().sector(i);
    Eigen::VectorXcd ph(s.dim());
    for (int a = 0; a < s.dim(); ++a) ph(a) = std::exp(Complex(0.0, std::numbers::pi / 2 * s.sx_eigenvalues[a]));
    out.block(i) = ph.asDiagonal() * rho.block(i) * ph.conjugate().asDiagonal();
  }
  return out;
}

}  // namespace

TEST_CASE("Sz-diagonal states have zero catness", "[catness]") {
  for (int n : {1, 4, 9, 40}) {
    const auto basis = build_block_basis(n);
    for (double beta : {0.0, 0.3, 10.0}) {
      const auto rho = thermal_state(basis, beta, 0.5);
      CHECK(catness(rho).value <= 1e-10 * n * n);
      for (const auto& d : double_commutator(rho)) CHECK(ts::max_abs(d) <= 1e-10 * n * n);
    }
    CHECK(catness(all_up_state(basis)).value <= 1e-10 * n * n);
  }
}

TEST_CASE("GHZ states", "[catness]") {
  const auto basis = build_block_basis(3);
  const auto ghz = ghz_state(basis);
  CHECK_THAT(catness(ghz).value, WithinAbs(18.0, 1e-10));

  // Dense GHZ built without the block code.
  oracle::DenseState dense{3, Matrix::Zero(8, 8)};
  dense.rho(0, 0) = dense.rho(0, 7) = dense.rho(7, 0) = dense.rho(7, 7) = 0.5;
  CHECK_THAT(oracle::dense_catness(dense), WithinAbs(18.0, 1e-10));
  const Matrix d = oracle::dense_double_commutator(dense);
  CHECK_THAT(d(0, 7).real(), WithinAbs(36.0 * 0.5, 1e-12));
  CHECK_THAT(d(7, 0).real(), WithinAbs(36.0 * 0.5, 1e-12));
  CHECK(std::abs(d(0, 0)) + std::abs(d(7, 7)) <= 1e-12);

  for (int n = 1; n <= 40; ++n) {
    CHECK_THAT(catness(ghz_state(build_block_basis(n))).value, WithinRel(2.0 * n * n, 1e-10));
  }

  const auto eta = optimal_projector(ghz);
  CHECK_THAT(projected_double_commutator(ghz, eta), WithinAbs(18.0, 1e-9));
  // The D eigenvectors of a GHZ state are (|N> +- |-N>)/sqrt2, which are
  // unbiased with respect to [Sz, rho]; the signal vanishes for this projector.
  CHECK(q_prime(ghz, eta) <= 1e-12);
}

TEST_CASE("block catness equals the dense trace norm", "[catness][property]") {
  for (int trial = 0; trial < 24; ++trial) {
    const int n = ts::uniform_int(1, 7);
    const auto basis = build_block_basis(n);
    const auto rho = ts::random_state(basis);
    const auto report = catness(rho);
    const auto dense = oracle::embed(rho);
    CHECK_THAT(report.value, WithinAbs(oracle::dense_catness(dense), 1e-10));
    double sum = 0.0;
    for (double c : report.contributions) sum += c;
    CHECK_THAT(sum, WithinAbs(report.value, 1e-10));
    CHECK(report.value >= 0.0);
  }
}

TEST_CASE("double commutator is Hermitian and traceless", "[catness][property]") {
  for (int trial = 0; trial < 30; ++trial) {
    const auto basis = build_block_basis(ts::uniform_int(1, 25));
    const auto rho = ts::random_state(basis);
    const auto d = double_commutator(rho);
    double trace = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(ts::max_abs(d[i] - d[i].adjoint()) <= 1e-12 * std::max(1.0, ts::max_abs(d[i])));
      trace += basis->sector(i).weight * d[i].trace().real();
    }
    CHECK(std::abs(trace) <= 1e-10 * basis->particle_count() * basis->particle_count());
  }
  // N = 2 Dicke |Sx=0>
  const auto dicke = dicke_state(build_block_basis(2), 0);
  const auto dense = oracle::dense_double_commutator(oracle::embed(dicke));
  CHECK(ts::max_abs(oracle::embed_blocks(dicke.basis(), double_commutator(dicke),
                                          oracle::sector_frames(dicke.basis())) -
                    dense) <= 1e-12);
  CHECK(ts::max_abs(dense) > 1.0);
}

TEST_CASE("catness symmetries", "[catness][property]") {
  for (int trial = 0; trial < 20; ++trial) {
    const auto basis = build_block_basis(ts::uniform_int(1, 16));
    const auto rho = ts::random_state(basis);
    const double c = catness(rho).value;
    CHECK_THAT(catness(flip(rho)).value, WithinAbs(c, 1e-9 * std::max(1.0, c)));
    CHECK_THAT(catness(rotate_about_z(rho, ts::uniform(0.0, 6.0))).value,
               WithinAbs(c, 1e-9 * std::max(1.0, c)));
  }
  // Convexity: the trace norm obeys the triangle inequality.
  for (int trial = 0; trial < 20; ++trial) {
    const auto basis = build_block_basis(ts::uniform_int(2, 12));
    const auto a = ts::random_state(basis);
    const auto b = ts::random_state(basis);
    auto mix = a;
    for (std::size_t i = 0; i < basis->sector_count(); ++i) mix.block(i) = 0.3 * a.block(i) + 0.7 * b.block(i);
    CHECK(catness(mix).value <= 0.3 * catness(a).value + 0.7 * catness(b).value + 1e-9);
  }
}

TEST_CASE("pure states: catness bounds the Sz variance", "[catness][property]") {
  for (int n : {1, 2, 5, 17, 60}) {
    const auto basis = build_block_basis(n);
    for (int xi = -n; xi <= n; xi += 2) {
      CHECK(catness(dicke_state(basis, xi)).value >= dicke_variance(n, xi) - 1e-9 * n * n);
    }
    for (int trial = 0; trial < 5; ++trial) {
      const auto psi = ts::random_symmetric_pure(basis);
      const double var = sz_moment(psi, 2) - std::pow(sz_moment(psi, 1), 2);
      CHECK(catness(psi).value >= var - 1e-9 * n * n);
    }
  }
}

TEST_CASE("projection measurement", "[catness]") {
  SECTION("binomial outcome probabilities on |up>^N") {
    const auto up = all_up_state(build_block_basis(3));
    CHECK_THAT(projection_postselect(up, 1).probability, WithinAbs(3.0 / 8.0, 1e-14));
    CHECK_THAT(projection_postselect(up, 3).probability, WithinAbs(1.0 / 8.0, 1e-14));
  }
  SECTION("projecting an eigenstate onto its own value") {
    const auto d = dicke_state(build_block_basis(5), -1);
    const auto post = projection_postselect(d, -1);
    CHECK_THAT(post.probability, WithinAbs(1.0, 1e-14));
    CHECK(ts::max_block_difference(post.state, d) <= 1e-14);
    CHECK_THROWS_AS(projection_postselect(d, 1), ImpossibleOutcome);
    CHECK_THROWS_AS(projection_postselect(d, 2), DomainError);
  }
  SECTION("thermal N=4, beta=1 against the dense oracle") {
    const auto rho = thermal_state(build_block_basis(4), 1.0, 0.5);
    const auto dense = oracle::dense_thermal(4, 1.0, 0.5);
    for (int mv = -4; mv <= 4; mv += 2) {
      const auto block = projection_postselect(rho, mv);
      const auto ref = oracle::dense_projection(dense, mv);
      CHECK_THAT(block.probability, WithinAbs(ref.probability, 1e-12));
      CHECK(ts::max_abs(oracle::embed(block.state).rho - ref.state.rho) <= 1e-10);
    }
  }
  SECTION("zero-temperature N=4, M=0 dominates the trace form") {
    const auto post = projection_postselect(all_up_state(build_block_basis(4)), 0).state;
    const double dense = oracle::dense_catness(oracle::embed(post));
    CHECK_THAT(catness(post).value, WithinAbs(dense, 1e-10));
    CHECK(2.0 * catness(post).value >= 24.0);
  }
}

TEST_CASE("trace form after a thermal projection", "[catness]") {
  CHECK_THAT(tr_projection_form(4, 0, 1e3, 0.5), WithinAbs(24.0, 1e-12));
  for (double beta : {0.0, 0.7, 5.0}) CHECK_THAT(tr_projection_form(5, 5, beta, 0.5), WithinAbs(10.0, 1e-12));
  CHECK_THROWS_AS(tr_projection_form(4, 1, 1.0, 0.5), DomainError);

  for (int n = 1; n <= 6; ++n) {
    for (double beta : {0.1, 1.0, 2.0, 10.0}) {
      const auto dense = oracle::dense_thermal(n, beta, 0.5);
      const auto rho = thermal_state(build_block_basis(n), beta, 0.5);
      for (int mv = -n; mv <= n; mv += 2) {
        const auto post = oracle::dense_projection(dense, mv);
        const Matrix p = oracle::dense_sx_projector(n, mv);
        const double oracle_value = (p * oracle::dense_double_commutator(post.state)).trace().real();
        CHECK_THAT(oracle_value, WithinAbs(tr_projection_form(n, mv, beta, 0.5), 1e-10));

        const auto block = projection_postselect(rho, mv);
        const auto eta = sx_projector(rho.basis_ptr(), mv);
        CHECK_THAT(projected_double_commutator(block.state, eta),
                   WithinAbs(tr_projection_form(n, mv, beta, 0.5), 1e-10));
      }
    }
  }
}

TEST_CASE("optimal projector attains the catness", "[catness][property]") {
  for (int trial = 0; trial < 25; ++trial) {
    const auto basis = build_block_basis(ts::uniform_int(1, 14));
    const auto rho = ts::random_state(basis);
    const auto eta = optimal_projector(rho);
    const double c = catness(rho).value;
    CHECK_THAT(projected_double_commutator(rho, eta), WithinAbs(c, 1e-9 * std::max(1.0, c)));
    for (std::size_t i = 0; i < eta.blocks.size(); ++i) {
      const Matrix& p = eta.blocks[i];
      CHECK(ts::max_abs(p * p - p) <= 1e-10);
      CHECK(ts::max_abs(p - p.adjoint()) <= 1e-10);
    }
    // Every Sx = M projector gives at most the trace norm.
    for (int mv = -basis->particle_count(); mv <= basis->particle_count(); mv += 2) {
      CHECK(projected_double_commutator(rho, sx_projector(basis, mv)) <= c + 1e-9 * std::max(1.0, c));
    }
  }
  // D = 0 gives the full projector and a zero trace.
  const auto thermal = thermal_state(build_block_basis(3), 1.0, 0.5);
  const auto eta = optimal_projector(thermal);
  CHECK(eta.weighted_rank() == 8.0);
  CHECK(std::abs(projected_double_commutator(thermal, eta)) <= 1e-12);
}

TEST_CASE("q' against the dense oracle", "[catness][property]") {
  for (int trial = 0; trial < 20; ++trial) {
    const int n = ts::uniform_int(1, 6);
    const auto basis = build_block_basis(n);
    const auto rho = ts::random_state(basis);
    const auto dense = oracle::embed(rho);
    for (const auto& eta : {optimal_projector(rho), signal_projector(rho),
                            sx_projector(basis, n % 2 ? 1 : 0)}) {
      CHECK_THAT(q_prime(rho, eta), WithinAbs(oracle::dense_q_prime(dense, oracle::embed(eta)), 1e-10));
    }
  }
  CHECK(q_prime(thermal_state(build_block_basis(5), 2.0, 0.5),
                sx_projector(build_block_basis(5), 1)) <= 1e-12);
}

TEST_CASE("q' of a phase-rotated GHZ state", "[catness]") {
  // Rotating about z gives [Sz, rho] a component along the optimal projector
  // of the unrotated state: Tr(eta [Sz, rho']) = -i N sin(2 N phi) for eta
  // onto (|N> + |-N>)/sqrt2 and the D-positive eigenvector.
  const int n = 3;
  const auto basis = build_block_basis(n);
  const auto ghz = ghz_state(basis);
  const auto eta = optimal_projector(ghz);
  const double phi = std::numbers::pi / (4.0 * n);
  const auto rotated = rotate_about_z(ghz, phi);
  const double value = q_prime(rotated, eta);
  CHECK(value > 1.0);
  CHECK_THAT(value, WithinAbs(oracle::dense_q_prime(oracle::embed(rotated), oracle::embed(eta)), 1e-10));
  CHECK_THAT(value, WithinAbs(n * std::sin(2.0 * n * phi), 1e-10));
}

TEST_CASE("catness is bounded by the commutator signal", "[catness][property]") {
  // 1/2 ||[S,[S,rho]]||_1 <= ||S|| ||[S,rho]||_1 = 2N max_eta |Tr(eta [S,rho])|.
  for (int trial = 0; trial < 30; ++trial) {
    const int n = ts::uniform_int(1, 6);
    const auto basis = build_block_basis(n);
    const auto rho = trial % 2 ? ts::random_state(basis) : ts::random_symmetric_pure(basis);
    const auto eta = signal_projector(rho);
    const double signal = q_prime(rho, eta);
    CHECK(catness(rho).value <= 2.0 * n * signal + 1e-9);
    // The signal projector maximizes |Tr(eta [Sz, rho])| over the tested projectors.
    for (const auto& other : {optimal_projector(rho), sx_projector(basis, n % 2 ? -1 : 0)}) {
      CHECK(q_prime(rho, other) <= signal + 1e-10);
    }
  }
}
