#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "catsim/measurement.hpp"
#include "catsim/oracle.hpp"
#include "support.hpp"

using namespace catsim;
using Catch::Matchers::WithinAbs;
namespace ts = testing_support;

TEST_CASE("Kraus entries form a POVM", "[measurement]") {
  for (int n : {1, 2, 3, 8, 31, 64, 127}) {
    const auto basis = build_block_basis(n);
    for (double gt : {0.2, 0.222, 1.0}) {
      const auto k = build_kraus(*basis, gt);
      for (std::size_t i = 0; i < basis->sector_count(); ++i) {
        const auto& sx = basis->sector(i).sx_eigenvalues;
        for (std::size_t a = 0; a < sx.size(); ++a) {
          const Complex wp = k.plus[i][a], wm = k.minus[i][a];
          CHECK_THAT(std::norm(wp) + std::norm(wm), WithinAbs(1.0, 1e-12));
          // (1-i)(1+i)/2 = 1, so the product carries no residual phase.
          CHECK(std::abs(wp * wm - Complex(std::cos(gt * sx[a]) / 2.0)) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("Kraus extremes", "[measurement]") {
  CHECK_THAT(std::norm(kraus_plus_entry(std::numbers::pi / 2, 1)), WithinAbs(1.0, 1e-15));
  CHECK_THAT(std::norm(kraus_minus_entry(std::numbers::pi / 2, 1)), WithinAbs(0.0, 1e-15));
  CHECK_THAT(std::norm(kraus_plus_entry(0.3, 0)), WithinAbs(0.5, 1e-15));
  CHECK_THAT(std::norm(kraus_minus_entry(0.3, 0)), WithinAbs(0.5, 1e-15));
  CHECK(build_kraus(*build_block_basis(15), 0.222).wide_coupling);
  CHECK_FALSE(build_kraus(*build_block_basis(4), 0.2).wide_coupling);
}

TEST_CASE("outcome probabilities", "[measurement]") {
  SECTION("Sx = 0 eigenstate is unbiased") {
    const auto basis = build_block_basis(6);
    const auto p = outcome_probabilities(dicke_state(basis, 0), build_kraus(*basis, 0.37));
    CHECK_THAT(p.plus, WithinAbs(0.5, 1e-14));
    CHECK_THAT(p.minus, WithinAbs(0.5, 1e-14));
  }
  SECTION("single spin along +x with gt = pi/2 always fires +") {
    const auto basis = build_block_basis(1);
    const auto kraus = build_kraus(*basis, std::numbers::pi / 2);
    const auto p = outcome_probabilities(dicke_state(basis, 1), kraus);
    CHECK_THAT(p.plus, WithinAbs(1.0, 1e-15));
    CHECK_THAT(p.minus, WithinAbs(0.0, 1e-15));
    auto state = dicke_state(basis, 1);
    CHECK_THROWS_AS(apply_outcome_inplace(state, kraus, Outcome::minus), ImpossibleOutcome);
  }
  SECTION("two spins at infinite temperature match the dense oracle") {
    const auto basis = build_block_basis(2);
    const auto p = outcome_probabilities(thermal_state(basis, 0.0, 0.5), build_kraus(*basis, 0.3));
    const auto ops = oracle::dense_kraus_ops(2, 0.3);
    const auto rho = oracle::dense_thermal(2, 0.0, 0.5).rho;
    CHECK_THAT(p.plus, WithinAbs((ops.plus * rho * ops.plus.adjoint()).trace().real(), 1e-12));
  }
  SECTION("unnormalized input is a contract violation") {
    const auto basis = build_block_basis(3);
    auto s = thermal_state(basis, 1.0, 0.5);
    s.block(0) *= 2.0;
    CHECK_THROWS_AS(outcome_probabilities(s, build_kraus(*basis, 0.2)), ContractViolation);
  }
  SECTION("random states: probabilities sum to one") {
    for (int trial = 0; trial < 30; ++trial) {
      const auto basis = build_block_basis(ts::uniform_int(1, 20));
      const auto p = outcome_probabilities(ts::random_state(basis),
                                           build_kraus(*basis, ts::uniform(0.01, 2.0)));
      CHECK_THAT(p.plus + p.minus, WithinAbs(1.0, 1e-10));
      CHECK(p.plus >= 0.0);
      CHECK(p.minus >= 0.0);
    }
  }
}

TEST_CASE("updates", "[measurement]") {
  SECTION("an Sx eigenstate is a fixed point") {
    const auto basis = build_block_basis(5);
    const auto kraus = build_kraus(*basis, 0.2);
    const auto d = dicke_state(basis, 3);
    CHECK(ts::max_block_difference(apply_outcome(d, kraus, Outcome::plus), d) <= 1e-14);
    CHECK(ts::max_block_difference(apply_outcome(d, kraus, Outcome::minus), d) <= 1e-14);
  }
  SECTION("W+ and W- commute") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto basis = build_block_basis(ts::uniform_int(1, 10));
      const auto kraus = build_kraus(*basis, ts::uniform(0.05, 1.5));
      const auto rho = ts::random_state(basis);
      const auto pm = apply_outcome(apply_outcome(rho, kraus, Outcome::plus), kraus, Outcome::minus);
      const auto mp = apply_outcome(apply_outcome(rho, kraus, Outcome::minus), kraus, Outcome::plus);
      CHECK(ts::max_block_difference(pm, mp) <= 1e-12);
    }
  }
  SECTION("any permutation of an outcome multiset gives the same state") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto basis = build_block_basis(ts::uniform_int(1, 9));
      const auto kraus = build_kraus(*basis, ts::uniform(0.05, 0.5));
      const auto rho = ts::random_state(basis);
      auto script = ts::random_script(12);
      auto a = rho, b = rho;
      for (auto o : script) apply_outcome_inplace(a, kraus, o);
      std::shuffle(script.begin(), script.end(), ts::rng());
      for (auto o : script) apply_outcome_inplace(b, kraus, o);
      CHECK(ts::max_block_difference(a, b) <= 1e-12);
    }
  }
  SECTION("sequence probability obeys the chain rule") {
    for (int trial = 0; trial < 15; ++trial) {
      const int n = ts::uniform_int(1, 8);
      const auto basis = build_block_basis(n);
      const auto kraus = build_kraus(*basis, ts::uniform(0.05, 0.8));
      const auto rho = ts::random_state(basis);
      const auto script = ts::random_script(10);
      auto s = rho;
      double product = 1.0;
      int k = 0;
      for (auto o : script) {
        product *= apply_outcome_inplace(s, kraus, o);
        k += o == Outcome::plus;
      }
      const int m = static_cast<int>(script.size());
      double direct = 0.0;
      for (std::size_t i = 0; i < basis->sector_count(); ++i) {
        for (Eigen::Index a = 0; a < rho.block(i).rows(); ++a) {
          direct += basis->sector(i).weight * std::pow(std::norm(kraus.plus[i][a]), k) *
                    std::pow(std::norm(kraus.minus[i][a]), m - k) * rho.block(i)(a, a).real();
        }
      }
      CHECK_THAT(product, WithinAbs(direct, 1e-10));
    }
  }
  SECTION("trace, Hermiticity and positivity survive every update") {
    const auto basis = build_block_basis(7);
    const auto kraus = build_kraus(*basis, 0.222);
    auto s = ts::random_state(basis);
    for (auto o : ts::random_script(200)) {
      apply_outcome_inplace(s, kraus, o);
      REQUIRE(is_valid_state(s));
    }
  }
}
