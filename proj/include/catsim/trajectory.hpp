#pragma once

// Monte Carlo trajectories of repeated Kraus measurements.
//
// W+ and W- are diagonal in the Sx basis and commute, so after m steps with k
// "+" outcomes the state is
//   rho_ab(m) ∝ rho_ab(0) * f_a * f_b,   f_a = w+(s_a)^k w-(s_a)^(m-k)
// up to phases that cancel. A trajectory therefore only tracks the diagonal
// populations (enough for outcome probabilities) and k; the full blocks are
// rebuilt at checkpoints, where the catness is evaluated.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "catsim/catness.hpp"
#include "catsim/measurement.hpp"
#include "catsim/rng.hpp"
#include "catsim/spin_blocks.hpp"

namespace catsim {

inline const std::vector<int>& default_checkpoints() {
  static const std::vector<int> v{0, 10, 50, 100, 600, 1000};
  return v;
}

struct TrajectoryConfig {
  int n = 15;
  double beta = 10.0;
  double omega_p = 0.5;
  double gt = 0.222;
  int m = 1000;
  std::vector<int> checkpoints = default_checkpoints();
  std::uint64_t master_seed = 1;
  InitialCondition initial = InitialCondition::gibbs;
  bool keep_final_state = false;

  /// Sorted, deduplicated checkpoints restricted to [0, m].
  std::vector<int> effective_checkpoints() const {
    std::vector<int> out;
    for (int c : checkpoints) {
      if (c >= 0 && c <= m) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void validate() const {
    if (n < 1 || n > kMaxParticles) throw ConfigError("N out of range");
    if (m < 0) throw ConfigError("m must be >= 0");
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (!std::isfinite(gt) || !std::isfinite(omega_p)) throw ConfigError("gt and h must be finite");
  }
};

struct TrajectoryRecord {
  std::uint64_t trajectory_index = 0;
  std::vector<std::int8_t> outcomes;  // +1 / -1
  int k = 0;
  std::map<int, double> catness_at;
  std::optional<EnsembleState> final_state;
};

struct EnsembleAverage {
  int checkpoint = 0;
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t runs = 0;
};

/// +1 with probability p_plus; consumes exactly one uniform draw.
inline Outcome sample_outcome(double p_plus, RandomStream& stream) {
  return stream.uniform() < p_plus ? Outcome::plus : Outcome::minus;
}

/// Kraus-conditioned state tracked through k and the Sx populations.
class TrajectoryState {
 public:
  TrajectoryState(EnsembleState initial, const KrausPair& kraus)
      : initial_(std::move(initial)), kraus_(&kraus) {
    const auto& basis = initial_.basis();
    for (std::size_t i = 0; i < basis.sector_count(); ++i) {
      const auto& b = initial_.block(i);
      std::vector<double> pop(b.rows());
      for (Eigen::Index a = 0; a < b.rows(); ++a) pop[a] = b(a, a).real();
      populations_.push_back(std::move(pop));
      std::vector<double> wp, wm;
      for (std::size_t a = 0; a < kraus.plus[i].size(); ++a) {
        wp.push_back(std::norm(kraus.plus[i][a]));
        wm.push_back(std::norm(kraus.minus[i][a]));
      }
      weight_plus_.push_back(std::move(wp));
      weight_minus_.push_back(std::move(wm));
    }
    total_ = initial_.weighted_trace();
  }

  int steps() const { return steps_; }
  int plus_count() const { return k_; }

  OutcomeProbabilities probabilities() const {
    OutcomeProbabilities p;
    double sp = 0.0, sm = 0.0;
    const auto& basis = initial_.basis();
    for (std::size_t i = 0; i < populations_.size(); ++i) {
      double bp = 0.0, bm = 0.0;
      for (std::size_t a = 0; a < populations_[i].size(); ++a) {
        bp += weight_plus_[i][a] * populations_[i][a];
        bm += weight_minus_[i][a] * populations_[i][a];
      }
      sp += basis.sector(i).weight * bp;
      sm += basis.sector(i).weight * bm;
    }
    p.plus = std::clamp(sp / total_, 0.0, 1.0);
    p.minus = std::clamp(sm / total_, 0.0, 1.0);
    return p;
  }

  void apply(Outcome o) {
    const auto& w = o == Outcome::plus ? weight_plus_ : weight_minus_;
    const auto& basis = initial_.basis();
    double total = 0.0;
    for (std::size_t i = 0; i < populations_.size(); ++i) {
      double block = 0.0;
      for (std::size_t a = 0; a < populations_[i].size(); ++a) {
        populations_[i][a] *= w[i][a];
        block += populations_[i][a];
      }
      total += basis.sector(i).weight * block;
    }
    if (!(total / total_ > 1e-15)) {
      throw ImpossibleOutcome("trajectory reached an outcome of zero probability");
    }
    for (auto& pop : populations_) {
      for (double& x : pop) x /= total;
    }
    total_ = 1.0;
    ++steps_;
    if (o == Outcome::plus) ++k_;
  }

  /// Full normalized state after the steps applied so far.
  EnsembleState materialize() const { return conditioned_state(initial_, *kraus_, k_, steps_); }

  /// rho(0) conditioned on k "+" and (m - k) "-" outcomes, in any order.
  static EnsembleState conditioned_state(const EnsembleState& initial, const KrausPair& kraus,
                                         int k, int m) {
    auto out = EnsembleState::zeros(initial.basis_ptr());
    const auto& basis = initial.basis();
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> logs(basis.sector_count());
    std::vector<std::vector<double>> signs(basis.sector_count());
    double log_max = kNegInf;
    for (std::size_t i = 0; i < basis.sector_count(); ++i) {
      const auto& b = initial.block(i);
      for (Eigen::Index a = 0; a < b.rows(); ++a) {
        const double half_angle = 0.5 * kraus.gt * basis.sector(i).sx_eigenvalues[a];
        const double fp = std::sin(std::numbers::pi / 4.0 + half_angle);
        const double fm = std::sin(std::numbers::pi / 4.0 - half_angle);
        const double l = power_log(std::abs(fp), k) + power_log(std::abs(fm), m - k);
        double sign = 1.0;
        if (fp < 0.0 && (k % 2) == 1) sign = -sign;
        if (fm < 0.0 && ((m - k) % 2) == 1) sign = -sign;
        logs[i].push_back(l);
        signs[i].push_back(sign);
        if (b(a, a).real() > 0.0) log_max = std::max(log_max, l);
      }
    }
    if (log_max == kNegInf) throw ImpossibleOutcome("conditioned state has zero weight");
    for (std::size_t i = 0; i < basis.sector_count(); ++i) {
      const auto& b = initial.block(i);
      const Eigen::Index dim = b.rows();
      Eigen::VectorXcd f(dim);
      for (Eigen::Index a = 0; a < dim; ++a) {
        f(a) = logs[i][a] == kNegInf ? 0.0 : signs[i][a] * std::exp(logs[i][a] - log_max);
      }
      out.block(i) = f.asDiagonal() * b * f.asDiagonal();
    }
    const double t = out.weighted_trace();
    if (!(t > 0.0)) throw ImpossibleOutcome("conditioned state has zero weight");
    for (auto& b : out.blocks()) b /= t;
    return out;
  }

 private:
  // log(x^p) with 0^0 = 1.
  static double power_log(double x, int p) {
    if (p == 0) return 0.0;
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    return p * std::log(x);
  }

  EnsembleState initial_;
  const KrausPair* kraus_;
  std::vector<std::vector<double>> populations_;
  std::vector<std::vector<double>> weight_plus_;
  std::vector<std::vector<double>> weight_minus_;
  double total_ = 1.0;
  int steps_ = 0;
  int k_ = 0;
};

/// Shared read-only inputs for every trajectory of one configuration.
struct TrajectoryContext {
  TrajectoryConfig config;
  std::shared_ptr<const BlockBasis> basis;
  KrausPair kraus;
  EnsembleState initial;
  std::vector<int> checkpoints;
  double initial_catness = 0.0;

  explicit TrajectoryContext(TrajectoryConfig cfg) : config(std::move(cfg)) {
    config.validate();
    basis = build_block_basis(config.n);
    kraus = build_kraus(*basis, config.gt);
    initial = initial_state(basis, config.initial, config.beta, config.omega_p);
    checkpoints = config.effective_checkpoints();
    initial_catness = catness(initial).value;
  }
};

inline TrajectoryRecord run_trajectory(const TrajectoryContext& ctx, std::uint64_t index) {
  RandomStream stream(ctx.config.master_seed, index);
  TrajectoryRecord rec;
  rec.trajectory_index = index;
  rec.outcomes.reserve(ctx.config.m);
  TrajectoryState state(ctx.initial, ctx.kraus);
  auto next_checkpoint = ctx.checkpoints.begin();
  auto record_checkpoints = [&] {
    while (next_checkpoint != ctx.checkpoints.end() && *next_checkpoint == state.steps()) {
      rec.catness_at[*next_checkpoint] =
          state.steps() == 0 ? ctx.initial_catness : catness(state.materialize()).value;
      ++next_checkpoint;
    }
  };
  record_checkpoints();
  for (int step = 0; step < ctx.config.m; ++step) {
    const Outcome o = sample_outcome(state.probabilities().plus, stream);
    state.apply(o);
    rec.outcomes.push_back(static_cast<std::int8_t>(sign_of(o)));
    record_checkpoints();
  }
  rec.k = state.plus_count();
  if (ctx.config.keep_final_state) rec.final_state = state.materialize();
  return rec;
}

/// Convenience overload building the shared context for a single trajectory.
inline TrajectoryRecord run_trajectory(const TrajectoryConfig& config, std::uint64_t index) {
  return run_trajectory(TrajectoryContext(config), index);
}

/// Pairwise (cascade) summation; result depends only on the order of values.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline EnsembleAverage summarize(int checkpoint, std::span<const double> values) {
  EnsembleAverage avg;
  avg.checkpoint = checkpoint;
  avg.runs = values.size();
  if (values.empty()) return avg;
  avg.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() > 1) {
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - avg.mean) * (values[i] - avg.mean);
    const double var = pairwise_sum(dev) / static_cast<double>(values.size() - 1);
    avg.standard_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return avg;
}

struct EnsembleResult {
  std::vector<EnsembleAverage> averages;  // one per checkpoint
  std::vector<TrajectoryRecord> records;  // indexed by trajectory_index
};

inline unsigned default_worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs trajectories 0..runs-1. Results are stored by index and reduced in
/// index order, so output is independent of the worker count.
inline EnsembleResult run_ensemble(const TrajectoryConfig& config, std::size_t runs,
                                   unsigned workers = default_worker_count()) {
  if (runs < 1) throw ConfigError("run count must be >= 1");
  const TrajectoryContext ctx(config);
  EnsembleResult result;
  result.records.resize(runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      try {
        result.records[i] = run_trajectory(ctx, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = runs;
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(runs)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> values(runs);
  for (int c : ctx.checkpoints) {
    for (std::size_t i = 0; i < runs; ++i) values[i] = result.records[i].catness_at.at(c);
    result.averages.push_back(summarize(c, values));
  }
  return result;
}

}  // namespace catsim
