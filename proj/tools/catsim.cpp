// catsim: command-line front end.
//
//   catsim simulate      trajectory ensembles -> outcomes, catness, ensemble.csv, manifest.json
//   catsim pk            analytic p(k) for the all-up state
//   catsim predict       Sx eigenvalue a trajectory with k "+" outcomes converges to
//   catsim references    projective-measurement reference curves over a list of N
//   catsim fit           log-log slope of a CSV column against N
//   catsim oracle-check  block engine vs dense 2^N simulation on shared outcome scripts
//   catsim sensitivity   Ramsey delta-omega for a Dicke, GHZ or trajectory state
//
// Exit status: 0 success, 1 failed check, 2 usage or domain error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "catsim/analytics.hpp"
#include "catsim/catness.hpp"
#include "catsim/io.hpp"
#include "catsim/oracle.hpp"
#include "catsim/trajectory.hpp"

namespace fs = std::filesystem;
using catsim::io::format_double;
using catsim::io::Json;

namespace {

constexpr int kExitFailedCheck = 1;
constexpr int kExitUsage = 2;

/// Writes `text` to stdout, or to `out` with a sidecar manifest next to it.
void emit(const std::string& text, const std::string& out, Json manifest, bool csv) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  const fs::path path(out);
  const fs::path sidecar = path.string() + ".manifest.json";
  manifest["files"] = {path.filename().string()};
  catsim::io::write_manifest(sidecar, manifest);
  const std::string ref = sidecar.filename().string();
  if (csv) {
    catsim::io::write_text(path, "# manifest: " + ref + "\n" + text);
  } else {
    Json j = Json::parse(text);
    j["manifest"] = ref;
    catsim::io::write_text(path, j.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::vector<int> n{15};
  double beta = 10.0;
  double h = 0.5;
  double gt = 0.222;
  int m = 1000;
  std::size_t runs = 3000;
  std::uint64_t seed = 1;
  std::vector<int> checkpoints{0, 10, 50, 100, 600, 1000};
  std::string initial = "gibbs";
  std::string out = "catsim-out";
  std::string format = "jsonl";
  unsigned threads = 0;
  bool skip_outcomes = false;
};

// CLI11 only reads config files attached to the root app, so entries are
// applied here to options that the command line left untouched.
void apply_config_file(CLI::App& sub, const std::string& path) {
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr || !item.parents.empty()) {
      throw catsim::ConfigError("unknown key in " + path + ": " + item.fullname());
    }
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

std::ofstream open_sink(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

int run_simulate(const SimulateOptions& opt) {
  const fs::path dir(opt.out);
  fs::create_directories(dir);
  const bool jsonl = opt.format == "jsonl";
  const std::string ext = jsonl ? ".jsonl" : ".csv";
  const std::string outcomes_name = "outcomes" + ext;
  const std::string catness_name = "catness" + ext;
  const std::string manifest_ref = "manifest.json";

  // Record files are streamed; every file starts with a pointer to the manifest.
  std::ofstream outcomes, cat;
  if (!opt.skip_outcomes) outcomes = open_sink(dir / outcomes_name);
  cat = open_sink(dir / catness_name);
  if (jsonl) {
    const std::string header = catsim::io::jsonl_line(Json{{"manifest", manifest_ref}});
    if (outcomes.is_open()) outcomes << header;
    cat << header;
  } else {
    if (outcomes.is_open()) {
      outcomes << "# manifest: " << manifest_ref << "\nN,trajectory_index,step,outcome\n";
    }
    cat << "# manifest: " << manifest_ref << "\nN,trajectory_index,checkpoint,catness\n";
  }

  catsim::io::CsvTable ensemble({"N", "checkpoint", "mean", "stderr", "R"});
  const unsigned workers = opt.threads ? opt.threads : catsim::default_worker_count();

  for (int n : opt.n) {
    catsim::TrajectoryConfig cfg;
    cfg.n = n;
    cfg.beta = opt.beta;
    cfg.omega_p = opt.h;
    cfg.gt = opt.gt;
    cfg.m = opt.m;
    cfg.checkpoints = opt.checkpoints;
    cfg.master_seed = opt.seed;
    cfg.initial = opt.initial == "all-up" ? catsim::InitialCondition::all_up
                                          : catsim::InitialCondition::gibbs;
    if (opt.gt * n > std::numbers::pi / 2.0) {
      std::cerr << "warning: gt*N = " << opt.gt * n
                << " exceeds pi/2; outcome statistics enter the wide-coupling regime\n";
    }
    const auto result = catsim::run_ensemble(cfg, opt.runs, workers);

    std::string buf;
    for (const auto& rec : result.records) {
      const std::string id = std::to_string(rec.trajectory_index);
      const std::string prefix = std::to_string(n) + "," + id + ",";
      if (outcomes.is_open()) {
        buf.clear();
        for (std::size_t s = 0; s < rec.outcomes.size(); ++s) {
          const std::string step = std::to_string(s + 1);
          const std::string o = std::to_string(int{rec.outcomes[s]});
          if (jsonl) {
            buf += "{\"N\":" + std::to_string(n) + ",\"trajectory_index\":" + id +
                   ",\"step\":" + step + ",\"outcome\":" + o + "}\n";
          } else {
            buf += prefix + step + "," + o + "\n";
          }
        }
        outcomes << buf;
      }
      for (const auto& [checkpoint, value] : rec.catness_at) {
        if (jsonl) {
          cat << "{\"N\":" << n << ",\"trajectory_index\":" << id
              << ",\"checkpoint\":" << checkpoint << ",\"catness\":" << format_double(value)
              << "}\n";
        } else {
          cat << prefix << checkpoint << "," << format_double(value) << "\n";
        }
      }
    }
    for (const auto& avg : result.averages) {
      ensemble.row({std::to_string(n), std::to_string(avg.checkpoint), format_double(avg.mean),
                    format_double(avg.standard_error), std::to_string(avg.runs)});
    }
  }
  if (outcomes.is_open() && !outcomes.flush()) throw std::runtime_error("write failed: outcomes");
  if (!cat.flush()) throw std::runtime_error("write failed: catness");
  catsim::io::write_text(dir / "ensemble.csv", "# manifest: " + manifest_ref + "\n" + ensemble.str());

  std::vector<std::string> files;
  if (!opt.skip_outcomes) files.push_back(outcomes_name);
  files.push_back(catness_name);
  files.push_back("ensemble.csv");
  Json manifest = catsim::io::make_manifest("simulate", opt.seed);
  manifest["parameters"] = {
      {"N", opt.n},
      {"beta", opt.beta},
      {"h", opt.h},
      {"gt", opt.gt},
      {"m", opt.m},
      {"runs", opt.runs},
      {"checkpoints", opt.checkpoints},
      {"initial", opt.initial},
      {"format", opt.format},
  };
  manifest["files"] = files;
  catsim::io::write_manifest(dir / manifest_ref, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// analytics commands

int run_pk(int n, int m, double gt, const std::string& out) {
  const auto pk = catsim::pk_distribution(n, m, gt);
  catsim::io::CsvTable table({"k", "p"});
  for (int k = 0; k <= m; ++k) table.row({std::to_string(k), format_double(pk.p[k])});
  Json manifest = catsim::io::make_manifest("pk");
  manifest["parameters"] = {{"N", n}, {"m", m}, {"gt", gt}};
  emit(table.str(), out, manifest, true);
  return 0;
}

int run_predict(int n, int m, int k, double gt, const std::string& out) {
  const auto pred = catsim::predict_convergence(n, m, k, gt);
  Json j;
  j["N"] = n;
  j["m"] = m;
  j["k"] = k;
  j["gt"] = gt;
  j["L"] = pred.L();
  j["eigenvalues"] = pred.eigenvalues;
  j["degenerate"] = pred.degenerate;
  j["wide_regime"] = pred.wide_regime;
  j["candidates"] = pred.candidates;
  j["distance"] = pred.distance;
  j["fixed_point_magnitude"] = catsim::fixed_point_magnitude(m, k);
  Json manifest = catsim::io::make_manifest("predict");
  manifest["parameters"] = {{"N", n}, {"m", m}, {"k", k}, {"gt", gt}};
  emit(j.dump(2) + "\n", out, manifest, false);
  return 0;
}

int run_references(const std::vector<int>& ns, const std::string& out) {
  catsim::io::CsvTable table({"N", "ideal", "ideal_half", "closed_form"});
  for (int n : ns) {
    const double ideal = catsim::reference_ideal(n);
    table.row({std::to_string(n), format_double(ideal), format_double(0.5 * ideal),
               format_double(catsim::reference_closed_form(n))});
  }
  Json manifest = catsim::io::make_manifest("references");
  manifest["parameters"] = {{"N", ns}};
  manifest["columns"] = {
      {"ideal", "sum_M P(M) ||[Sz,[Sz,rho_M]]||_1 for |up>^N, no 1/2"},
      {"ideal_half", "ideal / 2, on the catness normalization"},
      {"closed_form", "sum_M P(M) (N^2 - M^2 + 2N)"},
  };
  emit(table.str(), out, manifest, true);
  return 0;
}

struct FitOptions {
  std::string input;
  std::string x = "N";
  std::string y = "mean";
  std::vector<std::string> where;  // column=value filters
  std::string out;
};

int run_fit(const FitOptions& opt) {
  const auto data = catsim::io::read_csv(opt.input);
  const std::size_t xc = data.column(opt.x);
  const std::size_t yc = data.column(opt.y);
  std::optional<std::size_t> ec;
  for (std::size_t i = 0; i < data.header.size(); ++i) {
    if (data.header[i] == "stderr") ec = i;
  }
  std::vector<std::pair<std::size_t, std::string>> filters;
  for (const auto& w : opt.where) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) throw catsim::ConfigError("--where expects column=value");
    filters.emplace_back(data.column(w.substr(0, eq)), w.substr(eq + 1));
  }
  std::vector<catsim::ScalingPoint> points;
  for (const auto& row : data.rows) {
    bool keep = true;
    for (const auto& [col, value] : filters) {
      if (row[col] != value) keep = false;
    }
    if (!keep) continue;
    catsim::ScalingPoint p;
    p.n = catsim::io::parse_double(row[xc]);
    p.value = catsim::io::parse_double(row[yc]);
    if (ec) p.standard_error = catsim::io::parse_double(row[*ec]);
    points.push_back(p);
  }
  const auto fit = catsim::fit_scaling(points);
  std::string text = "{\n  \"q\": " + format_double(fit.q) + ",\n  \"intercept\": " +
                     format_double(fit.intercept) + ",\n  \"r_squared\": " +
                     format_double(fit.r_squared) + ",\n  \"points\": " +
                     std::to_string(fit.points.size()) + "\n}\n";
  Json manifest = catsim::io::make_manifest("fit");
  manifest["parameters"] = {{"input", opt.input}, {"x", opt.x}, {"y", opt.y}, {"where", opt.where}};
  if (opt.out.empty()) {
    std::cout << text;
  } else {
    emit(text, opt.out, manifest, false);
  }
  return 0;
}

int run_oracle_check(const std::vector<int>& ns, std::uint64_t seed, std::size_t trajectories,
                     int steps, double gt, double beta, double h) {
  bool all = true;
  Json report = Json::array();
  for (int n : ns) {
    catsim::TrajectoryConfig cfg;
    cfg.n = n;
    cfg.gt = gt;
    cfg.beta = beta;
    cfg.omega_p = h;
    cfg.m = steps;
    cfg.checkpoints = {};
    cfg.master_seed = seed;
    double state = 0.0, prob = 0.0, cat = 0.0, lazy = 0.0;
    bool ok = true;
    for (std::size_t t = 0; t < trajectories; ++t) {
      const auto r = catsim::oracle::lockstep_check(cfg, t);
      state = std::max(state, r.state_error);
      prob = std::max(prob, r.probability_error);
      cat = std::max(cat, r.catness_error);
      lazy = std::max(lazy, r.lazy_state_error);
      ok = ok && r.passed();
    }
    all = all && ok;
    report.push_back({{"N", n},
                      {"trajectories", trajectories},
                      {"steps", steps},
                      {"max_state_error", state},
                      {"max_probability_error", prob},
                      {"max_catness_error", cat},
                      {"max_trajectory_engine_error", lazy},
                      {"pass", ok}});
    std::cerr << (ok ? "PASS" : "FAIL") << "  N=" << n << "  state " << state << "  prob " << prob
              << "  catness " << cat << "\n";
  }
  Json j{{"seed", seed}, {"pass", all}, {"results", report}};
  std::cout << j.dump(2) << "\n";
  return all ? 0 : kExitFailedCheck;
}

struct SensitivityOptions {
  std::string source = "ghz";
  std::string projector = "signal";
  int n = 3;
  int theta = 1;
  double phase = 0.0;
  double t_int = 1.0;
  double total_time = 1.0;
  // trajectory source
  double beta = 10.0;
  double h = 0.5;
  double gt = 0.222;
  int m = 1000;
  std::uint64_t seed = 1;
  std::uint64_t index = 0;
  std::string initial = "gibbs";
  int sx = 0;
};

int run_sensitivity(const SensitivityOptions& opt) {
  const auto basis = catsim::build_block_basis(opt.n);
  std::optional<catsim::EnsembleState> state;
  if (opt.source == "dicke") {
    state = catsim::dicke_state(basis, opt.theta);
  } else if (opt.source == "ghz") {
    state = catsim::ghz_state(basis, opt.phase);
  } else {
    catsim::TrajectoryConfig cfg;
    cfg.n = opt.n;
    cfg.beta = opt.beta;
    cfg.omega_p = opt.h;
    cfg.gt = opt.gt;
    cfg.m = opt.m;
    cfg.checkpoints = {};
    cfg.master_seed = opt.seed;
    cfg.initial = opt.initial == "all-up" ? catsim::InitialCondition::all_up
                                          : catsim::InitialCondition::gibbs;
    cfg.keep_final_state = true;
    auto rec = catsim::run_trajectory(cfg, opt.index);
    state = std::move(*rec.final_state);
  }
  const catsim::ProjectorSpec eta = opt.projector == "signal"  ? catsim::signal_projector(*state)
                                    : opt.projector == "catness" ? catsim::optimal_projector(*state)
                                                                 : catsim::sx_projector(basis, opt.sx);
  const double p = catsim::ramsey_signal(*state, eta, 0.0, opt.t_int);
  const double dp = catsim::derivative_small_omega(*state, eta, opt.t_int);
  const auto est = catsim::ramsey_uncertainty(p, dp, opt.t_int, opt.total_time);
  Json j;
  j["source"] = opt.source;
  j["projector"] = opt.projector;
  j["N"] = opt.n;
  j["catness"] = catsim::catness(*state).value;
  j["q_prime"] = catsim::q_prime(*state, eta);
  j["P"] = est.probability;
  j["dP_domega"] = est.dp_domega;
  j["t_int"] = est.t_int;
  j["T"] = est.total_time;
  j["delta_omega"] = est.delta_omega;
  j["sql"] = 1.0 / (opt.t_int * std::sqrt(static_cast<double>(opt.n)) *
                    std::sqrt(opt.total_time / opt.t_int));
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catsim: repeated-measurement cat-state simulator"};
  app.set_help_flag("--help", "print this help and exit");  // -h is taken by --h
  app.set_version_flag("--version", std::string(catsim::io::kVersion));
  app.require_subcommand(1);

  // simulate
  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "run trajectory ensembles");
  std::string sim_config;
  simulate->add_option("--config", sim_config, "key = value configuration file (flags override it)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--n", sim.n, "particle count(s), comma separated")
      ->delimiter(',')
      ->check(CLI::Range(1, catsim::kMaxParticles))
      ->capture_default_str();
  simulate->add_option("--beta", sim.beta, "inverse temperature")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--h", sim.h, "Zeeman frequency omega_P")->capture_default_str();
  simulate->add_option("--gt", sim.gt, "ancilla coupling g*t")->capture_default_str();
  simulate->add_option("--m", sim.m, "measurements per trajectory")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--runs", sim.runs, "trajectories per N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  simulate->add_option("--checkpoints", sim.checkpoints, "steps at which catness is recorded")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--initial", sim.initial, "initial state")
      ->check(CLI::IsMember({"gibbs", "all-up"}))
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "output directory")->capture_default_str();
  simulate->add_option("--format", sim.format, "per-trajectory record format")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();
  simulate->add_option("--threads", sim.threads, "worker threads (0 = all cores)");
  simulate->add_flag("--skip-outcomes", sim.skip_outcomes, "do not write per-step outcomes");

  // pk
  int pk_n = 4, pk_m = 400;
  double pk_gt = 0.2;
  std::string pk_out;
  auto* pk = app.add_subcommand("pk", "analytic p(k) for the all-up state");
  pk->add_option("--n", pk_n)->check(CLI::PositiveNumber)->capture_default_str();
  pk->add_option("--m", pk_m)->check(CLI::NonNegativeNumber)->capture_default_str();
  pk->add_option("--gt", pk_gt)->capture_default_str();
  pk->add_option("--out", pk_out, "output CSV (default stdout)");

  // predict
  int pr_n = 4, pr_m = 1000, pr_k = 500;
  double pr_gt = 0.2;
  std::string pr_out;
  auto* predict = app.add_subcommand("predict", "convergence prediction for k of m");
  predict->add_option("--n", pr_n)->check(CLI::PositiveNumber)->capture_default_str();
  predict->add_option("--m", pr_m)->capture_default_str();
  predict->add_option("--k", pr_k)->capture_default_str();
  predict->add_option("--gt", pr_gt)->capture_default_str();
  predict->add_option("--out", pr_out, "output JSON (default stdout)");

  // references
  std::vector<int> ref_n{3, 5, 7, 15, 31, 63, 127};
  std::string ref_out;
  auto* references = app.add_subcommand("references", "projective-measurement reference curves");
  references->add_option("--n", ref_n, "comma separated N list")
      ->delimiter(',')
      ->check(CLI::Range(1, catsim::kMaxParticles))
      ->capture_default_str();
  references->add_option("--out", ref_out, "output CSV (default stdout)");

  // fit
  FitOptions fit_opt;
  auto* fit = app.add_subcommand("fit", "log-log slope of a CSV column against N");
  fit->add_option("--input", fit_opt.input, "CSV file")->required()->check(CLI::ExistingFile);
  fit->add_option("--x", fit_opt.x, "abscissa column")->capture_default_str();
  fit->add_option("--y", fit_opt.y, "ordinate column")->capture_default_str();
  fit->add_option("--where", fit_opt.where, "row filter column=value (repeatable)");
  fit->add_option("--out", fit_opt.out, "output JSON (default stdout)");

  // oracle-check
  std::vector<int> oc_n{2, 3, 4, 5, 6};
  std::uint64_t oc_seed = 1;
  std::size_t oc_runs = 5;
  int oc_steps = 20;
  double oc_gt = 0.222, oc_beta = 1.0, oc_h = 0.5;
  auto* oracle_check = app.add_subcommand("oracle-check", "compare against the dense 2^N oracle");
  oracle_check->add_option("--n", oc_n)
      ->delimiter(',')
      ->check(CLI::Range(1, catsim::oracle::kMaxDenseParticles))
      ->capture_default_str();
  oracle_check->add_option("--seed", oc_seed)->capture_default_str();
  oracle_check->add_option("--runs", oc_runs)->check(CLI::PositiveNumber)->capture_default_str();
  oracle_check->add_option("--steps", oc_steps)->check(CLI::NonNegativeNumber)->capture_default_str();
  oracle_check->add_option("--gt", oc_gt)->capture_default_str();
  oracle_check->add_option("--beta", oc_beta)->check(CLI::NonNegativeNumber)->capture_default_str();
  oracle_check->add_option("--h", oc_h)->capture_default_str();

  // sensitivity
  SensitivityOptions so;
  auto* sensitivity = app.add_subcommand("sensitivity", "Ramsey frequency uncertainty");
  sensitivity->add_option("--source", so.source)
      ->check(CLI::IsMember({"dicke", "ghz", "trajectory"}))
      ->capture_default_str();
  sensitivity->add_option("--projector", so.projector, "readout projector")
      ->check(CLI::IsMember({"signal", "catness", "sx"}))
      ->capture_default_str();
  sensitivity->add_option("--n", so.n)
      ->check(CLI::Range(1, catsim::kMaxParticles))
      ->capture_default_str();
  sensitivity->add_option("--theta", so.theta, "Dicke Sx eigenvalue")->capture_default_str();
  sensitivity->add_option("--phase", so.phase, "GHZ relative phase")->capture_default_str();
  sensitivity->add_option("--sx", so.sx, "Sx eigenvalue for --projector sx")->capture_default_str();
  sensitivity->add_option("--t-int", so.t_int, "interrogation time")->capture_default_str();
  sensitivity->add_option("--T", so.total_time, "total measurement time")->capture_default_str();
  sensitivity->add_option("--beta", so.beta)->check(CLI::NonNegativeNumber)->capture_default_str();
  sensitivity->add_option("--h", so.h)->capture_default_str();
  sensitivity->add_option("--gt", so.gt)->capture_default_str();
  sensitivity->add_option("--m", so.m)->check(CLI::NonNegativeNumber)->capture_default_str();
  sensitivity->add_option("--seed", so.seed)->capture_default_str();
  sensitivity->add_option("--index", so.index, "trajectory index")->capture_default_str();
  sensitivity->add_option("--initial", so.initial)
      ->check(CLI::IsMember({"gibbs", "all-up"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) {
      if (!sim_config.empty()) apply_config_file(*simulate, sim_config);
      return run_simulate(sim);
    }
    if (*pk) return run_pk(pk_n, pk_m, pk_gt, pk_out);
    if (*predict) return run_predict(pr_n, pr_m, pr_k, pr_gt, pr_out);
    if (*references) return run_references(ref_n, ref_out);
    if (*fit) return run_fit(fit_opt);
    if (*oracle_check) return run_oracle_check(oc_n, oc_seed, oc_runs, oc_steps, oc_gt, oc_beta, oc_h);
    if (*sensitivity) return run_sensitivity(so);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const catsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const catsim::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailedCheck;
  }
  return kExitUsage;
}
