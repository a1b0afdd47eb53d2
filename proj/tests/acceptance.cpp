// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oracle.hpp"
#include "plcert/bounds.hpp"
#include "plcert/cli.hpp"
#include "plcert/errors.hpp"
#include "plcert/harness.hpp"

using namespace plcert;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::mt19937_64 rng_for(int criterion) { return std::mt19937_64(0xacce97 + criterion); }

double unif(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// 1. Closed forms against 50-digit reference arithmetic.
Outcome formula_fidelity() {
  auto g = rng_for(1);
  constexpr int kTuples = 20;
  double worst = 0.0;
  int count_mismatch = 0;
  for (int t = 0; t < kTuples; ++t) {
    const int k = 2 + static_cast<int>(g() % 9);
    const double delta = unif(g, 0.001, 0.3);
    const double eps = unif(g, 0.0, 0.05);
    const double dt = unif(g, 0.05, 0.9);
    const ProblemSpec spec(k, delta, eps, dt);
    const std::uint64_t n = 100 + g() % 1'000'000;
    const std::uint64_t m = 1 + g() % (n - 1);
    const double ec = unif(g, 0.0, 1.0);
    const double er = unif(g, 0.0, (k - 1.0) / k);
    const double big_n = std::floor(unif(g, 1e3, 1e12));
    const double gamma = unif(g, 0.0, 0.99) * feasibility_threshold(dt);

    worst = std::max(worst, oracle::rel_err(ratt_bound_full(spec, SplitSpec(m, n), {ec, er}).total,
                                            oracle::full_bound(k, m, n, delta, ec, er)));
    worst = std::max(worst, oracle::rel_err(ratt_bound_relaxed(spec, SplitSpec(m, n), {ec, er}).total,
                                            oracle::relaxed_bound(k, m, delta, ec, er)));
    worst = std::max(worst, oracle::rel_err(supervised_ceiling(spec, big_n),
                                            oracle::supervised_ceiling(k, delta, eps, dt, big_n)));
    worst = std::max(worst, oracle::rel_err(bound_map(spec, big_n, gamma),
                                            oracle::bound_map(k, delta, eps, dt, big_n, gamma)));
    const auto total = static_cast<std::uint64_t>(big_n);
    if (max_randomized_count(total, gamma, dt) != oracle::max_randomized_count(total, gamma, dt)) {
      ++count_mismatch;
    }

    const double p = unif(g, 0.2, 0.9);
    const double c1 = unif(g, 0.001, 0.02);
    const double e_star = unif(g, 0.0, 0.3) * feasibility_threshold(dt);
    const double c2 = c1 + unif(g, 0.1, 0.6) * (feasibility_threshold(dt) - e_star - c1);
    const ConvergenceSpec conv(p, c1, c2);
    const double want = static_cast<double>(
        ceil(oracle::unlabeled_threshold(k, delta, dt, p, c1, c2, e_star)));
    const double got = static_cast<double>(min_unlabeled_for_rate(spec, conv, e_star));
    worst = std::max(worst, std::abs(got - want) / want);
  }
  const bool pass = worst <= 1e-12 && count_mismatch == 0;
  return {pass, "tuples=" + std::to_string(kTuples) + " max_rel_err=" + fmt(worst) +
                    " count_mismatches=" + std::to_string(count_mismatch)};
}

// 2. B(0) equals the supervised ceiling.
Outcome reduction_identity() {
  auto g = rng_for(2);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const ProblemSpec spec(2 + static_cast<int>(g() % 9), unif(g, 0.001, 0.3), unif(g, 0.0, 0.05),
                           unif(g, 0.05, 0.9));
    for (int j = 0; j < 10; ++j) {
      const double n = std::floor(std::pow(10.0, unif(g, 3.0, 12.0)));
      const double a = bound_map(spec, n, 0.0);
      const double b = supervised_ceiling(spec, n);
      worst = std::max(worst, std::abs(a - b) / b);
    }
  }
  return {worst <= 1e-12, "grid=10x10 max_rel_err=" + fmt(worst)};
}

// 3. B is increasing in gamma; the rate holds at the self-consistent N and is
// not asserted an order of magnitude below it.
Outcome monotonicity_and_contraction() {
  auto g = rng_for(3);
  int mono_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const double dt = unif(g, 0.05, 0.9);
    const ProblemSpec spec(2 + static_cast<int>(g() % 9), unif(g, 0.001, 0.3), unif(g, 0.0, 0.05),
                           dt);
    const double n = std::floor(std::pow(10.0, unif(g, 3.0, 12.0)));
    const double thr = feasibility_threshold(dt);
    double a = unif(g, 0.0, thr);
    double b = unif(g, 0.0, thr);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    if (!(bound_map(spec, n, a) < bound_map(spec, n, b))) ++mono_fail;
  }

  int draws = 0, rejected = 0, contraction_fail = 0, assertion_leak = 0;
  double worst_ratio = 0.0;
  while (draws < 10) {
    const double dt = unif(g, 0.1, 0.5);
    const ProblemSpec spec(2 + static_cast<int>(g() % 4), unif(g, 0.01, 0.1), unif(g, 0.001, 0.01),
                           dt);
    const double c1 = unif(g, 0.005, 0.02);
    const double c2 = c1 + unif(g, 0.2, 0.8) * (feasibility_threshold(dt) - c1 - spec.epsilon() * 8);
    if (!(c2 > c1 && c2 < 1.0)) {
      ++rejected;
      continue;
    }
    const ConvergenceSpec conv(unif(g, 0.3, 0.9), c1, c2);
    std::uint64_t n = 0;
    try {
      n = min_unlabeled_self_consistent(spec, conv);
    } catch (const InfeasibleError&) {
      ++rejected;
      continue;
    }
    ++draws;
    RateConfig at{.spec = spec, .conv = conv};
    at.total = n;
    const auto r = rate_experiment(at);
    if (!(r.asserted && r.band_entered && r.pass)) ++contraction_fail;
    worst_ratio = std::max(worst_ratio, r.max_band_ratio / conv.p());
    RateConfig below = at;
    below.total = n / 10;
    const auto s = rate_experiment(below);
    if (s.asserted || !s.pass) ++assertion_leak;
  }
  const bool pass = mono_fail == 0 && contraction_fail == 0 && assertion_leak == 0;
  return {pass, "monotone_failures=" + std::to_string(mono_fail) + "/1000 draws=10 (rejected " +
                    std::to_string(rejected) + ") contraction_failures=" +
                    std::to_string(contraction_fail) + " max_ratio_over_p=" + fmt(worst_ratio) +
                    " asserted_below_threshold=" + std::to_string(assertion_leak)};
}

// 4. B(gamma0)/E_D* falls to 1 as N grows.
Outcome limit_theorem() {
  const auto r = limit_curve(ProblemSpec(2, 0.05, 0.01, 0.2), 0.1, {1e4, 1e6, 1e8, 1e10, 1e12});
  return {r.pass && r.strictly_decreasing && r.final_gap <= 1e-3,
          "final_ratio=" + fmt(r.ratios.back()) + " gap=" + fmt(r.final_gap) +
              " strictly_decreasing=" + (r.strictly_decreasing ? "yes" : "no")};
}

// 5. Relaxed bound coverage with the oracle learner.
Outcome coverage() {
  CoverageConfig c{.spec = ProblemSpec(4, 0.05, 0.01, 0.2),
                   .learner = {.kind = LearnerKind::oracle, .oracle_epsilon = 0.01},
                   .dist = std::make_shared<const DataDistribution>(
                       DataDistribution::ring(4, 2, 20.0, 1.0))};
  c.total = 5000;
  c.trials = 200;
  c.seed = 2024;
  c.parallelism = 1;
  const auto r = coverage_experiment(c);
  return {r.pass && r.coverage >= 0.95 - 3 * std::sqrt(0.0475 / 200),
          "coverage=" + fmt(r.coverage) + " threshold=" + fmt(r.threshold) + " trials=200"};
}

// 6. Oracle learner meets its error targets on clean and randomized portions.
Outcome oracle_audit() {
  constexpr double kEps = 0.01;
  constexpr int kK = 4;
  AuditConfig c{.learner = {.kind = LearnerKind::oracle, .oracle_epsilon = kEps},
                .dist = std::make_shared<const DataDistribution>(
                    DataDistribution::ring(kK, 2, 20.0, 1.0)),
                .ratios = {0.05, 0.1, 0.2},
                .size = 10'000,
                .seed = 77};
  const auto r = assumption_audit(c);
  const double chance = 1.0 - 1.0 / kK;
  int bad = 0;
  std::string cells;
  for (const auto& cell : r.cells) {
    const double sc = std::sqrt(kEps * (1 - kEps) / static_cast<double>(cell.clean.total));
    const double sr = std::sqrt(chance * (1 - chance) / static_cast<double>(cell.random.total));
    const bool ok = !cell.skipped && std::abs(cell.clean.rate() - kEps) <= 3 * sc &&
                    std::abs(cell.random.rate() - chance) <= 3 * sr;
    if (!ok) ++bad;
    cells += " [" + fmt(cell.ratio) + ": Ec=" + fmt(cell.clean.rate()) +
             " Er=" + fmt(cell.random.rate()) + "]";
  }
  return {bad == 0 && r.cells.size() == 3, "cells_outside_3sigma=" + std::to_string(bad) + cells};
}

// 7. Engine campaign honors the mixture constraint and gate; gamma_hat trends down.
Outcome algorithm2_fidelity() {
  const auto d = std::make_shared<const DataDistribution>(DataDistribution::ring(4, 2, 20.0, 1.0));
  EngineConfig base{.spec = ProblemSpec(4, 0.05, 0.01, 0.2),
                    .learner = {.kind = LearnerKind::oracle, .oracle_epsilon = 0.01},
                    .dist = d};
  base.unlabeled_count = 20000;
  base.iterations = 5;
  base.initial = Model(OracleModel{d, 0.1, 17});
  const auto r = algorithm2_campaign(base, 20, 31337, 1);
  std::string failing;
  for (const auto& s : r.seeds) {
    if (!s.gamma_non_increasing) failing += " " + std::to_string(s.seed);
  }
  const bool pass = r.mixture_ok && r.gate_ok && r.non_increasing >= 18;
  return {pass, "mixture_ok=" + std::string(r.mixture_ok ? "yes" : "no") +
                    " gate_ok=" + (r.gate_ok ? "yes" : "no") +
                    " non_increasing=" + std::to_string(r.non_increasing) + "/20" +
                    (failing.empty() ? "" : " increasing_seeds:" + failing)};
}

// 8. Two simulate runs from one config give byte-identical CSVs.
Outcome determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "plcert_acceptance";
  fs::create_directories(dir);
  auto run_once = [&](const std::string& tag) {
    const auto csv = dir / ("traj_" + tag + ".csv");
    const nlohmann::json cfg = {
        {"seed", 4242},
        {"problem", {{"k", 4}, {"delta", 0.05}, {"epsilon", 0.01}, {"delta_tilde", 0.2}}},
        {"learner", {{"kind", "logistic"}, {"gd_steps", 100}}},
        {"distribution", {{"kind", "ring"}, {"separation", 8.0}, {"spread", 1.0}}},
        {"engine",
         {{"unlabeled_count", 5000},
          {"iterations", 3},
          {"initial_model", {{"kind", "bootstrap"}, {"labeled_count", 200}}}}},
        {"output",
         {{"trajectory_csv", csv.string()}, {"model", (dir / ("model_" + tag + ".txt")).string()}}}};
    const auto path = dir / ("sim_" + tag + ".json");
    std::ofstream(path) << cfg.dump(2);
    std::ostringstream out, err;
    const int code = cli::run({"simulate", "--config", path.string()}, out, err);
    std::ifstream in(csv, std::ios::binary);
    return std::pair{code, std::string(std::istreambuf_iterator<char>(in), {})};
  };
  const auto [ca, a] = run_once("a");
  const auto [cb, b] = run_once("b");
  const bool pass = ca == cli::kOk && cb == cli::kOk && !a.empty() && a == b;
  return {pass, "exit=" + std::to_string(ca) + "," + std::to_string(cb) +
                    " bytes=" + std::to_string(a.size()) + " identical=" + (a == b ? "yes" : "no")};
}

// 9. Concentration term halves when m quadruples; the rate threshold
// quadruples when c1 halves.
Outcome scaling_laws() {
  auto g = rng_for(9);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + static_cast<int>(g() % 9);
    const double dt = unif(g, 0.1, 0.9);
    const ProblemSpec spec(k, unif(g, 0.001, 0.3), 0.0, dt);
    const std::uint64_t m = 1 + g() % 100'000;
    const std::uint64_t n = 4 * m + 1 + g() % 1'000'000;
    const EmpiricalErrors e{0.1, 0.5};
    const double r1 = ratt_bound_relaxed(spec, SplitSpec(m, n), e).term_concentration;
    const double r4 = ratt_bound_relaxed(spec, SplitSpec(4 * m, n), e).term_concentration;
    worst = std::max(worst, std::abs(r4 / r1 - 0.5) / 0.5);
    const auto f1 = ratt_bound_full(spec, SplitSpec(m, n), e);
    const auto f4 = ratt_bound_full(spec, SplitSpec(4 * m, n), e);
    const double h = (f4.term_concentration / f4.constant_used) /
                     (f1.term_concentration / f1.constant_used);
    worst = std::max(worst, std::abs(h - 0.5) / 0.5);

    const double c1 = unif(g, 0.002, 0.02);
    const double e_star = unif(g, 0.0, 0.3) * feasibility_threshold(dt);
    const double c2 = c1 + unif(g, 0.1, 0.6) * (feasibility_threshold(dt) - e_star - c1);
    const ConvergenceSpec a(0.5, c1, c2);
    const ConvergenceSpec b(0.5, c1 / 2, c2);
    const double q = unlabeled_threshold(spec, b, e_star) / unlabeled_threshold(spec, a, e_star);
    worst = std::max(worst, std::abs(q - 4.0) / 4.0);
  }
  return {worst <= 1e-12, "tuples=20 max_rel_err=" + fmt(worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {"formula fidelity", 1.0, formula_fidelity},
      {"reduction identity", 1.0, reduction_identity},
      {"monotonicity and contraction", 10.0, monotonicity_and_contraction},
      {"limit curve", 1.0, limit_theorem},
      {"relaxed bound coverage", 300.0, coverage},
      {"oracle assumption audit", 60.0, oracle_audit},
      {"pseudo-label engine fidelity", 120.0, algorithm2_fidelity},
      {"simulate determinism", 10.0, determinism},
      {"scaling laws", 1.0, scaling_laws},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failed;
    std::printf("%s [%zu] %s (%.3fs, budget %.0fs%s) %s\n", pass ? "PASS" : "FAIL", i + 1, c.name,
                secs, c.budget_s, in_budget ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
