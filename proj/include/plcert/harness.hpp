#pragma once

// Experiment campaigns that turn the bounds and assumptions into statistical
// pass/fail reports. Every pass rule uses a fixed 3-standard-error tolerance.
//
// Seeds: trial t of a campaign with seed s runs with
// derive_seed(s, stream::kTrial, t); see rng.hpp for the splitting rule.
// Trials are independent, so `parallelism` only changes wall-clock time.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plcert/bounds.hpp"
#include "plcert/datagen.hpp"
#include "plcert/engine.hpp"
#include "plcert/learners.hpp"

namespace plcert {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultRiskSamples = 100'000;

// 1 - delta - 3 sqrt(delta (1 - delta) / trials).
double coverage_pass_threshold(double delta, int trials);

// ---------------------------------------------------------------------------
// Coverage of the relaxed bound

struct CoverageConfig {
  ProblemSpec spec;
  LearnerConfig learner;
  std::shared_ptr<const DataDistribution> dist;
  std::uint64_t total = 0;  // N examples per trial, split by optimal_split
  int trials = 100;
  std::uint64_t seed = 0;
  std::uint64_t risk_samples = kDefaultRiskSamples;
  int parallelism = 1;
};

struct CoverageTrial {
  std::uint64_t seed = 0;
  double e_clean = 0.0;
  double e_random = 0.0;
  double bound = 0.0;
  double true_risk = 0.0;
  bool violated = false;
};

struct CoverageReport {
  int trials = 0;
  int violations = 0;
  double coverage = 0.0;
  double target = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  std::vector<CoverageTrial> details;
};

// Throws PreconditionError (before any trial) when the split is infeasible.
CoverageReport coverage_experiment(const CoverageConfig& config);

// ---------------------------------------------------------------------------
// Assumption audit

struct AuditConfig {
  LearnerConfig learner;
  std::shared_ptr<const DataDistribution> dist;
  std::vector<double> ratios;
  std::uint64_t size = 10'000;  // clean examples per cell; m = floor(ratio * size)
  std::uint64_t seed = 0;
  int parallelism = 1;
  // Optional (epsilon, delta_tilde) pair the frontier must admit for pass.
  std::optional<double> target_epsilon;
  std::optional<double> target_delta_tilde;
};

struct AuditCell {
  double ratio = 0.0;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  bool skipped = false;  // m == 0: no randomized subset to measure
  ErrorCount clean;
  ErrorCount random;
  // Smallest epsilon consistent with both inequalities within 3 standard errors.
  double epsilon_needed = 0.0;
  // Mislabel audit: training error on the mislabeled portion vs a fresh
  // mislabeled population sample, for a model trained on clean + mislabeled.
  ErrorCount mislabeled_train;
  ErrorCount mislabeled_population;
  bool overfit_direction_holds = true;
};

struct FrontierPoint {
  double delta_tilde = 0.0;
  double epsilon = 0.0;  // smallest epsilon valid for every cell with ratio <= delta_tilde
};

struct AuditReport {
  std::vector<AuditCell> cells;
  std::vector<FrontierPoint> frontier;
  double max_delta_tilde = 0.0;
  double epsilon_at_max = 0.0;
  bool assumption1_holds = true;
  bool target_admitted = true;
  bool pass = false;
};

// Throws PreconditionError for an empty grid, ratios outside [0,1), or size < 10^3.
AuditReport assumption_audit(const AuditConfig& config);

// ---------------------------------------------------------------------------
// Limit curve

struct LimitCurve {
  double gamma0 = 0.0;
  std::vector<double> n_grid;
  std::vector<double> ratios;  // B(gamma0, N) / E_D*(N)
  bool strictly_decreasing = false;
  bool bounded_below_by_one = false;
  double final_gap = 0.0;  // |ratios.back() - 1|
  double tolerance = 1e-3;
  bool pass = false;
  std::string note;
};

LimitCurve limit_curve(const ProblemSpec& spec, double gamma0, const std::vector<double>& n_grid,
                       double tolerance = 1e-3);

// ---------------------------------------------------------------------------
// Convergence rate

enum class RateMode { bound_map, empirical };

struct RateConfig {
  ProblemSpec spec;
  ConvergenceSpec conv;
  std::uint64_t total = 0;
  RateMode mode = RateMode::bound_map;
  std::optional<double> gamma0;  // default E_D* + c2
  int max_steps = 64;
  // Required in empirical mode; its unlabeled_count is replaced by `total`.
  std::optional<EngineConfig> engine;
};

struct RateReport {
  std::uint64_t total = 0;
  std::optional<std::uint64_t> threshold;  // min_unlabeled_self_consistent, when it exists
  double p = 0.0;
  double e_d_star = 0.0;
  double band_low = 0.0;
  double band_high = 0.0;
  std::vector<double> bound_trajectory;
  std::vector<double> band_ratios;  // ratios whose starting iterate lies in the band
  std::vector<double> empirical_trajectory;
  std::vector<double> empirical_ratios;
  double max_band_ratio = 0.0;
  bool band_entered = false;
  bool asserted = false;  // the rate claim only applies at or above the threshold
  bool pass = false;
  std::string note;
};

RateReport rate_experiment(const RateConfig& config);

// ---------------------------------------------------------------------------
// Pseudo-label engine campaign

struct EngineSeedResult {
  std::uint64_t seed = 0;
  HaltReason halt = HaltReason::completed;
  std::vector<double> gamma_hats;
  bool gamma_non_increasing = true;
  bool mixture_ok = true;
  bool gate_ok = true;
  bool bound_order_ok = true;  // bound_empirical <= bound_predicted + 3 sigma
  int bound_checks = 0;
  int violations = 0;  // true risk above bound_empirical
  double max_realized_ratio = 0.0;
};

struct EngineCampaignReport {
  std::vector<EngineSeedResult> seeds;
  int non_increasing = 0;
  bool mixture_ok = true;
  bool gate_ok = true;
  int bound_checks = 0;
  int violations = 0;
  double violation_fraction = 0.0;
  double violation_allowance = 0.0;
  bool applicability_pass = false;
};

// Runs run_algorithm2 once per seed; each run uses derive_seed(seed, kTrial, s)
// and a learner seed derived from it. Forces audit_count to at least
// risk_samples so bound applicability can be checked.
EngineCampaignReport algorithm2_campaign(const EngineConfig& base, int seeds, std::uint64_t seed,
                                         int parallelism = 1,
                                         std::uint64_t risk_samples = kDefaultRiskSamples);

// ---------------------------------------------------------------------------
// Output

nlohmann::json to_json(const CoverageReport& r);
nlohmann::json to_json(const AuditReport& r);
nlohmann::json to_json(const LimitCurve& r);
nlohmann::json to_json(const RateReport& r);
nlohmann::json to_json(const EngineCampaignReport& r);

void print_table(std::ostream& out, const CoverageReport& r);
void print_table(std::ostream& out, const AuditReport& r);
void print_table(std::ostream& out, const LimitCurve& r);
void print_table(std::ostream& out, const RateReport& r);

}  // namespace plcert
