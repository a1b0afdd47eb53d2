#pragma once

// Executable pseudo-label iterations. run_algorithm1 is the plain loop
// (pseudo-label, retrain). run_algorithm2 adds the risk estimate, the
// feasibility gate and the randomized subset that makes each iteration
// certifiable by the relaxed bound.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "plcert/bounds.hpp"
#include "plcert/datagen.hpp"
#include "plcert/learners.hpp"

namespace plcert {

struct MPolicy {
  enum class Kind { max_allowed, fixed, fraction };

  Kind kind = Kind::max_allowed;
  std::uint64_t fixed_m = 0;
  double fraction = 1.0;

  static MPolicy max_allowed() { return {}; }
  static MPolicy fixed(std::uint64_t m) { return {Kind::fixed, m, 1.0}; }
  static MPolicy of_max(double f) { return {Kind::fraction, 0, f}; }

  // m for this iteration given the admissible maximum.
  std::uint64_t resolve(std::uint64_t max_allowed) const;
};

std::string_view to_string(MPolicy::Kind kind);

// f0 is either given or fitted by the configured learner on this many clean
// labeled draws.
struct BootstrapInit {
  std::uint64_t labeled_count = 0;
};

using InitialModel = std::variant<Model, BootstrapInit>;

struct EngineConfig {
  ProblemSpec spec;
  LearnerConfig learner;
  std::shared_ptr<const DataDistribution> dist;
  std::uint64_t unlabeled_count = 0;
  std::uint64_t test_count = 1000;
  int iterations = 1;
  MPolicy m_policy;
  InitialModel initial = BootstrapInit{};
  std::uint64_t seed = 0;
  // When non-zero, the risk of every trained model is also measured against
  // true labels on this many fresh draws (stored in TrajectoryRecord::true_risk).
  std::uint64_t audit_count = 0;

  // Throws PreconditionError when an invariant fails.
  void validate() const;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct TrajectoryRecord {
  int i = 0;
  double gamma_hat = kMissing;
  double gamma_std_error = kMissing;
  std::uint64_t m_used = 0;
  std::uint64_t m_max = 0;
  double e_clean = kMissing;
  double e_clean_std_error = kMissing;
  double e_random = kMissing;
  double e_random_std_error = kMissing;
  double bound_empirical = kMissing;
  double bound_empirical_sigma = kMissing;
  double bound_predicted = kMissing;
  bool feasible = false;
  // Counts over the examples that were not randomized.
  std::uint64_t pseudo_correct = 0;
  std::uint64_t pseudo_wrong = 0;
  double true_risk = kMissing;
};

enum class HaltReason { completed, infeasible_gamma, m_zero };

std::string_view to_string(HaltReason r);

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::optional<Model> final_model;
  HaltReason halt_reason = HaltReason::completed;
  // Each recorded iteration applies the relaxed bound once at confidence 1 - delta;
  // no composed confidence is claimed.
  int bound_applications = 0;
  double per_application_delta = 0.0;
};

// (m + gamma (N - m)) / ((1 - gamma)(N - m)): noisy-to-correct label ratio the
// algorithm targets after randomizing m of N pseudo labels at risk gamma.
double mixture_ratio(std::uint64_t m, std::uint64_t total, double gamma);

// True when mixture_ratio(m, N, gamma) <= delta_tilde allowing one example of
// slack in the numerator.
bool mixture_constraint_holds(std::uint64_t m, std::uint64_t total, double gamma,
                              double delta_tilde);

// Throws FitError (with the iteration index) when the learner fails.
Trajectory run_algorithm1(const EngineConfig& config);
Trajectory run_algorithm2(const EngineConfig& config);

// CSV: header `i,gamma_hat,m_used,e_clean,e_random,bound_empirical,bound_predicted,feasible`,
// one row per record; missing values are empty cells.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace plcert
