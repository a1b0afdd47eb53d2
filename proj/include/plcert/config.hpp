#pragma once

// Strict JSON run configuration. Every object rejects keys it does not know,
// and every parsed section is echoed back with defaults filled in so output
// artifacts can embed the fully resolved configuration.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "plcert/bounds.hpp"
#include "plcert/datagen.hpp"
#include "plcert/engine.hpp"
#include "plcert/harness.hpp"
#include "plcert/learners.hpp"

namespace plcert::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using nlohmann::json;

ProblemSpec parse_problem(const json& j, json& resolved);
ConvergenceSpec parse_convergence(const json& j, json& resolved);
LearnerConfig parse_learner(const json& j, json& resolved);
// `k` supplies the class count when the section omits it.
std::shared_ptr<const DataDistribution> parse_distribution(const json& j, std::optional<int> k,
                                                           json& resolved);

struct SimulateConfig {
  int algorithm = 2;
  EngineConfig engine;
  std::string trajectory_csv;
  std::string model_path;
  json resolved;
};

SimulateConfig parse_simulate(const json& j);

enum class Campaign { coverage, audit, limit, rate, algorithm2 };

struct VerifyConfig {
  Campaign campaign = Campaign::coverage;
  std::uint64_t seed = 0;
  std::optional<int> parallelism;
  std::string report_path;
  std::optional<CoverageConfig> coverage;
  std::optional<AuditConfig> audit;
  struct Limit {
    ProblemSpec spec;
    double gamma0;
    std::vector<double> n_grid;
    double tolerance;
  };
  std::optional<Limit> limit;
  std::optional<RateConfig> rate;
  struct Algorithm2 {
    EngineConfig engine;
    int seeds;
    std::uint64_t risk_samples;
  };
  std::optional<Algorithm2> algorithm2;
  json resolved;
};

VerifyConfig parse_verify(const json& j);

// Reads and parses a JSON file; malformed JSON becomes ConfigError.
json load_json_file(const std::string& path);

}  // namespace plcert::config
