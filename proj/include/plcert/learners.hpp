#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "plcert/datagen.hpp"

namespace plcert {

enum class LearnerKind { oracle, nearest_centroid, logistic };

std::string_view to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(std::string_view s);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::oracle;
  double oracle_epsilon = 0.0;
  int gd_steps = 500;
  double gd_learning_rate = 0.1;
  double gd_l2 = 1e-4;
  std::uint64_t seed = 0;

  // Throws PreconditionError on out-of-range settings.
  void validate() const;
};

// Predicts the distribution's Bayes class, except that each point is flipped
// to one of the other k-1 classes with probability `epsilon`. The flip is a
// deterministic hash of (feature bits, seed), so predictions are repeatable
// and independent across distinct points.
struct OracleModel {
  std::shared_ptr<const DataDistribution> dist;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct CentroidModel {
  // Row c is the centroid of class c; classes absent from training are never predicted.
  Eigen::MatrixXd centroids;
  std::vector<bool> present;
};

struct LogisticModel {
  Eigen::MatrixXd weights;  // k x dim
  Eigen::VectorXd bias;     // k

  // Zero weights with bias one-hot on `cls`: a constant-class predictor.
  static LogisticModel constant(int k, int dim, int cls);
};

class Model {
 public:
  using Params = std::variant<OracleModel, CentroidModel, LogisticModel>;

  explicit Model(Params params);

  LearnerKind kind() const noexcept;
  int k() const noexcept { return k_; }
  int dim() const noexcept { return dim_; }
  const Params& params() const noexcept { return params_; }

  // Argmax prediction, ties to the lowest class index.
  // Throws PreconditionError on dimension mismatch.
  int predict(std::span<const double> features) const;

 private:
  Params params_;
  int k_;
  int dim_;
};

// Trains a model on `train` under its current labels.
// Throws FitError for an empty set or a non-finite logistic loss.
Model fit(const LearnerConfig& config, const Dataset& train);

using ProvenanceFilter = std::function<bool(Provenance)>;

inline bool any_provenance(Provenance) { return true; }

// Fraction of filtered examples whose prediction differs from the assigned
// label. Throws PreconditionError if the filter selects nothing.
double empirical_error(const Model& model, const Dataset& data,
                       const ProvenanceFilter& filter = any_provenance);

struct ErrorCount {
  std::size_t errors = 0;
  std::size_t total = 0;

  double rate() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
  }
  double std_error() const noexcept;
};

ErrorCount count_errors(const Model& model, const Dataset& data,
                        const ProvenanceFilter& filter = any_provenance);

// Error against the true component label on `count` fresh draws, streamed
// without materializing a dataset.
ErrorCount population_risk(const Model& model, const DataDistribution& dist, std::size_t count,
                           std::uint64_t seed);

// Plain-text model format:
//   plcert-model 1
//   kind <oracle|nearest_centroid|logistic>
//   k <k> dim <dim>
//   ... kind-specific blocks (see docs/formats.md)
void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);

}  // namespace plcert
