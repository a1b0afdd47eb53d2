#pragma once

// Synthetic Gaussian-mixture classification data and the three label
// corruption mechanisms: pseudo labels, uniform random labels, and
// uniform-over-wrong-classes mislabels.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plcert/rng.hpp"

namespace plcert {

class Model;

// Isotropic Gaussian mixture: class c has mean centers[c] and standard
// deviation spreads[c] in every coordinate.
class DataDistribution {
 public:
  DataDistribution(std::vector<std::vector<double>> centers, std::vector<double> spreads,
                   std::vector<double> priors);

  // k centers on a circle in the first two coordinates (a line when dim == 1),
  // adjacent centers `separation` apart, common spread, uniform priors.
  static DataDistribution ring(int k, int dim, double separation, double spread);

  int k() const noexcept { return static_cast<int>(centers_.size()); }
  int dim() const noexcept { return static_cast<int>(centers_.front().size()); }
  const std::vector<std::vector<double>>& centers() const noexcept { return centers_; }
  const std::vector<double>& spreads() const noexcept { return spreads_; }
  const std::vector<double>& priors() const noexcept { return priors_; }

  // Stable textual identity (parameters rendered with round-trip precision).
  std::string id() const;

  // Bayes-optimal class for x: argmax_c log prior_c - dim log s_c - |x - mu_c|^2 / (2 s_c^2),
  // ties to the lowest index. This is the distribution's true labeling rule.
  int bayes_class(std::span<const double> x) const;

  // Draws one (features, component) pair.
  int draw(Rng& rng, std::vector<double>& features) const;

  friend bool operator==(const DataDistribution&, const DataDistribution&) = default;

 private:
  std::vector<std::vector<double>> centers_;
  std::vector<double> spreads_;
  std::vector<double> priors_;
};

enum class Provenance : std::uint8_t {
  clean,
  pseudo_correct,
  pseudo_wrong,
  randomized,
  mislabeled,
};

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
  int true_label = 0;
  Provenance provenance = Provenance::clean;
};

struct ProvenanceCounts {
  std::size_t clean = 0;
  std::size_t pseudo_correct = 0;
  std::size_t pseudo_wrong = 0;
  std::size_t randomized = 0;
  std::size_t mislabeled = 0;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  int k = 0;
  int dim = 0;
  std::uint64_t origin_seed = 0;
  std::string distribution_id;
  // Generating distribution, when known. Shared and immutable.
  std::shared_ptr<const DataDistribution> source;

  std::size_t size() const noexcept { return examples.size(); }
  ProvenanceCounts counts() const;
};

// `count` i.i.d. clean examples. Throws PreconditionError for count == 0.
Dataset sample(const DataDistribution& dist, std::size_t count, std::uint64_t seed);
Dataset sample(std::shared_ptr<const DataDistribution> dist, std::size_t count,
               std::uint64_t seed);

// Picks `count` distinct examples uniformly and gives each a label uniform over
// all k classes; provenance becomes randomized.
Dataset randomize_labels(Dataset data, std::size_t count, int k, std::uint64_t seed);

// Picks `count` distinct examples uniformly and gives each a label uniform over
// the k-1 classes other than true_label; provenance becomes mislabeled.
Dataset mislabel(Dataset data, std::size_t count, int k, std::uint64_t seed);

// Replaces every label with the model's prediction and tags it
// pseudo_correct or pseudo_wrong against true_label.
Dataset apply_pseudo_labels(Dataset data, const Model& model);

struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// Monte-Carlo risk of the Bayes classifier. Requires samples >= 10^4.
RiskEstimate estimate_bayes_risk(const DataDistribution& dist, std::size_t samples,
                                 std::uint64_t seed);

// Columnar text: a '#' metadata line, a column header
// `x0,...,x{dim-1},label,true_label,provenance`, then one row per example.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);

}  // namespace plcert
