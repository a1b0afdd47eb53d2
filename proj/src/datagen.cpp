#include "plcert/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "plcert/errors.hpp"
#include "plcert/learners.hpp"

namespace plcert {
namespace {

void append_double(std::ostringstream& os, double v) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
}

// Partial Fisher-Yates: the first `count` entries of the result are a uniform
// draw without replacement from [0, size).
std::vector<std::size_t> choose_indices(std::size_t size, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  return idx;
}

void check_count(const Dataset& data, std::size_t count) {
  if (count > data.size()) {
    throw PreconditionError("cannot corrupt " + std::to_string(count) + " of " +
                            std::to_string(data.size()) + " examples");
  }
}

}  // namespace

DataDistribution::DataDistribution(std::vector<std::vector<double>> centers,
                                   std::vector<double> spreads, std::vector<double> priors)
    : centers_(std::move(centers)), spreads_(std::move(spreads)), priors_(std::move(priors)) {
  const std::size_t k = centers_.size();
  if (k < 2) throw PreconditionError("a distribution needs at least 2 classes");
  const std::size_t dim = centers_.front().size();
  if (dim == 0) throw PreconditionError("feature dimension must be >= 1");
  for (const auto& c : centers_) {
    if (c.size() != dim) throw PreconditionError("all centers must share one dimension");
    for (double v : c) {
      if (!std::isfinite(v)) throw PreconditionError("centers must be finite");
    }
  }
  if (spreads_.size() == 1) spreads_.assign(k, spreads_.front());
  if (spreads_.size() != k) throw PreconditionError("need one spread per class");
  for (double s : spreads_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw PreconditionError("spreads must be > 0");
  }
  if (priors_.empty()) priors_.assign(k, 1.0 / static_cast<double>(k));
  if (priors_.size() != k) throw PreconditionError("need one prior per class");
  double total = 0.0;
  for (double p : priors_) {
    if (!(p >= 0.0)) throw PreconditionError("priors must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw PreconditionError("priors must sum to 1 within 1e-12");
  }
}

DataDistribution DataDistribution::ring(int k, int dim, double separation, double spread) {
  if (k < 2 || dim < 1) throw PreconditionError("ring needs k >= 2 and dim >= 1");
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(k),
                                           std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  if (dim == 1) {
    for (int c = 0; c < k; ++c) centers[c][0] = separation * c;
  } else {
    const double radius = separation / (2.0 * std::sin(std::numbers::pi / k));
    for (int c = 0; c < k; ++c) {
      const double angle = 2.0 * std::numbers::pi * c / k;
      centers[c][0] = radius * std::cos(angle);
      centers[c][1] = radius * std::sin(angle);
    }
  }
  return DataDistribution(std::move(centers), {spread}, {});
}

std::string DataDistribution::id() const {
  std::ostringstream os;
  os << "gmix(k=" << k() << ",dim=" << dim() << ",centers=[";
  for (std::size_t c = 0; c < centers_.size(); ++c) {
    os << (c ? ";" : "");
    for (std::size_t j = 0; j < centers_[c].size(); ++j) {
      os << (j ? " " : "");
      append_double(os, centers_[c][j]);
    }
  }
  os << "],spreads=[";
  for (std::size_t c = 0; c < spreads_.size(); ++c) {
    os << (c ? " " : "");
    append_double(os, spreads_[c]);
  }
  os << "],priors=[";
  for (std::size_t c = 0; c < priors_.size(); ++c) {
    os << (c ? " " : "");
    append_double(os, priors_[c]);
  }
  os << "])";
  return os.str();
}

int DataDistribution::bayes_class(std::span<const double> x) const {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  const double d = static_cast<double>(dim());
  for (int c = 0; c < k(); ++c) {
    if (priors_[c] <= 0.0) continue;
    double dist2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - centers_[c][j];
      dist2 += diff * diff;
    }
    const double s = spreads_[c];
    const double score = std::log(priors_[c]) - d * std::log(s) - dist2 / (2.0 * s * s);
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

int DataDistribution::draw(Rng& rng, std::vector<double>& features) const {
  std::discrete_distribution<int> pick(priors_.begin(), priors_.end());
  const int c = pick(rng);
  std::normal_distribution<double> noise(0.0, spreads_[c]);
  features.resize(static_cast<std::size_t>(dim()));
  for (int j = 0; j < dim(); ++j) features[j] = centers_[c][j] + noise(rng);
  return c;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::clean: return "clean";
    case Provenance::pseudo_correct: return "pseudo_correct";
    case Provenance::pseudo_wrong: return "pseudo_wrong";
    case Provenance::randomized: return "randomized";
    case Provenance::mislabeled: return "mislabeled";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::clean, Provenance::pseudo_correct, Provenance::pseudo_wrong,
                 Provenance::randomized, Provenance::mislabeled}) {
    if (to_string(p) == s) return p;
  }
  throw PreconditionError("unknown provenance '" + std::string(s) + "'");
}

ProvenanceCounts Dataset::counts() const {
  ProvenanceCounts out;
  for (const auto& ex : examples) {
    switch (ex.provenance) {
      case Provenance::clean: ++out.clean; break;
      case Provenance::pseudo_correct: ++out.pseudo_correct; break;
      case Provenance::pseudo_wrong: ++out.pseudo_wrong; break;
      case Provenance::randomized: ++out.randomized; break;
      case Provenance::mislabeled: ++out.mislabeled; break;
    }
  }
  return out;
}

Dataset sample(std::shared_ptr<const DataDistribution> dist, std::size_t count,
               std::uint64_t seed) {
  if (!dist) throw PreconditionError("sample needs a distribution");
  if (count == 0) throw PreconditionError("sample count must be >= 1");
  Dataset out;
  out.k = dist->k();
  out.dim = dist->dim();
  out.origin_seed = seed;
  out.distribution_id = dist->id();
  out.examples.resize(count);
  Rng rng(seed);
  for (auto& ex : out.examples) {
    ex.true_label = dist->draw(rng, ex.features);
    ex.label = ex.true_label;
    ex.provenance = Provenance::clean;
  }
  out.source = std::move(dist);
  return out;
}

Dataset sample(const DataDistribution& dist, std::size_t count, std::uint64_t seed) {
  return sample(std::make_shared<const DataDistribution>(dist), count, seed);
}

Dataset randomize_labels(Dataset data, std::size_t count, int k, std::uint64_t seed) {
  check_count(data, count);
  if (k < 2) throw PreconditionError("k must be >= 2");
  Rng rng(seed);
  std::uniform_int_distribution<int> label(0, k - 1);
  for (std::size_t i : choose_indices(data.size(), count, rng)) {
    auto& ex = data.examples[i];
    ex.label = label(rng);
    ex.provenance = Provenance::randomized;
  }
  return data;
}

Dataset mislabel(Dataset data, std::size_t count, int k, std::uint64_t seed) {
  check_count(data, count);
  if (k < 2) throw PreconditionError("k must be >= 2");
  Rng rng(seed);
  std::uniform_int_distribution<int> offset(1, k - 1);
  for (std::size_t i : choose_indices(data.size(), count, rng)) {
    auto& ex = data.examples[i];
    ex.label = (ex.true_label + offset(rng)) % k;
    ex.provenance = Provenance::mislabeled;
  }
  return data;
}

Dataset apply_pseudo_labels(Dataset data, const Model& model) {
  if (model.dim() != data.dim) {
    throw PreconditionError("model dimension " + std::to_string(model.dim()) +
                            " does not match data dimension " + std::to_string(data.dim));
  }
  for (auto& ex : data.examples) {
    ex.label = model.predict(ex.features);
    ex.provenance =
        ex.label == ex.true_label ? Provenance::pseudo_correct : Provenance::pseudo_wrong;
  }
  return data;
}

RiskEstimate estimate_bayes_risk(const DataDistribution& dist, std::size_t samples,
                                 std::uint64_t seed) {
  if (samples < 10'000) throw PreconditionError("Bayes risk estimate needs >= 10^4 samples");
  Rng rng(seed);
  std::vector<double> x;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const int c = dist.draw(rng, x);
    if (dist.bayes_class(x) != c) ++errors;
  }
  RiskEstimate out;
  out.samples = samples;
  out.value = static_cast<double>(errors) / static_cast<double>(samples);
  out.std_error = std::sqrt(out.value * (1.0 - out.value) / static_cast<double>(samples));
  return out;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "# plcert-dataset v1 k=" << data.k << " dim=" << data.dim
      << " seed=" << data.origin_seed << " distribution=" << data.distribution_id << '\n';
  for (int j = 0; j < data.dim; ++j) out << 'x' << j << ',';
  out << "label,true_label,provenance\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& ex : data.examples) {
    for (double v : ex.features) out << v << ',';
    out << ex.label << ',' << ex.true_label << ',' << to_string(ex.provenance) << '\n';
  }
}

namespace {

std::string_view meta_value(std::string_view line, std::string_view key) {
  const auto pos = line.find(key);
  if (pos == std::string_view::npos) throw PreconditionError("dataset header lacks " + std::string(key));
  auto rest = line.substr(pos + key.size());
  if (key == "distribution=") return rest;
  return rest.substr(0, rest.find(' '));
}

template <typename T>
T parse_number(std::string_view s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw PreconditionError("malformed number '" + std::string(s) + "' in dataset");
  }
  return v;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("# plcert-dataset v1")) {
    throw PreconditionError("not a plcert dataset (bad metadata line)");
  }
  Dataset data;
  data.k = parse_number<int>(meta_value(line, "k="));
  data.dim = parse_number<int>(meta_value(line, "dim="));
  data.origin_seed = parse_number<std::uint64_t>(meta_value(line, "seed="));
  data.distribution_id = std::string(meta_value(line, "distribution="));
  if (!std::getline(in, line)) throw PreconditionError("dataset lacks a column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != static_cast<std::size_t>(data.dim) + 3) {
      throw PreconditionError("dataset row has " + std::to_string(cells.size()) + " cells");
    }
    LabeledExample ex;
    ex.features.reserve(static_cast<std::size_t>(data.dim));
    for (int j = 0; j < data.dim; ++j) ex.features.push_back(parse_number<double>(cells[j]));
    ex.label = parse_number<int>(cells[data.dim]);
    ex.true_label = parse_number<int>(cells[data.dim + 1]);
    ex.provenance = provenance_from_string(cells[data.dim + 2]);
    data.examples.push_back(std::move(ex));
  }
  return data;
}

}  // namespace plcert
