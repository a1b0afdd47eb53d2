#include "plcert/learners.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "plcert/errors.hpp"
#include "plcert/rng.hpp"

namespace plcert {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

int oracle_predict(const OracleModel& m, std::span<const double> x) {
  const int base = m.dist->bayes_class(x);
  if (m.epsilon <= 0.0) return base;
  std::uint64_t h = mix64(m.seed);
  for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u >= m.epsilon) return base;
  const int k = m.dist->k();
  const auto offset = 1 + static_cast<int>(mix64(h ^ 0x5bd1e995ULL) % static_cast<std::uint64_t>(k - 1));
  return (base + offset) % k;
}

int centroid_predict(const CentroidModel& m, std::span<const double> x) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  for (Eigen::Index c = 0; c < m.centroids.rows(); ++c) {
    if (!m.present[static_cast<std::size_t>(c)]) continue;
    const double d = (m.centroids.row(c).transpose() - v).squaredNorm();
    if (best < 0 || d < best_d) {
      best = static_cast<int>(c);
      best_d = d;
    }
  }
  return best;
}

int logistic_predict(const LogisticModel& m, std::span<const double> x) {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd scores = m.weights * v + m.bias;
  int best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = static_cast<int>(c);
  }
  return best;
}

void check_labels(const Dataset& train) {
  if (train.examples.empty()) throw FitError("cannot fit on an empty training set");
  if (train.k < 2) throw FitError("training set must declare k >= 2");
  for (const auto& ex : train.examples) {
    if (ex.label < 0 || ex.label >= train.k) {
      throw FitError("label " + std::to_string(ex.label) + " outside [0, k)");
    }
    if (static_cast<int>(ex.features.size()) != train.dim) {
      throw FitError("example dimension does not match dataset dimension");
    }
  }
}

Model fit_centroid(const Dataset& train) {
  CentroidModel m;
  m.centroids = Eigen::MatrixXd::Zero(train.k, train.dim);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(train.k);
  for (const auto& ex : train.examples) {
    const Eigen::Map<const Eigen::RowVectorXd> v(ex.features.data(), train.dim);
    m.centroids.row(ex.label) += v;
    counts[ex.label] += 1.0;
  }
  m.present.assign(static_cast<std::size_t>(train.k), false);
  for (int c = 0; c < train.k; ++c) {
    if (counts[c] > 0.0) {
      m.centroids.row(c) /= counts[c];
      m.present[static_cast<std::size_t>(c)] = true;
    }
  }
  return Model(std::move(m));
}

Model fit_logistic(const LearnerConfig& config, const Dataset& train) {
  const auto n = static_cast<Eigen::Index>(train.size());
  const int k = train.k;
  const int d = train.dim;
  Eigen::MatrixXd x(n, d);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ex = train.examples[static_cast<std::size_t>(i)];
    for (int j = 0; j < d; ++j) x(i, j) = ex.features[static_cast<std::size_t>(j)];
    y(i, ex.label) = 1.0;
  }

  LogisticModel m;
  m.weights = Eigen::MatrixXd::Zero(k, d);
  m.bias = Eigen::VectorXd::Zero(k);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int step = 0; step < config.gd_steps; ++step) {
    Eigen::MatrixXd logits = x * m.weights.transpose();
    logits.rowwise() += m.bias.transpose();
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    logits.colwise() -= row_max;
    Eigen::MatrixXd prob = logits.array().exp().matrix();
    const Eigen::VectorXd row_sum = prob.rowwise().sum();
    // Cross-entropy: -(logit_y - logsumexp).
    const double ce =
        -((logits.cwiseProduct(y)).rowwise().sum() - row_sum.array().log().matrix()).sum() * inv_n;
    const double loss = ce + 0.5 * config.gd_l2 * m.weights.squaredNorm();
    if (!std::isfinite(loss)) {
      throw FitError("logistic loss became non-finite at step " + std::to_string(step));
    }
    prob.array().colwise() /= row_sum.array();
    const Eigen::MatrixXd resid = prob - y;
    const Eigen::MatrixXd grad_w = resid.transpose() * x * inv_n + config.gd_l2 * m.weights;
    const Eigen::VectorXd grad_b = resid.colwise().sum().transpose() * inv_n;
    m.weights -= config.gd_learning_rate * grad_w;
    m.bias -= config.gd_learning_rate * grad_b;
  }
  if (!m.weights.allFinite() || !m.bias.allFinite()) {
    throw FitError("logistic weights became non-finite at step " +
                   std::to_string(config.gd_steps));
  }
  return Model(std::move(m));
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::oracle: return "oracle";
    case LearnerKind::nearest_centroid: return "nearest_centroid";
    case LearnerKind::logistic: return "logistic";
  }
  return "unknown";
}

LearnerKind learner_kind_from_string(std::string_view s) {
  for (auto k : {LearnerKind::oracle, LearnerKind::nearest_centroid, LearnerKind::logistic}) {
    if (to_string(k) == s) return k;
  }
  throw PreconditionError("unknown learner kind '" + std::string(s) + "'");
}

void LearnerConfig::validate() const {
  if (!(oracle_epsilon >= 0.0 && oracle_epsilon < 1.0)) {
    throw PreconditionError("oracle_epsilon must lie in [0,1)");
  }
  if (gd_steps <= 0) throw PreconditionError("gd_steps must be positive");
  if (!(gd_learning_rate > 0.0)) throw PreconditionError("gd_learning_rate must be positive");
  if (!(gd_l2 > 0.0)) throw PreconditionError("gd_l2 must be positive");
}

LogisticModel LogisticModel::constant(int k, int dim, int cls) {
  if (k < 2 || dim < 1 || cls < 0 || cls >= k) {
    throw PreconditionError("constant model needs k >= 2, dim >= 1 and 0 <= class < k");
  }
  LogisticModel m;
  m.weights = Eigen::MatrixXd::Zero(k, dim);
  m.bias = Eigen::VectorXd::Zero(k);
  m.bias[cls] = 1.0;
  return m;
}

Model::Model(Params params) : params_(std::move(params)) {
  std::visit(overloaded{
                 [this](const OracleModel& m) {
                   if (!m.dist) throw PreconditionError("oracle model needs a distribution");
                   k_ = m.dist->k();
                   dim_ = m.dist->dim();
                 },
                 [this](const CentroidModel& m) {
                   if (m.present.size() != static_cast<std::size_t>(m.centroids.rows())) {
                     throw PreconditionError("centroid presence flags do not match rows");
                   }
                   k_ = static_cast<int>(m.centroids.rows());
                   dim_ = static_cast<int>(m.centroids.cols());
                 },
                 [this](const LogisticModel& m) {
                   if (m.bias.size() != m.weights.rows()) {
                     throw PreconditionError("logistic bias length does not match weights");
                   }
                   k_ = static_cast<int>(m.weights.rows());
                   dim_ = static_cast<int>(m.weights.cols());
                 },
             },
             params_);
}

LearnerKind Model::kind() const noexcept {
  return std::visit(overloaded{
                        [](const OracleModel&) { return LearnerKind::oracle; },
                        [](const CentroidModel&) { return LearnerKind::nearest_centroid; },
                        [](const LogisticModel&) { return LearnerKind::logistic; },
                    },
                    params_);
}

int Model::predict(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != dim_) {
    throw PreconditionError("feature dimension " + std::to_string(features.size()) +
                            " does not match model dimension " + std::to_string(dim_));
  }
  return std::visit(overloaded{
                        [&](const OracleModel& m) { return oracle_predict(m, features); },
                        [&](const CentroidModel& m) { return centroid_predict(m, features); },
                        [&](const LogisticModel& m) { return logistic_predict(m, features); },
                    },
                    params_);
}

Model fit(const LearnerConfig& config, const Dataset& train) {
  config.validate();
  check_labels(train);
  switch (config.kind) {
    case LearnerKind::oracle:
      if (!train.source) throw FitError("oracle learner needs the generating distribution");
      // Labels are ignored on purpose: the oracle's behaviour is fixed by construction.
      return Model(OracleModel{train.source, config.oracle_epsilon, config.seed});
    case LearnerKind::nearest_centroid:
      return fit_centroid(train);
    case LearnerKind::logistic:
      return fit_logistic(config, train);
  }
  throw FitError("unknown learner kind");
}

double ErrorCount::std_error() const noexcept {
  if (total == 0) return 0.0;
  const double r = rate();
  return std::sqrt(r * (1.0 - r) / static_cast<double>(total));
}

ErrorCount count_errors(const Model& model, const Dataset& data, const ProvenanceFilter& filter) {
  ErrorCount out;
  for (const auto& ex : data.examples) {
    if (!filter(ex.provenance)) continue;
    ++out.total;
    if (model.predict(ex.features) != ex.label) ++out.errors;
  }
  return out;
}

double empirical_error(const Model& model, const Dataset& data, const ProvenanceFilter& filter) {
  const ErrorCount c = count_errors(model, data, filter);
  if (c.total == 0) throw PreconditionError("provenance filter selected no examples");
  return c.rate();
}

ErrorCount population_risk(const Model& model, const DataDistribution& dist, std::size_t count,
                           std::uint64_t seed) {
  if (model.dim() != dist.dim()) throw PreconditionError("model and distribution dimensions differ");
  Rng rng(seed);
  std::vector<double> x;
  ErrorCount out;
  out.total = count;
  for (std::size_t i = 0; i < count; ++i) {
    const int c = dist.draw(rng, x);
    if (model.predict(x) != c) ++out.errors;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
  out << '\n';
}

void expect(std::istream& in, std::string_view token) {
  std::string got;
  if (!(in >> got) || got != token) {
    throw PreconditionError("model file: expected '" + std::string(token) + "', got '" + got + "'");
  }
}

template <typename T>
T read_value(std::istream& in, std::string_view what) {
  T v{};
  if (!(in >> v)) throw PreconditionError("model file: cannot read " + std::string(what));
  return v;
}

Eigen::MatrixXd read_matrix(std::istream& in, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = read_value<double>(in, "matrix entry");
  }
  return m;
}

}  // namespace

void save_model(std::ostream& out, const Model& model) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "plcert-model 1\n"
      << "kind " << to_string(model.kind()) << '\n'
      << "k " << model.k() << " dim " << model.dim() << '\n';
  std::visit(overloaded{
                 [&](const OracleModel& m) {
                   out << "epsilon " << m.epsilon << "\nseed " << m.seed << "\ncenters\n";
                   for (const auto& c : m.dist->centers()) {
                     write_row(out, Eigen::Map<const Eigen::RowVectorXd>(
                                        c.data(), static_cast<Eigen::Index>(c.size())));
                   }
                   const auto& s = m.dist->spreads();
                   out << "spreads\n";
                   write_row(out, Eigen::Map<const Eigen::RowVectorXd>(
                                      s.data(), static_cast<Eigen::Index>(s.size())));
                   const auto& p = m.dist->priors();
                   out << "priors\n";
                   write_row(out, Eigen::Map<const Eigen::RowVectorXd>(
                                      p.data(), static_cast<Eigen::Index>(p.size())));
                 },
                 [&](const CentroidModel& m) {
                   out << "present";
                   for (bool b : m.present) out << ' ' << (b ? 1 : 0);
                   out << "\ncentroids\n";
                   for (Eigen::Index c = 0; c < m.centroids.rows(); ++c) write_row(out, m.centroids.row(c));
                 },
                 [&](const LogisticModel& m) {
                   out << "weights\n";
                   for (Eigen::Index c = 0; c < m.weights.rows(); ++c) write_row(out, m.weights.row(c));
                   out << "bias\n";
                   write_row(out, m.bias.transpose());
                 },
             },
             model.params());
  out.precision(old_precision);
}

Model load_model(std::istream& in) {
  expect(in, "plcert-model");
  if (read_value<int>(in, "format version") != 1) {
    throw PreconditionError("model file: unsupported format version");
  }
  expect(in, "kind");
  const auto kind = learner_kind_from_string(read_value<std::string>(in, "kind"));
  expect(in, "k");
  const int k = read_value<int>(in, "k");
  expect(in, "dim");
  const int dim = read_value<int>(in, "dim");
  if (k < 2 || dim < 1) throw PreconditionError("model file: bad k/dim");

  switch (kind) {
    case LearnerKind::oracle: {
      expect(in, "epsilon");
      const double eps = read_value<double>(in, "epsilon");
      expect(in, "seed");
      const auto seed = read_value<std::uint64_t>(in, "seed");
      expect(in, "centers");
      const Eigen::MatrixXd c = read_matrix(in, k, dim);
      expect(in, "spreads");
      const Eigen::MatrixXd s = read_matrix(in, 1, k);
      expect(in, "priors");
      const Eigen::MatrixXd p = read_matrix(in, 1, k);
      std::vector<std::vector<double>> centers(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < dim; ++j) centers[i].push_back(c(i, j));
      }
      std::vector<double> spreads(s.data(), s.data() + k);
      std::vector<double> priors(p.data(), p.data() + k);
      auto dist = std::make_shared<const DataDistribution>(std::move(centers), std::move(spreads),
                                                           std::move(priors));
      return Model(OracleModel{std::move(dist), eps, seed});
    }
    case LearnerKind::nearest_centroid: {
      CentroidModel m;
      expect(in, "present");
      for (int i = 0; i < k; ++i) m.present.push_back(read_value<int>(in, "presence flag") != 0);
      expect(in, "centroids");
      m.centroids = read_matrix(in, k, dim);
      return Model(std::move(m));
    }
    case LearnerKind::logistic: {
      LogisticModel m;
      expect(in, "weights");
      m.weights = read_matrix(in, k, dim);
      expect(in, "bias");
      m.bias = read_matrix(in, k, 1);
      return Model(std::move(m));
    }
  }
  throw PreconditionError("model file: unknown kind");
}

}  // namespace plcert
