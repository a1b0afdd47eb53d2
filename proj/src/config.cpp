#include "plcert/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "plcert/errors.hpp"

namespace plcert::config {
namespace {

// Reads one JSON object, records every key it is asked about, and rejects the rest.
class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return obj_.contains(key);
  }

  template <typename T>
  T required(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + key + "' in " + where_);
    return get<T>(key);
  }

  template <typename T>
  T optional(const std::string& key, T fallback) {
    if (!has(key)) {
      resolved_[key] = fallback;
      return fallback;
    }
    return get<T>(key);
  }

  const json& section(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required section '" + key + "' in " + where_);
    return obj_.at(key);
  }

  void put(const std::string& key, json value) { resolved_[key] = std::move(value); }

  std::string child(const std::string& key) const { return where_ + "." + key; }

  // Throws on the first key never asked about.
  json finish() {
    for (const auto& [key, _] : obj_.items()) {
      if (!known_.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where_);
    }
    return resolved_;
  }

 private:
  template <typename T>
  T get(const std::string& key) {
    const json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      }
      T out = v.get<T>();
      resolved_[key] = v;
      return out;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' in " + where_ + " has the wrong type: " + v.dump());
    }
  }

  const json& obj_;
  std::string where_;
  std::set<std::string> known_;
  json resolved_ = json::object();
};

template <typename F>
auto wrap_precondition(const std::string& where, F f) {
  try {
    return f();
  } catch (const PreconditionError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

MPolicy parse_policy(const json& j, json& resolved) {
  Reader r(j, "engine.m_policy");
  const auto kind = r.required<std::string>("kind");
  MPolicy policy;
  if (kind == "max_allowed") {
    policy = MPolicy::max_allowed();
  } else if (kind == "fixed") {
    policy = MPolicy::fixed(r.required<std::uint64_t>("m"));
  } else if (kind == "fraction") {
    policy = MPolicy::of_max(r.required<double>("fraction"));
  } else {
    throw ConfigError("engine.m_policy.kind must be max_allowed, fixed or fraction");
  }
  resolved = r.finish();
  return policy;
}

InitialModel parse_initial(const json& j, const std::shared_ptr<const DataDistribution>& dist,
                           json& resolved) {
  Reader r(j, "engine.initial_model");
  const auto kind = r.required<std::string>("kind");
  InitialModel out = BootstrapInit{};
  if (kind == "oracle") {
    const double eps = r.required<double>("epsilon");
    if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("initial oracle epsilon must lie in [0,1)");
    out = Model(OracleModel{dist, eps, r.optional<std::uint64_t>("seed", 0)});
  } else if (kind == "constant") {
    const int cls = r.optional<int>("class", 0);
    out = wrap_precondition("engine.initial_model", [&] {
      return Model(LogisticModel::constant(dist->k(), dist->dim(), cls));
    });
  } else if (kind == "bootstrap") {
    out = BootstrapInit{r.required<std::uint64_t>("labeled_count")};
  } else if (kind == "file") {
    const auto path = r.required<std::string>("path");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open initial model file '" + path + "'");
    out = wrap_precondition("engine.initial_model", [&] { return load_model(in); });
  } else {
    throw ConfigError("engine.initial_model.kind must be oracle, constant, bootstrap or file");
  }
  resolved = r.finish();
  return out;
}

// Engine section without the problem/learner/distribution it is combined with.
EngineConfig parse_engine(const json& j, const ProblemSpec& spec, const LearnerConfig& learner,
                          std::shared_ptr<const DataDistribution> dist, std::uint64_t seed,
                          bool need_unlabeled, json& resolved) {
  Reader r(j, "engine");
  EngineConfig cfg{.spec = spec, .learner = learner, .dist = dist};
  cfg.seed = seed;
  cfg.unlabeled_count = need_unlabeled ? r.required<std::uint64_t>("unlabeled_count")
                                       : r.optional<std::uint64_t>("unlabeled_count", 1);
  cfg.test_count = r.optional<std::uint64_t>("test_count", 1000);
  cfg.iterations = r.required<int>("iterations");
  cfg.audit_count = r.optional<std::uint64_t>("audit_count", 0);
  json sub;
  if (r.has("m_policy")) {
    cfg.m_policy = parse_policy(j.at("m_policy"), sub);
    r.put("m_policy", sub);
  } else {
    r.put("m_policy", {{"kind", "max_allowed"}});
  }
  cfg.initial = parse_initial(r.section("initial_model"), dist, sub);
  r.put("initial_model", sub);
  resolved = r.finish();
  wrap_precondition("engine", [&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

int default_parallelism() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

ProblemSpec parse_problem(const json& j, json& resolved) {
  Reader r(j, "problem");
  const int k = r.required<int>("k");
  const double delta = r.required<double>("delta");
  const double eps = r.optional<double>("epsilon", 0.0);
  const double dt = r.required<double>("delta_tilde");
  resolved = r.finish();
  return wrap_precondition("problem", [&] { return ProblemSpec(k, delta, eps, dt); });
}

ConvergenceSpec parse_convergence(const json& j, json& resolved) {
  Reader r(j, "convergence");
  const double p = r.required<double>("p");
  const double c1 = r.required<double>("c1");
  const double c2 = r.required<double>("c2");
  resolved = r.finish();
  return wrap_precondition("convergence", [&] { return ConvergenceSpec(p, c1, c2); });
}

LearnerConfig parse_learner(const json& j, json& resolved) {
  Reader r(j, "learner");
  LearnerConfig cfg;
  cfg.kind = wrap_precondition("learner", [&] {
    return learner_kind_from_string(r.required<std::string>("kind"));
  });
  cfg.oracle_epsilon = r.optional<double>("oracle_epsilon", cfg.oracle_epsilon);
  cfg.gd_steps = r.optional<int>("gd_steps", cfg.gd_steps);
  cfg.gd_learning_rate = r.optional<double>("gd_learning_rate", cfg.gd_learning_rate);
  cfg.gd_l2 = r.optional<double>("gd_l2", cfg.gd_l2);
  cfg.seed = r.optional<std::uint64_t>("seed", cfg.seed);
  resolved = r.finish();
  wrap_precondition("learner", [&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

std::shared_ptr<const DataDistribution> parse_distribution(const json& j, std::optional<int> k,
                                                           json& resolved) {
  Reader r(j, "distribution");
  const auto kind = r.required<std::string>("kind");
  std::shared_ptr<const DataDistribution> out;
  if (kind == "ring") {
    const int dk = k ? r.optional<int>("k", *k) : r.required<int>("k");
    if (k && dk != *k) throw ConfigError("distribution.k differs from problem.k");
    const int dim = r.optional<int>("dim", 2);
    const double sep = r.required<double>("separation");
    const double spread = r.required<double>("spread");
    out = wrap_precondition("distribution", [&] {
      return std::make_shared<const DataDistribution>(DataDistribution::ring(dk, dim, sep, spread));
    });
  } else if (kind == "explicit") {
    auto centers = r.required<std::vector<std::vector<double>>>("centers");
    std::vector<double> spreads;
    if (r.has("spreads") && j.at("spreads").is_number()) {
      spreads = {r.required<double>("spreads")};
    } else {
      spreads = r.required<std::vector<double>>("spreads");
    }
    auto priors = r.optional<std::vector<double>>("priors", {});
    out = wrap_precondition("distribution", [&] {
      return std::make_shared<const DataDistribution>(std::move(centers), std::move(spreads),
                                                      std::move(priors));
    });
    if (k && out->k() != *k) throw ConfigError("distribution class count differs from problem.k");
    r.put("priors", out->priors());
  } else {
    throw ConfigError("distribution.kind must be ring or explicit");
  }
  resolved = r.finish();
  return out;
}

SimulateConfig parse_simulate(const json& j) {
  Reader r(j, "config");
  const int algorithm = r.optional<int>("algorithm", 2);
  if (algorithm != 1 && algorithm != 2) throw ConfigError("algorithm must be 1 or 2");
  const auto seed = r.required<std::uint64_t>("seed");
  json sub;
  const ProblemSpec spec = parse_problem(r.section("problem"), sub);
  r.put("problem", sub);
  const LearnerConfig learner = parse_learner(r.section("learner"), sub);
  r.put("learner", sub);
  auto dist = parse_distribution(r.section("distribution"), spec.k(), sub);
  r.put("distribution", sub);
  EngineConfig engine = parse_engine(r.section("engine"), spec, learner, dist, seed, true, sub);
  r.put("engine", sub);

  std::string csv = "trajectory.csv";
  std::string model = "final_model.txt";
  if (r.has("output")) {
    Reader o(j.at("output"), "output");
    csv = o.optional<std::string>("trajectory_csv", csv);
    model = o.optional<std::string>("model", model);
    r.put("output", o.finish());
  } else {
    r.put("output", {{"trajectory_csv", csv}, {"model", model}});
  }
  SimulateConfig out{algorithm, std::move(engine), csv, model, json()};
  out.resolved = r.finish();
  return out;
}

VerifyConfig parse_verify(const json& j) {
  Reader r(j, "config");
  const auto name = r.required<std::string>("campaign");
  VerifyConfig out;
  if (name == "coverage") {
    out.campaign = Campaign::coverage;
  } else if (name == "audit") {
    out.campaign = Campaign::audit;
  } else if (name == "limit") {
    out.campaign = Campaign::limit;
  } else if (name == "rate") {
    out.campaign = Campaign::rate;
  } else if (name == "algorithm2") {
    out.campaign = Campaign::algorithm2;
  } else {
    throw ConfigError("unknown campaign '" + name +
                      "' (expected coverage, audit, limit, rate or algorithm2)");
  }
  out.seed = r.optional<std::uint64_t>("seed", 0);
  if (r.has("parallelism")) {
    out.parallelism = r.required<int>("parallelism");
    if (*out.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  }
  const int parallelism = out.parallelism.value_or(default_parallelism());

  if (r.has("output")) {
    Reader o(j.at("output"), "output");
    out.report_path = o.optional<std::string>("report", name + "_report.json");
    r.put("output", o.finish());
  } else {
    out.report_path = name + "_report.json";
    r.put("output", {{"report", out.report_path}});
  }

  json sub;
  switch (out.campaign) {
    case Campaign::coverage: {
      const ProblemSpec spec = parse_problem(r.section("problem"), sub);
      r.put("problem", sub);
      CoverageConfig c{.spec = spec};
      c.learner = parse_learner(r.section("learner"), sub);
      r.put("learner", sub);
      c.dist = parse_distribution(r.section("distribution"), spec.k(), sub);
      r.put("distribution", sub);
      c.total = r.required<std::uint64_t>("unlabeled_count");
      c.trials = r.optional<int>("trials", 200);
      c.risk_samples = r.optional<std::uint64_t>("risk_samples", kDefaultRiskSamples);
      if (c.trials < 1) throw ConfigError("trials must be >= 1");
      c.seed = out.seed;
      c.parallelism = parallelism;
      out.coverage = std::move(c);
      break;
    }
    case Campaign::audit: {
      AuditConfig a;
      a.learner = parse_learner(r.section("learner"), sub);
      r.put("learner", sub);
      a.dist = parse_distribution(r.section("distribution"), std::nullopt, sub);
      r.put("distribution", sub);
      a.ratios = r.required<std::vector<double>>("ratios");
      a.size = r.optional<std::uint64_t>("size", a.size);
      if (r.has("target_epsilon")) a.target_epsilon = r.required<double>("target_epsilon");
      if (r.has("target_delta_tilde")) a.target_delta_tilde = r.required<double>("target_delta_tilde");
      a.seed = out.seed;
      a.parallelism = parallelism;
      out.audit = std::move(a);
      break;
    }
    case Campaign::limit: {
      const ProblemSpec spec = parse_problem(r.section("problem"), sub);
      r.put("problem", sub);
      const double gamma0 = r.required<double>("gamma0");
      auto grid = r.optional<std::vector<double>>("n_grid", {1e4, 1e6, 1e8, 1e10, 1e12});
      const double tol = r.optional<double>("tolerance", 1e-3);
      out.limit = VerifyConfig::Limit{spec, gamma0, std::move(grid), tol};
      break;
    }
    case Campaign::rate: {
      const ProblemSpec spec = parse_problem(r.section("problem"), sub);
      r.put("problem", sub);
      const ConvergenceSpec conv = parse_convergence(r.section("convergence"), sub);
      r.put("convergence", sub);
      RateConfig rc{.spec = spec, .conv = conv};
      const auto mode = r.optional<std::string>("mode", "bound_map");
      if (mode == "bound_map") {
        rc.mode = RateMode::bound_map;
      } else if (mode == "empirical") {
        rc.mode = RateMode::empirical;
      } else {
        throw ConfigError("rate mode must be bound_map or empirical");
      }
      if (r.has("unlabeled_count")) {
        rc.total = r.required<std::uint64_t>("unlabeled_count");
      } else {
        try {
          rc.total = min_unlabeled_self_consistent(spec, conv);
        } catch (const InfeasibleError& e) {
          throw ConfigError(std::string("rate: no default unlabeled_count: ") + e.what());
        }
        r.put("unlabeled_count", rc.total);
      }
      if (r.has("gamma0")) rc.gamma0 = r.required<double>("gamma0");
      rc.max_steps = r.optional<int>("max_steps", rc.max_steps);
      if (rc.mode == RateMode::empirical) {
        const LearnerConfig learner = parse_learner(r.section("learner"), sub);
        r.put("learner", sub);
        auto dist = parse_distribution(r.section("distribution"), spec.k(), sub);
        r.put("distribution", sub);
        rc.engine = parse_engine(r.section("engine"), spec, learner, dist, out.seed, false, sub);
        r.put("engine", sub);
      }
      out.rate = std::move(rc);
      break;
    }
    case Campaign::algorithm2: {
      const ProblemSpec spec = parse_problem(r.section("problem"), sub);
      r.put("problem", sub);
      const LearnerConfig learner = parse_learner(r.section("learner"), sub);
      r.put("learner", sub);
      auto dist = parse_distribution(r.section("distribution"), spec.k(), sub);
      r.put("distribution", sub);
      EngineConfig engine = parse_engine(r.section("engine"), spec, learner, dist, out.seed, true, sub);
      r.put("engine", sub);
      const int seeds = r.optional<int>("seeds", 20);
      if (seeds < 1) throw ConfigError("seeds must be >= 1");
      const auto risk = r.optional<std::uint64_t>("risk_samples", kDefaultRiskSamples);
      out.algorithm2 = VerifyConfig::Algorithm2{std::move(engine), seeds, risk};
      break;
    }
  }
  r.put("parallelism", parallelism);
  out.resolved = r.finish();
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace plcert::config
