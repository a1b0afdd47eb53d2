#include "plcert/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include "plcert/errors.hpp"
#include "plcert/rng.hpp"

namespace plcert {
namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots, which keeps aggregation order-independent.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body body) {
  const auto workers =
      static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(count))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

bool is_clean(Provenance p) { return p == Provenance::clean; }
bool is_randomized(Provenance p) { return p == Provenance::randomized; }
bool is_mislabeled(Provenance p) { return p == Provenance::mislabeled; }

// Pooled two-proportion standard error; unlike the plug-in form it does not
// collapse to zero when one rate sits at 0 or 1.
double three_sigma_diff(const ErrorCount& a, const ErrorCount& b) {
  if (a.total == 0 || b.total == 0) return 0.0;
  const double na = static_cast<double>(a.total);
  const double nb = static_cast<double>(b.total);
  const double pooled = static_cast<double>(a.errors + b.errors) / (na + nb);
  return 3.0 * std::sqrt(pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb));
}

nlohmann::json to_json(const ErrorCount& c) {
  return {{"errors", c.errors}, {"total", c.total}, {"rate", c.rate()}, {"std_error", c.std_error()}};
}

}  // namespace

double coverage_pass_threshold(double delta, int trials) {
  return 1.0 - delta - 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

// ---------------------------------------------------------------------------

CoverageReport coverage_experiment(const CoverageConfig& config) {
  config.learner.validate();
  if (!config.dist) throw PreconditionError("coverage experiment needs a distribution");
  if (config.dist->k() != config.spec.k()) {
    throw PreconditionError("distribution class count differs from the problem's k");
  }
  if (config.trials < 1) throw PreconditionError("trials must be >= 1");
  if (config.risk_samples < 1) throw PreconditionError("risk_samples must be >= 1");
  const SplitSpec split = optimal_split(config.total, config.spec.delta_tilde());

  CoverageReport out;
  out.trials = config.trials;
  out.m = split.m();
  out.n = split.n();
  out.details.resize(static_cast<std::size_t>(config.trials));

  parallel_for(out.details.size(), config.parallelism, [&](std::size_t t) {
    CoverageTrial& trial = out.details[t];
    trial.seed = derive_seed(config.seed, stream::kTrial, t);
    Dataset data = sample(config.dist, config.total, derive_seed(trial.seed, stream::kUnlabeled));
    data = randomize_labels(std::move(data), split.m(), config.spec.k(),
                            derive_seed(trial.seed, stream::kRandomize));
    LearnerConfig learner = config.learner;
    learner.seed = derive_seed(trial.seed, stream::kLearner);
    const Model model = fit(learner, data);
    trial.e_clean = empirical_error(model, data, is_clean);
    trial.e_random = empirical_error(model, data, is_randomized);
    trial.bound = ratt_bound_relaxed(config.spec, split, {trial.e_clean, trial.e_random}).total;
    trial.true_risk = population_risk(model, *config.dist, config.risk_samples,
                                      derive_seed(trial.seed, stream::kAudit))
                          .rate();
    trial.violated = trial.true_risk > trial.bound;
  });

  out.violations = static_cast<int>(
      std::count_if(out.details.begin(), out.details.end(), [](const auto& t) { return t.violated; }));
  out.coverage = 1.0 - static_cast<double>(out.violations) / out.trials;
  out.target = 1.0 - config.spec.delta();
  out.threshold = coverage_pass_threshold(config.spec.delta(), out.trials);
  out.pass = out.coverage >= out.threshold;
  return out;
}

// ---------------------------------------------------------------------------

AuditReport assumption_audit(const AuditConfig& config) {
  config.learner.validate();
  if (!config.dist) throw PreconditionError("audit needs a distribution");
  if (config.ratios.empty()) throw PreconditionError("audit grid is empty");
  for (double r : config.ratios) {
    if (!(r >= 0.0 && r < 1.0)) throw PreconditionError("audit ratios must lie in [0,1)");
  }
  if (config.size < 1000) throw PreconditionError("audit subset size must be >= 10^3");

  const int k = config.dist->k();
  const double chance_error = 1.0 - 1.0 / k;
  AuditReport out;
  out.cells.resize(config.ratios.size());

  parallel_for(out.cells.size(), config.parallelism, [&](std::size_t j) {
    AuditCell& cell = out.cells[j];
    cell.ratio = config.ratios[j];
    cell.n = config.size;
    cell.m = static_cast<std::uint64_t>(std::floor(cell.ratio * static_cast<double>(config.size)));
    if (cell.m == 0) {
      cell.skipped = true;
      return;
    }
    const std::uint64_t s = derive_seed(config.seed, stream::kTrial, j);
    LearnerConfig learner = config.learner;
    learner.seed = derive_seed(s, stream::kLearner);

    Dataset mixed = sample(config.dist, cell.n + cell.m, derive_seed(s, stream::kUnlabeled));
    mixed = randomize_labels(std::move(mixed), cell.m, k, derive_seed(s, stream::kRandomize));
    const Model model = fit(learner, mixed);
    cell.clean = count_errors(model, mixed, is_clean);
    cell.random = count_errors(model, mixed, is_randomized);
    cell.epsilon_needed =
        std::max({0.0, cell.clean.rate() - 3.0 * cell.clean.std_error(),
                  chance_error - cell.random.rate() - 3.0 * cell.random.std_error()});

    Dataset noisy = sample(config.dist, cell.n + cell.m, derive_seed(s, stream::kMislabel));
    noisy = mislabel(std::move(noisy), cell.m, k, derive_seed(s, stream::kMislabel, 1));
    const Model noisy_model = fit(learner, noisy);
    cell.mislabeled_train = count_errors(noisy_model, noisy, is_mislabeled);
    Dataset fresh = sample(config.dist, config.size, derive_seed(s, stream::kAudit));
    fresh = mislabel(std::move(fresh), config.size, k, derive_seed(s, stream::kAudit, 1));
    cell.mislabeled_population = count_errors(noisy_model, fresh, is_mislabeled);
    cell.overfit_direction_holds =
        cell.mislabeled_train.rate() <=
        cell.mislabeled_population.rate() +
            three_sigma_diff(cell.mislabeled_train, cell.mislabeled_population);
  });

  std::vector<const AuditCell*> measured;
  for (const auto& cell : out.cells) {
    if (cell.skipped) continue;
    measured.push_back(&cell);
    out.assumption1_holds = out.assumption1_holds && cell.overfit_direction_holds;
  }
  std::sort(measured.begin(), measured.end(),
            [](const AuditCell* a, const AuditCell* b) { return a->ratio < b->ratio; });
  double running = 0.0;
  for (const AuditCell* cell : measured) {
    running = std::max(running, cell->epsilon_needed);
    out.frontier.push_back({cell->ratio, running});
  }
  if (!out.frontier.empty()) {
    out.max_delta_tilde = out.frontier.back().delta_tilde;
    out.epsilon_at_max = out.frontier.back().epsilon;
  }

  if (config.target_epsilon || config.target_delta_tilde) {
    const double t_eps = config.target_epsilon.value_or(out.epsilon_at_max);
    const double t_dt = config.target_delta_tilde.value_or(out.max_delta_tilde);
    const auto covering = std::find_if(out.frontier.begin(), out.frontier.end(),
                                       [&](const FrontierPoint& p) { return p.delta_tilde >= t_dt; });
    out.target_admitted = covering != out.frontier.end() && covering->epsilon <= t_eps;
  }
  out.pass = !out.frontier.empty() && out.assumption1_holds && out.target_admitted;
  return out;
}

// ---------------------------------------------------------------------------

LimitCurve limit_curve(const ProblemSpec& spec, double gamma0, const std::vector<double>& n_grid,
                       double tolerance) {
  if (n_grid.empty()) throw PreconditionError("limit curve needs a non-empty N grid");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (!(n_grid[i] > 0.0)) throw PreconditionError("N grid values must be positive");
    if (i > 0 && !(n_grid[i] > n_grid[i - 1])) {
      throw PreconditionError("N grid must be strictly increasing");
    }
  }
  LimitCurve out;
  out.gamma0 = gamma0;
  out.n_grid = n_grid;
  out.tolerance = tolerance;
  for (double n : n_grid) {
    out.ratios.push_back(bound_map(spec, n, gamma0) / supervised_ceiling(spec, n));
  }
  out.strictly_decreasing = true;
  for (std::size_t i = 1; i < out.ratios.size(); ++i) {
    out.strictly_decreasing = out.strictly_decreasing && out.ratios[i] < out.ratios[i - 1];
  }
  out.bounded_below_by_one =
      std::all_of(out.ratios.begin(), out.ratios.end(), [](double r) { return r >= 1.0 - 1e-12; });
  out.final_gap = std::abs(out.ratios.back() - 1.0);

  if (gamma0 == 0.0) {
    out.pass = std::all_of(out.ratios.begin(), out.ratios.end(),
                           [](double r) { return std::abs(r - 1.0) <= 1e-12; });
    out.note = "gamma0 = 0: the bound map reproduces the supervised ceiling at every N";
  } else if (spec.epsilon() == 0.0) {
    out.pass = false;
    out.note = "epsilon = 0: the ratio is constant in N and does not tend to 1";
  } else {
    out.pass = out.strictly_decreasing && out.bounded_below_by_one && out.final_gap <= tolerance;
  }
  return out;
}

// ---------------------------------------------------------------------------

RateReport rate_experiment(const RateConfig& config) {
  if (config.total < 1) throw PreconditionError("rate experiment needs N >= 1");
  if (config.max_steps < 1) throw PreconditionError("max_steps must be >= 1");
  const ProblemSpec& spec = config.spec;
  const double n_real = static_cast<double>(config.total);

  RateReport out;
  out.total = config.total;
  out.p = config.conv.p();
  out.e_d_star = supervised_ceiling(spec, n_real);
  out.band_low = out.e_d_star + config.conv.c1();
  out.band_high = out.e_d_star + config.conv.c2();
  try {
    out.threshold = min_unlabeled_self_consistent(spec, config.conv);
  } catch (const InfeasibleError&) {
    out.threshold.reset();
  }
  out.asserted = out.threshold && config.total >= *out.threshold;

  const double gamma0 = config.gamma0.value_or(out.band_high);
  // Small N can push the band past the gate; that is a finding, not an error.
  const bool start_feasible = gamma0 < feasibility_threshold(spec.delta_tilde());
  if (start_feasible) {
    out.bound_trajectory = iterate_bound_map(spec, n_real, gamma0, config.max_steps).values;
  } else {
    out.bound_trajectory = {gamma0};
  }
  for (std::size_t i = 0; i + 1 < out.bound_trajectory.size(); ++i) {
    const double g = out.bound_trajectory[i];
    if (g < out.band_low || g > out.band_high) continue;
    out.band_ratios.push_back((out.bound_trajectory[i + 1] - out.e_d_star) / (g - out.e_d_star));
  }
  out.band_entered = !out.band_ratios.empty();
  if (out.band_entered) {
    out.max_band_ratio = *std::max_element(out.band_ratios.begin(), out.band_ratios.end());
  }

  if (config.mode == RateMode::empirical) {
    if (!config.engine) throw PreconditionError("empirical rate mode needs an engine config");
    EngineConfig engine = *config.engine;
    engine.unlabeled_count = config.total;
    const Trajectory traj = run_algorithm2(engine);
    for (const auto& rec : traj.records) out.empirical_trajectory.push_back(rec.bound_empirical);
    for (std::size_t i = 0; i + 1 < out.empirical_trajectory.size(); ++i) {
      const double a = out.empirical_trajectory[i] - out.e_d_star;
      const double b = out.empirical_trajectory[i + 1] - out.e_d_star;
      if (a > 0.0 && b > 0.0) out.empirical_ratios.push_back(b / a);
    }
  }

  const bool within_rate = std::all_of(out.band_ratios.begin(), out.band_ratios.end(),
                                       [&](double r) { return r <= out.p; });
  out.pass = !out.asserted || within_rate;
  if (!out.threshold) {
    out.note = "no unlabeled count satisfies the rate condition; reported without assertion";
  } else if (!out.asserted) {
    out.note = "no assertion below threshold";
  }
  if (!start_feasible) {
    out.note += out.note.empty() ? "" : "; ";
    out.note += "starting risk is not below the feasibility threshold";
  }
  if (!out.band_entered) {
    out.note += out.note.empty() ? "band never entered" : "; band never entered";
  }
  return out;
}

// ---------------------------------------------------------------------------

EngineCampaignReport algorithm2_campaign(const EngineConfig& base, int seeds, std::uint64_t seed,
                                         int parallelism, std::uint64_t risk_samples) {
  if (seeds < 1) throw PreconditionError("campaign needs at least one seed");
  const ProblemSpec& spec = base.spec;
  const double dt = spec.delta_tilde();
  const double thr = feasibility_threshold(dt);
  const double conc = 4.0 * spec.k() * std::sqrt(spec.log_term());
  const double total = static_cast<double>(base.unlabeled_count);

  EngineCampaignReport out;
  out.seeds.resize(static_cast<std::size_t>(seeds));
  parallel_for(out.seeds.size(), parallelism, [&](std::size_t s) {
    EngineSeedResult& res = out.seeds[s];
    EngineConfig cfg = base;
    cfg.seed = derive_seed(seed, stream::kTrial, s);
    cfg.learner.seed = derive_seed(cfg.seed, stream::kLearner);
    cfg.audit_count = std::max(cfg.audit_count, risk_samples);
    res.seed = cfg.seed;
    const Trajectory traj = run_algorithm2(cfg);
    res.halt = traj.halt_reason;
    for (const auto& rec : traj.records) {
      if (!res.gamma_hats.empty() && rec.gamma_hat > res.gamma_hats.back()) {
        res.gamma_non_increasing = false;
      }
      res.gamma_hats.push_back(rec.gamma_hat);
      res.gate_ok = res.gate_ok && rec.gamma_hat < thr;
      res.mixture_ok =
          res.mixture_ok && mixture_constraint_holds(rec.m_used, cfg.unlabeled_count, rec.gamma_hat, dt);
      if (rec.pseudo_correct > 0) {
        res.max_realized_ratio =
            std::max(res.max_realized_ratio, static_cast<double>(rec.m_used + rec.pseudo_wrong) /
                                                 static_cast<double>(rec.pseudo_correct));
      }
      if (std::isnan(rec.bound_empirical)) continue;
      ++res.bound_checks;
      if (rec.true_risk > rec.bound_empirical) ++res.violations;
      if (cfg.m_policy.kind == MPolicy::Kind::max_allowed) {
        // Flooring m raises the concentration term slightly above the bound map's.
        const double m_real =
            (dt * (1.0 - rec.gamma_hat) - rec.gamma_hat) / ((1.0 + dt) * (1.0 - rec.gamma_hat)) * total;
        const double floor_slack =
            conc * std::max(0.0, 1.0 / std::sqrt(static_cast<double>(rec.m_used)) - 1.0 / std::sqrt(m_real));
        res.bound_order_ok = res.bound_order_ok &&
                             rec.bound_empirical <=
                                 rec.bound_predicted + 3.0 * rec.bound_empirical_sigma + floor_slack;
      }
    }
  });

  for (const auto& res : out.seeds) {
    if (res.gamma_non_increasing) ++out.non_increasing;
    out.mixture_ok = out.mixture_ok && res.mixture_ok;
    out.gate_ok = out.gate_ok && res.gate_ok;
    out.bound_checks += res.bound_checks;
    out.violations += res.violations;
  }
  const double delta = spec.delta();
  if (out.bound_checks > 0) {
    out.violation_fraction = static_cast<double>(out.violations) / out.bound_checks;
    out.violation_allowance = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / out.bound_checks);
  }
  out.applicability_pass = out.violation_fraction <= out.violation_allowance;
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const CoverageReport& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.details) {
    trials.push_back({{"seed", t.seed},
                      {"e_clean", t.e_clean},
                      {"e_random", t.e_random},
                      {"bound", t.bound},
                      {"true_risk", t.true_risk},
                      {"violated", t.violated}});
  }
  return {{"kind", "coverage"}, {"trials", r.trials},     {"violations", r.violations},
          {"coverage", r.coverage}, {"target", r.target}, {"threshold", r.threshold},
          {"pass", r.pass},         {"m", r.m},           {"n", r.n},
          {"details", trials}};
}

nlohmann::json to_json(const AuditReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json cell = {{"ratio", c.ratio}, {"n", c.n}, {"m", c.m}, {"skipped", c.skipped}};
    if (!c.skipped) {
      cell["e_clean"] = to_json(c.clean);
      cell["e_random"] = to_json(c.random);
      cell["epsilon_needed"] = c.epsilon_needed;
      cell["mislabeled_train"] = to_json(c.mislabeled_train);
      cell["mislabeled_population"] = to_json(c.mislabeled_population);
      cell["overfit_direction_holds"] = c.overfit_direction_holds;
    }
    cells.push_back(std::move(cell));
  }
  nlohmann::json frontier = nlohmann::json::array();
  for (const auto& p : r.frontier) {
    frontier.push_back({{"delta_tilde", p.delta_tilde}, {"epsilon", p.epsilon}});
  }
  return {{"kind", "audit"},
          {"cells", cells},
          {"frontier", frontier},
          {"max_delta_tilde", r.max_delta_tilde},
          {"epsilon_at_max", r.epsilon_at_max},
          {"assumption1_holds", r.assumption1_holds},
          {"target_admitted", r.target_admitted},
          {"pass", r.pass}};
}

nlohmann::json to_json(const LimitCurve& r) {
  return {{"kind", "limit"},
          {"gamma0", r.gamma0},
          {"n_grid", r.n_grid},
          {"ratios", r.ratios},
          {"strictly_decreasing", r.strictly_decreasing},
          {"bounded_below_by_one", r.bounded_below_by_one},
          {"final_gap", r.final_gap},
          {"tolerance", r.tolerance},
          {"pass", r.pass},
          {"note", r.note}};
}

nlohmann::json to_json(const RateReport& r) {
  nlohmann::json out = {{"kind", "rate"},
                        {"n", r.total},
                        {"p", r.p},
                        {"e_d_star", r.e_d_star},
                        {"band", {r.band_low, r.band_high}},
                        {"bound_trajectory", r.bound_trajectory},
                        {"band_ratios", r.band_ratios},
                        {"empirical_trajectory", r.empirical_trajectory},
                        {"empirical_ratios", r.empirical_ratios},
                        {"max_band_ratio", r.max_band_ratio},
                        {"band_entered", r.band_entered},
                        {"asserted", r.asserted},
                        {"pass", r.pass},
                        {"note", r.note}};
  out["threshold"] = r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json(nullptr);
  return out;
}

nlohmann::json to_json(const EngineCampaignReport& r) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"halt", to_string(s.halt)},
                     {"gamma_hats", s.gamma_hats},
                     {"gamma_non_increasing", s.gamma_non_increasing},
                     {"mixture_ok", s.mixture_ok},
                     {"gate_ok", s.gate_ok},
                     {"bound_order_ok", s.bound_order_ok},
                     {"bound_checks", s.bound_checks},
                     {"violations", s.violations},
                     {"max_realized_ratio", s.max_realized_ratio}});
  }
  return {{"kind", "algorithm2_campaign"},
          {"seeds", seeds},
          {"non_increasing", r.non_increasing},
          {"mixture_ok", r.mixture_ok},
          {"gate_ok", r.gate_ok},
          {"bound_checks", r.bound_checks},
          {"violations", r.violations},
          {"violation_fraction", r.violation_fraction},
          {"violation_allowance", r.violation_allowance},
          {"applicability_pass", r.applicability_pass}};
}

void print_table(std::ostream& out, const CoverageReport& r) {
  out << "coverage  trials=" << r.trials << "  split m=" << r.m << " n=" << r.n << '\n'
      << "  violations " << r.violations << '\n'
      << "  coverage   " << r.coverage << "  (target " << r.target << ", pass if >= " << r.threshold
      << ")\n"
      << "  result     " << (r.pass ? "PASS" : "FAIL") << '\n';
}

void print_table(std::ostream& out, const AuditReport& r) {
  out << "audit\n  ratio       n       m   E_clean   E_random  eps_needed  mislabel\n";
  for (const auto& c : r.cells) {
    out << "  " << std::setw(5) << c.ratio << std::setw(8) << c.n << std::setw(8) << c.m;
    if (c.skipped) {
      out << "   (skipped: no randomized subset)\n";
      continue;
    }
    out << std::setw(10) << c.clean.rate() << std::setw(11) << c.random.rate() << std::setw(12)
        << c.epsilon_needed << "  " << (c.overfit_direction_holds ? "ok" : "FAIL") << '\n';
  }
  out << "  frontier: delta_tilde=" << r.max_delta_tilde << " epsilon=" << r.epsilon_at_max << '\n'
      << "  result   " << (r.pass ? "PASS" : "FAIL") << '\n';
}

void print_table(std::ostream& out, const LimitCurve& r) {
  out << "limit  gamma0=" << r.gamma0 << '\n';
  for (std::size_t i = 0; i < r.ratios.size(); ++i) {
    out << "  N=" << std::setw(14) << r.n_grid[i] << "  B/E*=" << std::setprecision(12) << r.ratios[i]
        << std::setprecision(6) << '\n';
  }
  if (!r.note.empty()) out << "  note: " << r.note << '\n';
  out << "  result " << (r.pass ? "PASS" : "FAIL") << '\n';
}

void print_table(std::ostream& out, const RateReport& r) {
  out << "rate  N=" << r.total << "  threshold=";
  if (r.threshold) {
    out << *r.threshold;
  } else {
    out << "none";
  }
  out << "  p=" << r.p << "  E*=" << r.e_d_star << '\n';
  for (std::size_t i = 0; i < r.band_ratios.size(); ++i) {
    out << "  in-band ratio " << i << ": " << r.band_ratios[i] << '\n';
  }
  if (!r.note.empty()) out << "  note: " << r.note << '\n';
  out << "  result " << (r.pass ? "PASS" : "FAIL") << '\n';
}

}  // namespace plcert
