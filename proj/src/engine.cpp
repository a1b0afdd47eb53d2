#include "plcert/engine.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "plcert/errors.hpp"
#include "plcert/rng.hpp"

namespace plcert {
namespace {

bool is_randomized(Provenance p) { return p == Provenance::randomized; }
bool is_pseudo_correct(Provenance p) { return p == Provenance::pseudo_correct; }

Model initial_model(const EngineConfig& config) {
  if (const auto* m = std::get_if<Model>(&config.initial)) return *m;
  const auto& boot = std::get<BootstrapInit>(config.initial);
  const Dataset labeled =
      sample(config.dist, boot.labeled_count, derive_seed(config.seed, stream::kBootstrap));
  try {
    return fit(config.learner, labeled);
  } catch (const FitError& e) {
    throw FitError(std::string("initial model: ") + e.what());
  }
}

Model fit_at(const LearnerConfig& learner, const Dataset& train, int iteration) {
  try {
    return fit(learner, train);
  } catch (const FitError& e) {
    throw FitError("iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

struct RunState {
  Dataset unlabeled;
  Dataset test;
  Model current;
};

RunState start(const EngineConfig& config) {
  config.validate();
  return RunState{
      sample(config.dist, config.unlabeled_count, derive_seed(config.seed, stream::kUnlabeled)),
      sample(config.dist, config.test_count, derive_seed(config.seed, stream::kTest)),
      initial_model(config),
  };
}

void measure_gamma(const Model& model, const Dataset& test, TrajectoryRecord& rec) {
  // Test examples carry clean labels, so label == true_label here.
  const ErrorCount c = count_errors(model, test);
  rec.gamma_hat = c.rate();
  rec.gamma_std_error = c.std_error();
}

void audit_true_risk(const EngineConfig& config, const Model& model, TrajectoryRecord& rec) {
  if (config.audit_count == 0) return;
  rec.true_risk =
      population_risk(model, *config.dist, config.audit_count,
                      derive_seed(config.seed, stream::kAudit, static_cast<std::uint64_t>(rec.i)))
          .rate();
}

void count_pseudo(const Dataset& data, TrajectoryRecord& rec) {
  for (const auto& ex : data.examples) {
    if (ex.provenance == Provenance::pseudo_correct) ++rec.pseudo_correct;
    if (ex.provenance == Provenance::pseudo_wrong) ++rec.pseudo_wrong;
  }
}

void write_cell(std::ostream& out, double v) {
  if (!std::isnan(v)) out << v;
}

}  // namespace

std::uint64_t MPolicy::resolve(std::uint64_t max_allowed) const {
  switch (kind) {
    case Kind::max_allowed: return max_allowed;
    case Kind::fixed: return std::min(fixed_m, max_allowed);
    case Kind::fraction:
      return static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(max_allowed)));
  }
  return 0;
}

std::string_view to_string(MPolicy::Kind kind) {
  switch (kind) {
    case MPolicy::Kind::max_allowed: return "max_allowed";
    case MPolicy::Kind::fixed: return "fixed";
    case MPolicy::Kind::fraction: return "fraction";
  }
  return "unknown";
}

std::string_view to_string(HaltReason r) {
  switch (r) {
    case HaltReason::completed: return "completed";
    case HaltReason::infeasible_gamma: return "infeasible_gamma";
    case HaltReason::m_zero: return "m_zero";
  }
  return "unknown";
}

void EngineConfig::validate() const {
  learner.validate();
  if (!dist) throw PreconditionError("engine needs a data distribution");
  if (dist->k() != spec.k()) {
    throw PreconditionError("distribution class count differs from the problem's k");
  }
  if (unlabeled_count < 1) throw PreconditionError("unlabeled_count must be >= 1");
  if (iterations < 1) throw PreconditionError("iterations must be >= 1");
  if (test_count < 1000) throw PreconditionError("test_count must be >= 1000");
  if (m_policy.kind == MPolicy::Kind::fixed && m_policy.fixed_m < 1) {
    throw PreconditionError("fixed m policy needs m >= 1");
  }
  if (m_policy.kind == MPolicy::Kind::fraction &&
      !(m_policy.fraction > 0.0 && m_policy.fraction <= 1.0)) {
    throw PreconditionError("fraction m policy needs a fraction in (0,1]");
  }
  if (const auto* m = std::get_if<Model>(&initial)) {
    if (m->dim() != dist->dim() || m->k() != dist->k()) {
      throw PreconditionError("initial model shape does not match the distribution");
    }
  } else if (std::get<BootstrapInit>(initial).labeled_count < 1) {
    throw PreconditionError("bootstrap initial model needs labeled_count >= 1");
  }
}

double mixture_ratio(std::uint64_t m, std::uint64_t total, double gamma) {
  const double rest = static_cast<double>(total - m);
  return (static_cast<double>(m) + gamma * rest) / ((1.0 - gamma) * rest);
}

bool mixture_constraint_holds(std::uint64_t m, std::uint64_t total, double gamma,
                              double delta_tilde) {
  if (m >= total) return false;
  const double rest = static_cast<double>(total - m);
  return mixture_ratio(m, total, gamma) <= delta_tilde + 1.0 / ((1.0 - gamma) * rest);
}

Trajectory run_algorithm1(const EngineConfig& config) {
  RunState st = start(config);
  const double thr = feasibility_threshold(config.spec.delta_tilde());
  Trajectory out;
  out.per_application_delta = config.spec.delta();
  for (int i = 0; i < config.iterations; ++i) {
    TrajectoryRecord rec;
    rec.i = i;
    measure_gamma(st.current, st.test, rec);
    rec.feasible = rec.gamma_hat < thr;
    const Dataset pseudo = apply_pseudo_labels(st.unlabeled, st.current);
    count_pseudo(pseudo, rec);
    Model next = fit_at(config.learner, pseudo, i);
    if (rec.pseudo_correct > 0) {
      const ErrorCount c = count_errors(next, pseudo, is_pseudo_correct);
      rec.e_clean = c.rate();
      rec.e_clean_std_error = c.std_error();
    }
    audit_true_risk(config, next, rec);
    out.records.push_back(rec);
    st.current = std::move(next);
  }
  out.final_model = std::move(st.current);
  return out;
}

Trajectory run_algorithm2(const EngineConfig& config) {
  RunState st = start(config);
  const ProblemSpec& spec = config.spec;
  const double dt = spec.delta_tilde();
  const double thr = feasibility_threshold(dt);
  const std::uint64_t total = config.unlabeled_count;

  Trajectory out;
  out.per_application_delta = spec.delta();
  for (int i = 0; i < config.iterations; ++i) {
    TrajectoryRecord rec;
    rec.i = i;
    measure_gamma(st.current, st.test, rec);
    if (rec.gamma_hat >= thr) {
      out.halt_reason = HaltReason::infeasible_gamma;
      break;
    }
    rec.feasible = true;

    Dataset pseudo = apply_pseudo_labels(st.unlabeled, st.current);
    rec.m_max = max_randomized_count(total, rec.gamma_hat, dt);
    rec.m_used = config.m_policy.resolve(rec.m_max);
    if (rec.m_used == 0) {
      out.halt_reason = HaltReason::m_zero;
      break;
    }
    pseudo = randomize_labels(std::move(pseudo), rec.m_used, spec.k(),
                              derive_seed(config.seed, stream::kRandomize,
                                          static_cast<std::uint64_t>(i)));
    count_pseudo(pseudo, rec);

    Model next = fit_at(config.learner, pseudo, i);

    const ErrorCount rand_err = count_errors(next, pseudo, is_randomized);
    rec.e_random = rand_err.rate();
    rec.e_random_std_error = rand_err.std_error();
    if (rec.pseudo_correct > 0) {
      const ErrorCount clean_err = count_errors(next, pseudo, is_pseudo_correct);
      rec.e_clean = clean_err.rate();
      rec.e_clean_std_error = clean_err.std_error();
      const SplitSpec split(rec.m_used, rec.pseudo_correct);
      if (split.ratio_below_one()) {
        rec.bound_empirical =
            ratt_bound_relaxed(spec, split, {rec.e_clean, rec.e_random}).total;
        const double k = spec.k();
        rec.bound_empirical_sigma =
            std::sqrt(rec.e_clean_std_error * rec.e_clean_std_error +
                      k * k * rec.e_random_std_error * rec.e_random_std_error);
        ++out.bound_applications;
      }
    }
    rec.bound_predicted = bound_map(spec, static_cast<double>(total), rec.gamma_hat);
    audit_true_risk(config, next, rec);

    out.records.push_back(rec);
    st.current = std::move(next);
  }
  out.final_model = std::move(st.current);
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "i,gamma_hat,m_used,e_clean,e_random,bound_empirical,bound_predicted,feasible\n";
  for (const auto& r : trajectory.records) {
    out << r.i << ',';
    write_cell(out, r.gamma_hat);
    out << ',' << r.m_used << ',';
    write_cell(out, r.e_clean);
    out << ',';
    write_cell(out, r.e_random);
    out << ',';
    write_cell(out, r.bound_empirical);
    out << ',';
    write_cell(out, r.bound_predicted);
    out << ',' << (r.feasible ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace plcert
