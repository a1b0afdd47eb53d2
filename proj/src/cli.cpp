#include "plcert/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "plcert/bounds.hpp"
#include "plcert/config.hpp"
#include "plcert/engine.hpp"
#include "plcert/errors.hpp"
#include "plcert/harness.hpp"

namespace plcert::cli {
namespace {

using nlohmann::json;

json envelope(std::string_view kind, const json& resolved) {
  return {{"schema_version", kSchemaVersion},
          {"library_version", PLCERT_VERSION},
          {"kind", kind},
          {"config", resolved}};
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config::ConfigError("cannot write '" + path + "'");
  f << contents;
}

struct BoundArgs {
  std::string formula;
  int k = 0;
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  double delta = 0.0;
  double e_clean = 0.0;
  double e_random = 0.0;
};

int cmd_bound(const BoundArgs& a, std::ostream& out) {
  // epsilon and delta_tilde do not enter these formulas.
  const ProblemSpec spec(a.k, a.delta, 0.0, 0.5);
  const SplitSpec split(a.m, a.n);
  const EmpiricalErrors err{a.e_clean, a.e_random};
  const BoundReport r = a.formula == "relaxed" ? ratt_bound_relaxed(spec, split, err)
                                               : ratt_bound_full(spec, split, err);
  out << std::setprecision(15) << std::left;
  auto row = [&](std::string_view name, const auto& v) {
    out << std::setw(20) << name << v << '\n';
  };
  row("formula", to_string(r.formula));
  row("k", a.k);
  row("m", a.m);
  row("n", a.n);
  row("delta", a.delta);
  row("e_clean", a.e_clean);
  row("e_random", a.e_random);
  row("term_clean", r.term_clean);
  row("term_random", r.term_random);
  row("term_concentration", r.term_concentration);
  row("constant_used", r.constant_used);
  row("total", r.total);
  row("vacuous", r.vacuous() ? "yes" : "no");
  return kOk;
}

struct ComplexityArgs {
  int k = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double delta_tilde = 0.0;
  double p = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  std::optional<double> e_d_star;
  std::uint64_t cap = kDefaultUnlabeledCap;
};

int cmd_complexity(const ComplexityArgs& a, std::ostream& out) {
  const ProblemSpec spec(a.k, a.delta, a.epsilon, a.delta_tilde);
  const ConvergenceSpec conv(a.p, a.c1, a.c2);
  out << std::setprecision(15) << std::left;
  auto row = [&](std::string_view name, const auto& v) {
    out << std::setw(16) << name << v << '\n';
  };
  row("k", a.k);
  row("delta", a.delta);
  row("epsilon", a.epsilon);
  row("delta_tilde", a.delta_tilde);
  row("p", a.p);
  row("c1", a.c1);
  row("c2", a.c2);
  if (a.e_d_star) {
    row("mode", "explicit");
    row("e_d_star", *a.e_d_star);
    row("threshold", unlabeled_threshold(spec, conv, *a.e_d_star));
    row("N", min_unlabeled_for_rate(spec, conv, *a.e_d_star));
  } else {
    const std::uint64_t n = min_unlabeled_self_consistent(spec, conv, a.cap);
    const double e = supervised_ceiling(spec, static_cast<double>(n));
    row("mode", "self_consistent");
    row("cap", a.cap);
    row("e_d_star", e);
    row("threshold", unlabeled_threshold(spec, conv, e));
    row("N", n);
  }
  return kOk;
}

int cmd_simulate(const std::string& path, std::ostream& out) {
  const auto cfg = config::parse_simulate(config::load_json_file(path));
  const Trajectory traj =
      cfg.algorithm == 1 ? run_algorithm1(cfg.engine) : run_algorithm2(cfg.engine);

  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  write_file(cfg.trajectory_csv, csv.str());

  json meta = envelope("trajectory", cfg.resolved);
  meta["seed"] = cfg.engine.seed;
  meta["algorithm"] = cfg.algorithm;
  meta["halt_reason"] = to_string(traj.halt_reason);
  meta["records"] = traj.records.size();
  meta["bound_applications"] = traj.bound_applications;
  meta["per_application_delta"] = traj.per_application_delta;
  write_file(cfg.trajectory_csv + ".meta.json", meta.dump(2) + "\n");

  if (traj.final_model) {
    std::ostringstream model;
    save_model(model, *traj.final_model);
    write_file(cfg.model_path, model.str());
  }
  out << "halt_reason: " << to_string(traj.halt_reason) << '\n'
      << "records: " << traj.records.size() << '\n'
      << "trajectory: " << cfg.trajectory_csv << '\n';
  return traj.halt_reason == HaltReason::completed ? kOk : kHalted;
}

int cmd_verify(const std::string& path, std::optional<int> jobs, std::ostream& out) {
  auto cfg = config::parse_verify(config::load_json_file(path));
  if (jobs) {
    if (*jobs < 1) throw config::ConfigError("--parallelism must be >= 1");
    if (cfg.coverage) cfg.coverage->parallelism = *jobs;
    if (cfg.audit) cfg.audit->parallelism = *jobs;
    cfg.resolved["parallelism"] = *jobs;
  }
  const int parallelism = cfg.resolved.value("parallelism", 1);

  json doc = envelope("campaign", cfg.resolved);
  doc["seed"] = cfg.seed;
  bool pass = false;
  switch (cfg.campaign) {
    case config::Campaign::coverage: {
      const auto r = coverage_experiment(*cfg.coverage);
      print_table(out, r);
      doc["report"] = to_json(r);
      pass = r.pass;
      break;
    }
    case config::Campaign::audit: {
      const auto r = assumption_audit(*cfg.audit);
      print_table(out, r);
      doc["report"] = to_json(r);
      pass = r.pass;
      break;
    }
    case config::Campaign::limit: {
      const auto& l = *cfg.limit;
      const auto r = limit_curve(l.spec, l.gamma0, l.n_grid, l.tolerance);
      print_table(out, r);
      doc["report"] = to_json(r);
      pass = r.pass;
      break;
    }
    case config::Campaign::rate: {
      const auto r = rate_experiment(*cfg.rate);
      print_table(out, r);
      doc["report"] = to_json(r);
      pass = r.pass;
      break;
    }
    case config::Campaign::algorithm2: {
      const auto& a = *cfg.algorithm2;
      const auto r = algorithm2_campaign(a.engine, a.seeds, cfg.seed, parallelism, a.risk_samples);
      doc["report"] = to_json(r);
      pass = r.mixture_ok && r.gate_ok && r.applicability_pass;
      out << "algorithm2 campaign  seeds=" << a.seeds << "  non_increasing=" << r.non_increasing
          << "  mixture_ok=" << r.mixture_ok << "  gate_ok=" << r.gate_ok
          << "  violations=" << r.violations << "/" << r.bound_checks << '\n'
          << "  result " << (pass ? "PASS" : "FAIL") << '\n';
      break;
    }
  }
  write_file(cfg.report_path, doc.dump(2) + "\n");
  out << "report: " << cfg.report_path << '\n';
  return pass ? kOk : kCampaignFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certification simulator for pseudo-label self-training", "plcert"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PLCERT_VERSION);

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound", "Evaluate a random-label risk bound");
  bound_cmd->add_option("--formula", bound.formula, "theorem1 (alias full) or relaxed")
      ->required()
      ->check(CLI::IsMember({"theorem1", "full", "relaxed"}));
  bound_cmd->add_option("--k", bound.k, "class count")->required();
  bound_cmd->add_option("--m", bound.m, "randomly labeled count")->required();
  bound_cmd->add_option("--n", bound.n, "clean labeled count")->required();
  bound_cmd->add_option("--delta", bound.delta, "confidence parameter")->required();
  bound_cmd->add_option("--e-clean", bound.e_clean, "error on the clean portion")->required();
  bound_cmd->add_option("--e-random", bound.e_random, "error on the randomized portion")->required();

  ComplexityArgs cx;
  auto* cx_cmd = app.add_subcommand("complexity", "Unlabeled count needed for a convergence rate");
  cx_cmd->add_option("--k", cx.k)->required();
  cx_cmd->add_option("--delta", cx.delta)->required();
  cx_cmd->add_option("--epsilon", cx.epsilon);
  cx_cmd->add_option("--delta-tilde", cx.delta_tilde)->required();
  cx_cmd->add_option("--p", cx.p)->required();
  cx_cmd->add_option("--c1", cx.c1)->required();
  cx_cmd->add_option("--c2", cx.c2)->required();
  cx_cmd->add_option("--e-d-star", cx.e_d_star, "use this E_D* instead of solving for it");
  cx_cmd->add_option("--cap", cx.cap, "search cap for the self-consistent solve");

  std::string sim_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a pseudo-label trajectory");
  sim_cmd->add_option("--config", sim_path, "JSON run config")->required();

  std::string verify_path;
  std::optional<int> jobs;
  auto* verify_cmd = app.add_subcommand("verify", "Run a verification campaign");
  verify_cmd->add_option("--config", verify_path, "JSON campaign config")->required();
  verify_cmd->add_option("--parallelism", jobs, "worker threads (default: all processors)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << PLCERT_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "plcert: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (bound_cmd->parsed()) return cmd_bound(bound, out);
    if (cx_cmd->parsed()) return cmd_complexity(cx, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim_path, out);
    if (verify_cmd->parsed()) return cmd_verify(verify_path, jobs, out);
  } catch (const config::ConfigError& e) {
    err << "plcert: config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const PreconditionError& e) {
    err << "plcert: " << e.what() << '\n';
    return kUsageError;
  } catch (const InfeasibleError& e) {
    err << "plcert: infeasible: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "plcert: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace plcert::cli
