// Command-line front end: deterministic bound evaluation, norm solving,
// Monte-Carlo estimation, the comparability sweep, and the oracle-vs-solver
// verification suite. All configuration is explicit flags (no environment
// variables), all numeric output uses 12 significant digits, and identical
// invocations produce byte-identical output.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quadchaos/bounds.hpp"
#include "quadchaos/io.hpp"
#include "quadchaos/montecarlo.hpp"
#include "quadchaos/oracle.hpp"

namespace qc = quadchaos;

namespace {

// Output sink: a file when --output is given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  os << qc::join_csv(fields) << '\n';
}

std::string fmt(double v) { return qc::format_real(v); }

qc::CoeffMatrix load_matrix(const std::string& path) {
  return qc::matrix_from_json(qc::read_json_file(path));
}

qc::DistributionModel load_model(const std::string& path) {
  return qc::model_from_json(qc::read_json_file(path));
}

// ---------------------------------------------------------------------------
// bound

struct BoundArgs {
  std::string matrix, model_x, model_y, form = "decoupled", output;
  std::vector<double> p_list;
};

std::string method_tags(const qc::BoundReport& rep) {
  std::string tags;
  for (const auto& [part, method] : rep.component_methods) {
    if (!tags.empty()) tags += ';';
    tags += part + "=" + method;
  }
  return tags;
}

int run_bound(const BoundArgs& args) {
  const auto A = load_matrix(args.matrix);
  Sink sink(args.output);
  auto& os = sink.stream();
  write_row(os, {"p", "bilinear", "row", "col", "total", "methods"});

  for (const double p : args.p_list) {
    if (args.form == "decoupled" || args.form == "undecoupled") {
      const auto mx = load_model(args.model_x);
      qc::BoundReport rep;
      if (args.form == "decoupled") {
        const auto my =
            args.model_y.empty() ? mx : load_model(args.model_y);
        rep = qc::decoupled_moment_bound(A, mx, my, p);
      } else {
        rep = qc::undecoupled_moment_bound(A, mx, p);
      }
      write_row(os, {fmt(rep.p), fmt(rep.bilinear_term), fmt(rep.row_term),
                     fmt(rep.col_term), fmt(rep.total), method_tags(rep)});
      continue;
    }
    // Closed-form totals have no per-term split in the same shape; the
    // component columns stay zero and the total carries the value.
    double total = 0.0;
    if (args.form == "gaussian") {
      total = qc::gaussian_closed_form(A, p);
    } else if (args.form == "rademacher") {
      total = qc::rademacher_closed_form(A, p);
    } else if (args.form == "weibull") {
      const auto mx = load_model(args.model_x);
      if (mx.kind() != qc::DistKind::weibull_sym) {
        throw std::invalid_argument(
            "--form weibull reads its exponent from a weibull_sym model");
      }
      total = qc::weibull_closed_form(A, mx.weibull_r(), p);
    } else if (args.form == "truncweibull") {
      const auto mx = load_model(args.model_x);
      if (mx.kind() != qc::DistKind::trunc_weibull_sym) {
        throw std::invalid_argument(
            "--form truncweibull reads its parameters from a "
            "trunc_weibull_sym model");
      }
      total = qc::truncweibull_closed_form(A, mx.weibull_r(), mx.cutoff(), p);
    } else {
      throw std::invalid_argument("unknown form: " + args.form);
    }
    write_row(os, {fmt(p), "0", "0", "0", fmt(total), "total=closed_form"});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// norm

struct NormArgs {
  std::string matrix, model_x, model_y, mode = "linear", output;
  double p = 1.0;
};

int run_norm(const NormArgs& args) {
  const auto A = load_matrix(args.matrix);
  const auto mx = load_model(args.model_x);
  Sink sink(args.output);

  qc::NormSolution sol;
  if (args.mode == "linear") {
    std::vector<double> a;
    if (A.rows() == 1) {
      a.assign(A.data().begin(), A.data().end());
    } else if (A.cols() == 1) {
      a.assign(A.data().begin(), A.data().end());
    } else {
      throw std::invalid_argument(
          "linear mode needs a single-row or single-column matrix");
    }
    sol = qc::linear_norm(a, qc::ConstraintBudget(args.p, mx));
  } else if (args.mode == "bilinear") {
    const auto my = args.model_y.empty() ? mx : load_model(args.model_y);
    sol = qc::bilinear_norm(A, qc::ConstraintBudget(args.p, mx),
                            qc::ConstraintBudget(args.p, my));
  } else {
    throw std::invalid_argument("mode must be linear or bilinear");
  }
  sink.stream() << qc::solution_to_json(sol).dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string matrix, model_x, model_y, form = "decoupled", output;
  std::vector<double> p_list;
  std::uint64_t seed = 1;
  std::uint64_t samples = 1000000;
  int threads = 0;
};

int run_simulate(const SimulateArgs& args) {
  const auto A = load_matrix(args.matrix);
  const auto mx = load_model(args.model_x);
  std::optional<qc::DistributionModel> my;
  if (args.form == "decoupled") {
    my = args.model_y.empty() ? mx : load_model(args.model_y);
  } else if (args.form != "undecoupled") {
    throw std::invalid_argument("form must be decoupled or undecoupled");
  }

  const auto samples =
      qc::sample_chaos(A, mx, my ? &*my : nullptr, qc::RngStream(args.seed),
                       args.samples, args.threads);
  Sink sink(args.output);
  auto& os = sink.stream();
  write_row(os, {"p", "value", "ci_low", "ci_high", "samples", "estimator"});
  for (const double p : args.p_list) {
    const auto est = qc::empirical_moment(samples, p);
    write_row(os, {fmt(p), fmt(est.value), fmt(est.ci_low), fmt(est.ci_high),
                   std::to_string(est.samples), est.estimator});
    if (est.estimator == "median_of_means") {
      // Orders past the median-of-means switch also report the plain mean
      // so the two estimators can be compared side by side.
      const auto plain =
          qc::empirical_moment(samples, p, qc::MomentEstimator::plain);
      write_row(os, {fmt(p), fmt(plain.value), fmt(plain.ci_low),
                     fmt(plain.ci_high), std::to_string(plain.samples),
                     plain.estimator});
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::vector<std::string> models = {"gaussian", "rademacher", "weibull",
                                     "truncweibull"};
  std::vector<std::string> families = {"diagonal", "rank1", "random_full",
                                       "sparse"};
  std::vector<std::size_t> sizes = {4, 16, 32};
  std::vector<double> p_list = {1, 2, 4, 8, 16};
  int instances = 2;
  std::uint64_t seed = 1;
  std::uint64_t samples = 100000;
  int threads = 0;
  std::string output, summary;
};

qc::DistributionModel model_by_label(const std::string& label) {
  for (const auto& [name, model] : qc::default_sweep_models()) {
    if (name == label) return model;
  }
  throw std::invalid_argument("unknown sweep model: " + label);
}

int run_sweep(const SweepArgs& args) {
  qc::SweepConfig cfg;
  cfg.models.clear();
  for (const auto& label : args.models) {
    cfg.models.emplace_back(label, model_by_label(label));
  }
  cfg.families.clear();
  for (const auto& name : args.families) {
    cfg.families.push_back(qc::matrix_family_from_name(name));
  }
  cfg.sizes = args.sizes;
  cfg.p_values = args.p_list;
  cfg.instances_per_cell = args.instances;
  cfg.samples = args.samples;
  cfg.seed = args.seed;
  cfg.threads = args.threads;

  const auto res = qc::ratio_sweep(cfg);

  Sink sink(args.output);
  auto& os = sink.stream();
  write_row(os, {"family", "instance_seed", "p", "bound_total", "mc_value",
                 "mc_ci_low", "mc_ci_high", "ratio"});
  for (const auto& row : res.rows) {
    write_row(os, {row.family, std::to_string(row.instance_seed), fmt(row.p),
                   fmt(row.bound_total), fmt(row.mc_value),
                   fmt(row.mc_ci_low), fmt(row.mc_ci_high), fmt(row.ratio)});
  }

  // Ratio summary per (model, family) pair. Defaults to its own file next
  // to --output, or stderr when the rows go to stdout.
  std::string summary_path = args.summary;
  if (summary_path.empty() && !args.output.empty() && args.output != "-") {
    summary_path = args.output + ".summary";
  }
  std::ofstream sfile;
  if (!summary_path.empty()) {
    sfile.open(summary_path);
    if (!sfile) throw std::runtime_error("cannot write " + summary_path);
  }
  std::ostream& ss = summary_path.empty() ? std::cerr : sfile;
  write_row(ss, {"pair", "ratio_min", "ratio_max", "spread"});
  for (const auto& [key, win] : res.windows) {
    write_row(ss, {key, fmt(win.lo), fmt(win.hi), fmt(win.spread())});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string suite = "small", output;
};

struct VerifyCounts {
  int pass = 0, fail = 0;
};

void report_check(std::ostream& os, VerifyCounts& counts,
                  const std::string& check, const std::string& model,
                  int instance, double p, double value, double lo, double hi,
                  bool ok) {
  write_row(os, {check, model, std::to_string(instance), fmt(p), fmt(value),
                 fmt(lo), fmt(hi), ok ? "pass" : "fail"});
  (ok ? counts.pass : counts.fail) += 1;
}

// Solver-vs-oracle comparisons. A solver value passes when it lies within
// one percent of the oracle's certified interval.
int run_verify(const VerifyArgs& args) {
  const bool full = args.suite == "full";
  if (!full && args.suite != "small") {
    throw std::invalid_argument("suite must be small or full");
  }
  const std::vector<std::pair<std::string, qc::DistributionModel>> catalog = {
      {"square_tail", qc::DistributionModel::square_tail()},
      {"gaussian", qc::DistributionModel::gaussian()},
      {"rademacher", qc::DistributionModel::rademacher()},
      {"weibull_sym", qc::DistributionModel::weibull_sym(0.7)},
      {"trunc_weibull_sym", qc::DistributionModel::trunc_weibull_sym(0.7, 3.0)},
      {"custom_tail",
       qc::DistributionModel::custom_tail({{0.0, 1.0, 3.0, 9.0},
                                           {0.0, 1.0, 2.4, 6.0}})},
  };
  const int linear_count = full ? 50 : 6;
  const int bilinear_count = full ? 20 : 3;
  const std::vector<double> p_grid =
      full ? std::vector<double>{1, 2, 4, 8} : std::vector<double>{1, 4};

  Sink sink(args.output);
  auto& os = sink.stream();
  write_row(os, {"check", "model", "instance", "p", "value", "oracle_lo",
                 "oracle_hi", "status"});
  VerifyCounts counts;

  for (const auto& [name, model] : catalog) {
    for (int k = 0; k < linear_count; ++k) {
      qc::RngStream rng(0x11ee5u, static_cast<std::uint64_t>(k));
      const std::size_t n = 1 + rng.next_below(4);
      std::vector<double> a(n);
      for (auto& v : a) v = rng.next_gaussian();
      for (const double p : p_grid) {
        const qc::ConstraintBudget budget(p, model);
        const auto sol = qc::linear_norm(a, budget);
        const auto orc = qc::grid_linear_sup(a, budget);
        const bool ok =
            sol.value >= orc.lower * 0.99 && sol.value <= orc.upper * 1.01;
        report_check(os, counts, "linear", name, k, p, sol.value, orc.lower,
                     orc.upper, ok);
      }
    }
    if (model.kind() == qc::DistKind::rademacher && model.scale() > 1.0) {
      continue;  // no monotone grid oracle for that configuration
    }
    for (int k = 0; k < bilinear_count; ++k) {
      qc::RngStream rng(0xb11eau, static_cast<std::uint64_t>(k));
      std::vector<double> entries(4);
      for (auto& v : entries) v = rng.next_gaussian();
      const qc::CoeffMatrix A(2, 2, entries);
      for (const double p : p_grid) {
        const qc::ConstraintBudget budget(p, model);
        const auto sol = qc::bilinear_norm(A, budget, budget);
        const auto orc = qc::grid_bilinear_sup(A, budget, budget);
        const bool ok =
            sol.value >= orc.lower * 0.99 && sol.value <= orc.upper * 1.01;
        report_check(os, counts, "bilinear", name, k, p, sol.value, orc.lower,
                     orc.upper, ok);
      }
    }
  }
  return counts.fail == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Deterministic moment and tail estimates for order-2 random chaoses, "
      "with Monte-Carlo validation"};
  app.require_subcommand(1);

  BoundArgs bound;
  auto* cmd_bound = app.add_subcommand(
      "bound", "Evaluate the deterministic moment bound for a matrix");
  cmd_bound->add_option("--matrix", bound.matrix, "Matrix JSON file")
      ->required();
  cmd_bound->add_option("--model-x", bound.model_x,
                        "Model JSON for the row variables");
  cmd_bound->add_option("--model-y", bound.model_y,
                        "Model JSON for the column variables");
  cmd_bound->add_option("--p", bound.p_list, "Moment orders (comma list)")
      ->required()
      ->delimiter(',');
  cmd_bound->add_option(
      "--form", bound.form,
      "decoupled|undecoupled|gaussian|rademacher|weibull|truncweibull");
  cmd_bound->add_option("--output", bound.output, "Output CSV path");

  NormArgs norm;
  auto* cmd_norm = app.add_subcommand(
      "norm", "Solve one constrained-supremum norm, emitting JSON");
  cmd_norm->add_option("--matrix", norm.matrix, "Matrix JSON file")
      ->required();
  cmd_norm->add_option("--model-x", norm.model_x, "Model JSON")->required();
  cmd_norm->add_option("--model-y", norm.model_y,
                       "Model JSON for the second side (bilinear)");
  cmd_norm->add_option("--p", norm.p, "Moment order")->required();
  cmd_norm->add_option("--mode", norm.mode, "linear|bilinear");
  cmd_norm->add_option("--output", norm.output, "Output JSON path");

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand(
      "simulate", "Monte-Carlo moment estimates for one instance");
  cmd_sim->add_option("--matrix", sim.matrix, "Matrix JSON file")->required();
  cmd_sim->add_option("--model-x", sim.model_x, "Model JSON")->required();
  cmd_sim->add_option("--model-y", sim.model_y,
                      "Model JSON for the second sequence");
  cmd_sim->add_option("--p", sim.p_list, "Moment orders (comma list)")
      ->required()
      ->delimiter(',');
  cmd_sim->add_option("--form", sim.form, "decoupled|undecoupled");
  cmd_sim->add_option("--seed", sim.seed, "RNG seed");
  cmd_sim->add_option("--samples", sim.samples, "Sample count");
  cmd_sim->add_option("--threads", sim.threads, "Worker threads (0 = auto)");
  cmd_sim->add_option("--output", sim.output, "Output CSV path");

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand(
      "sweep", "Ratio sweep of MC moments against deterministic totals");
  cmd_sweep->add_option("--models", sweep.models, "Model labels")
      ->delimiter(',');
  cmd_sweep->add_option("--families", sweep.families, "Matrix families")
      ->delimiter(',');
  cmd_sweep->add_option("--sizes", sweep.sizes, "Matrix sizes")
      ->delimiter(',');
  cmd_sweep->add_option("--p", sweep.p_list, "Moment orders (comma list)")
      ->delimiter(',');
  cmd_sweep->add_option("--instances", sweep.instances, "Instances per cell");
  cmd_sweep->add_option("--seed", sweep.seed, "Base RNG seed");
  cmd_sweep->add_option("--samples", sweep.samples, "Samples per instance");
  cmd_sweep->add_option("--threads", sweep.threads,
                        "Worker threads (0 = auto)");
  cmd_sweep->add_option("--output", sweep.output, "Rows CSV path");
  cmd_sweep->add_option("--summary", sweep.summary, "Summary CSV path");

  VerifyArgs verify;
  auto* cmd_verify = app.add_subcommand(
      "verify", "Oracle-vs-solver comparisons, nonzero exit on failure");
  cmd_verify->add_option("--suite", verify.suite, "small|full");
  cmd_verify->add_option("--output", verify.output, "Pass/fail CSV path");

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (cmd_bound->parsed()) return run_bound(bound);
    if (cmd_norm->parsed()) return run_norm(norm);
    if (cmd_sim->parsed()) return run_simulate(sim);
    if (cmd_sweep->parsed()) return run_sweep(sweep);
    if (cmd_verify->parsed()) return run_verify(verify);
  } catch (const std::exception& e) {
    // Machine-readable error record on stderr, nonzero exit.
    qc::json err;
    err["error"] = e.what();
    err["subcommand"] = sub;
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
