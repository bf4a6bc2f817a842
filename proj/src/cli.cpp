// Copyright 2026 The PSGD Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "psgd/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "psgd/diagnostics.hpp"
#include "psgd/errors.hpp"
#include "psgd/serialize.hpp"
#include "psgd/trace_io.hpp"

namespace psgd {

std::unique_ptr<Problem> build_problem(const ProblemOptions& opts) {
  if (opts.name == "quad") {
    detail::require(!opts.hdiag.empty(), "--hdiag needs at least one value");
    const std::size_t n = opts.hdiag.size();
    return make_quadratic(Matrix::diagonal(opts.hdiag), Vector(n, 0.0), opts.noise);
  }
  if (opts.name == "rosenbrock") return make_rosenbrock();
  if (opts.name == "xor") return make_xor_mlp(opts.hidden);
  if (opts.name == "addition") return make_addition_rnn(opts.seq_len, opts.hidden, opts.batch);
  throw ContractViolation("--problem must be quad, rosenbrock, xor or addition, got '" + opts.name + "'");
}

RunDefaults defaults_for(const Problem& problem) {
  RunDefaults d;
  const std::string name = problem.name();
  if (name == "rosenbrock") {
    d.mu = 1.0;
    d.precond_mu = 0.1;
    d.clip_omega = 1.0;
  } else if (name == "xor" || name == "addition") {
    d.mu = 0.5;
    d.clip_omega = 10.0 * std::sqrt(static_cast<double>(problem.dim()));
  }
  return d;
}

namespace {

struct Options {
  ProblemOptions problem;
  std::string method = "psgd";
  std::string precond = "dense";
  double mu = 0.1;
  double precond_mu = 0.01;
  std::size_t splu_order = 10;
  bool splu_per_tensor = false;
  std::string probe = "exact";
  double sample_std = 0.0;
  double clip = 0.0;
  std::string skip = "never";
  std::string damping = "none";
  std::uint64_t iters = 100;
  std::uint64_t seed = 0;
  std::size_t reps = 1;
  bool timing = false;
  bool freeze = false;
  std::string out_dir;
  std::string checkpoint;
  std::string init_checkpoint;
  std::vector<double> mu_grid;
  double target = 0.0;
  std::vector<std::string> suites;
};

std::string sanitize(const std::string& s) {
  std::string r;
  for (char c : s) r += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig make_config(const Options& o, const Problem& problem, const CLI::App& app) {
  const RunDefaults d = defaults_for(problem);
  RunConfig cfg;
  cfg.method = parse_method(o.method);
  cfg.precond = PrecondSpec::parse(o.precond);
  cfg.precond.splu_order = o.splu_order;
  cfg.precond.splu_per_tensor = o.splu_per_tensor;
  cfg.mu = app.count("--mu") ? o.mu : d.mu;
  cfg.precond_mu = app.count("--precond-mu") ? o.precond_mu : d.precond_mu;
  if (app.count("--clip"))
    cfg.clip_omega = o.clip;
  else
    cfg.clip_omega = d.clip_omega;
  cfg.probe = ProbeConfig::for_mode(parse_probe_mode(o.probe));
  if (app.count("--sample-std")) cfg.probe.sample_std = o.sample_std;
  cfg.probe.damping = Damping::parse(o.damping);
  if (cfg.probe.mode == ProbeMode::kExact && !problem.has_exact_hvp())
    throw ContractViolation("--probe exact: problem '" + problem.name() + "' has no exact Hvp; use --probe approx");
  cfg.skip = parse_skip_schedule(o.skip);
  cfg.iters = o.iters;
  cfg.seed = o.seed;
  cfg.freeze_precond = o.freeze;
  cfg.timing = o.timing;
  cfg.validate();
  return cfg;
}

std::string output_dir(const Options& o, const CLI::App& app) {
  if (app.count("--out")) return o.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return o.out_dir.empty() ? "psgd_out" : o.out_dir;
}

struct RepOutcome {
  RunConfig cfg;
  RunSummary summary;
  std::string csv;
  std::string diagnostic;
  std::optional<std::uint64_t> iters_to_target;
};

// Runs every configuration, in parallel; each run owns its RNG and file.
std::vector<RepOutcome> execute(const Problem& problem, std::vector<RunConfig> cfgs, const std::string& dir,
                                const std::string& problem_label, std::optional<double> target,
                                const std::optional<OptimizerState>& initial, RunResult* first_result) {
  std::vector<RepOutcome> out(cfgs.size());
  std::vector<std::string> errors(cfgs.size());
  const auto count = static_cast<std::ptrdiff_t>(cfgs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      const RunConfig& cfg = cfgs[i];
      RunResult res = run(problem, cfg, initial);
      RepOutcome& o = out[i];
      o.cfg = cfg;
      o.summary = summarize(res.trace, res.diverged);
      o.diagnostic = res.diagnostic;
      if (target) {
        for (const TraceRow& r : res.trace)
          if (r.train_loss < *target) {
            o.iters_to_target = r.iter;
            break;
          }
      }
      o.csv = problem_label + "-" + to_string(cfg.method) + "-" + sanitize(cfg.precond.to_string()) + "-mu" +
              fmt(cfg.mu) + "-seed" + std::to_string(cfg.seed) + ".csv";
      write_trace_file((std::filesystem::path(dir) / o.csv).string(), problem_label + " " + cfg.describe(), res.trace);
      if (i == 0 && first_result) *first_result = std::move(res);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  return out;
}

std::string summary_table(const std::vector<RepOutcome>& outcomes, bool with_target) {
  std::ostringstream os;
  os << "# smoothed_final_loss is an EMA of train_loss with factor " << kDefaultSmoothing << '\n';
  os << "csv,method,mu,seed,iters,final_loss,best_loss,smoothed_final_loss,diverged";
  if (with_target) os << ",iters_to_target";
  os << '\n';
  for (const RepOutcome& o : outcomes) {
    os << o.csv << ',' << to_string(o.cfg.method) << ',' << fmt(o.cfg.mu) << ',' << o.cfg.seed << ','
       << o.summary.iters << ',' << real(o.summary.final_loss) << ',' << real(o.summary.best_loss) << ','
       << real(o.summary.smoothed_final_loss) << ',' << (o.summary.diverged ? 1 : 0);
    if (with_target) os << ',' << (o.iters_to_target ? std::to_string(*o.iters_to_target) : std::string("never"));
    os << '\n';
  }
  return os.str();
}

int do_run(const Options& o, const CLI::App& app, bool sweep, std::optional<double> target, std::ostream& out) {
  const auto problem = build_problem(o.problem);
  const RunConfig base = make_config(o, *problem, app);
  detail::require(o.reps >= 1, "--reps must be >= 1");

  std::optional<OptimizerState> initial;
  if (!o.init_checkpoint.empty()) {
    detail::require(base.method == Method::kPsgd, "--init-checkpoint needs --method psgd");
    initial = make_state(*problem, base);
    initial->precond = load_checkpoint(o.init_checkpoint);
  }

  std::vector<double> mus = sweep ? o.mu_grid : std::vector<double>{base.mu};
  detail::require(!mus.empty(), "sweep needs --mu-grid");
  std::vector<RunConfig> cfgs;
  for (double mu : mus) {
    for (std::size_t r = 0; r < o.reps; ++r) {
      RunConfig c = base;
      c.mu = mu;
      c.seed = base.seed + r;
      c.validate();
      cfgs.push_back(c);
    }
  }

  const std::string dir = output_dir(o, app);
  std::filesystem::create_directories(dir);
  RunResult first;
  const auto outcomes = execute(*problem, cfgs, dir, o.problem.name, target, initial, &first);

  const std::string table = summary_table(outcomes, target.has_value());
  write_text_file((std::filesystem::path(dir) / (sweep ? "sweep.csv" : "summary.csv")).string(), table);
  out << table;
  for (const RepOutcome& oc : outcomes)
    if (oc.summary.diverged) out << "# " << oc.csv << " diverged: " << oc.diagnostic << '\n';

  if (!o.checkpoint.empty()) {
    detail::require(base.method == Method::kPsgd, "--checkpoint needs --method psgd");
    save_checkpoint(o.checkpoint, first.state.precond);
  }
  return 0;
}

int do_verify(const Options& o, std::ostream& out) {
  std::vector<Suite> suites;
  for (const std::string& s : o.suites) {
    if (s == "all") {
      suites = {Suite::kGradcheck, Suite::kFixedpoint, Suite::kGroups, Suite::kInverses};
      break;
    }
    suites.push_back(parse_suite(s));
  }
  bool ok = true;
  for (Suite s : suites) {
    out << "[" << to_string(s) << "]\n";
    for (const CheckResult& c : run_suite(s, o.seed)) {
      out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (tolerance " << c.tolerance << ")\n";
      ok = ok && c.pass;
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Preconditioned SGD toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  Options o;

  app.add_option("--problem", o.problem.name, "quad, rosenbrock, xor or addition")->capture_default_str();
  app.add_option("--method", o.method, "psgd, sgd, rmsprop or esgd")->capture_default_str();
  app.add_option("--precond", o.precond, "dense, diag, splu, kron, scan or sum:name=kind,...")
      ->capture_default_str();
  app.add_option("--mu", o.mu, "step size (problem default when unset)");
  app.add_option("--precond-mu", o.precond_mu, "normalized preconditioner step in (0, 1), default 0.01");
  app.add_option("--splu-order", o.splu_order, "SPLU order r")->capture_default_str();
  app.add_flag("--splu-per-tensor", o.splu_per_tensor, "one SPLU block per tensor");
  app.add_option("--probe", o.probe, "approx or exact Hessian-vector products")->capture_default_str();
  app.add_option("--sample-std", o.sample_std, "probe standard deviation (mode default when unset)");
  app.add_option("--clip", o.clip, "preconditioned gradient clipping threshold");
  app.add_option("--skip", o.skip, "preconditioner update schedule: never or log10")->capture_default_str();
  app.add_option("--damping", o.damping, "none, trad:LAMBDA or noncvx:LAMBDA")->capture_default_str();
  app.add_option("--iters", o.iters, "iterations per run")->capture_default_str();
  app.add_option("--seed", o.seed, "base seed; repetition k uses seed + k")->capture_default_str();
  app.add_option("--reps", o.reps, "repetitions")->capture_default_str();
  app.add_flag("--freeze-precond", o.freeze, "never update the preconditioner");
  app.add_flag("--timing", o.timing, "record wall_ns (traces are then not reproducible)");
  app.add_option("--hdiag", o.problem.hdiag, "quad: Hessian diagonal")->delimiter(',');
  app.add_option("--noise", o.problem.noise, "quad: gradient noise scale")->capture_default_str();
  app.add_option("--hidden", o.problem.hidden, "xor/addition: hidden units")->capture_default_str();
  app.add_option("--seq-len", o.problem.seq_len, "addition: sequence length")->capture_default_str();
  app.add_option("--batch", o.problem.batch, "addition: sequences per batch")->capture_default_str();
  app.add_option("--out", o.out_dir, std::string("output directory (default psgd_out, or $") + kOutDirEnv + ")");
  app.add_option("--checkpoint", o.checkpoint, "save the final preconditioner of the first run here");
  app.add_option("--init-checkpoint", o.init_checkpoint, "start from a saved preconditioner");

  CLI::App* run_cmd = app.add_subcommand("run", "train and write one CSV trace per repetition");
  run_cmd->fallthrough();
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a step-size grid");
  sweep_cmd->fallthrough();
  sweep_cmd->add_option("--mu-grid", o.mu_grid, "step sizes")->delimiter(',')->required();
  sweep_cmd->add_option("--target", o.target, "report the first iteration with loss below this");
  CLI::App* verify_cmd = app.add_subcommand("verify", "run property suites");
  verify_cmd->fallthrough();
  verify_cmd->add_option("suites", o.suites, "gradcheck, fixedpoint, groups, inverses or all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*verify_cmd) return do_verify(o, out);
    if (*sweep_cmd) {
      const auto target = sweep_cmd->count("--target") ? std::optional<double>(o.target) : std::nullopt;
      return do_run(o, app, true, target, out);
    }
    return do_run(o, app, false, std::nullopt, out);
  } catch (const ContractViolation& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const CapabilityError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace psgd
