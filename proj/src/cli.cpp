#include "surf/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "surf/dist.hpp"
#include "surf/errors.hpp"
#include "surf/exact.hpp"
#include "surf/forest.hpp"
#include "surf/harness.hpp"
#include "surf/oracle.hpp"
#include "surf/trace.hpp"

namespace surf::cli {

namespace {

using json = nlohmann::ordered_json;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_payload(const CommandPlan& plan, const std::string& payload, std::ostream& out) {
  if (plan.out.empty()) {
    out << payload;
    return;
  }
  std::ofstream os(plan.out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + plan.out + " for writing");
  os << payload;
  if (!os) throw std::runtime_error("write failed for " + plan.out);
}

// CSV written to a file gets its provenance in a sibling metadata file.
void write_meta(const CommandPlan& plan, const json& meta) {
  if (plan.out.empty() || plan.format != Format::csv) return;
  const std::string path = plan.out + ".meta.json";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << meta.dump(2) << '\n';
}

json provenance(const std::string& command, const std::string& spec, std::uint64_t seed,
                const std::optional<std::uint64_t>& n) {
  json j;
  j["tool"] = "surf";
  j["version"] = std::string(tool_version());
  j["command"] = command;
  j["spec"] = spec;
  j["seed"] = seed;
  if (n) j["n"] = *n;
  return j;
}

int do_simulate(const CommandPlan& plan, std::ostream& out, std::ostream& log) {
  Forest f;
  std::string spec = plan.dist;
  std::uint64_t seed = plan.seed;
  if (!plan.replay.empty()) {
    auto trace = read_trace(plan.replay);
    spec = trace.spec;
    seed = trace.seed;
    f = Forest(std::move(trace.steps));
  } else {
    const auto d = StepDistribution::parse(plan.dist);
    spec = d.spec();
    f = Forest::build(d, *plan.n, plan.seed);
  }
  if (!plan.trace.empty()) write_trace(Trace{spec, seed, {f.steps().begin(), f.steps().end()}}, plan.trace);

  const auto st = compute_stats(f);
  const std::uint64_t n = f.size();
  json scalars;
  scalars["M"] = st.num_trees;
  scalars["O"] = st.root_hits;
  scalars["H"] = st.height;
  scalars["H0"] = st.height_of_zero;
  scalars["L"] = st.leaves_of_zero;
  scalars["S0"] = st.size_of_zero();
  scalars["N"] = st.last_renewal;
  scalars["N_1"] = st.renewal_visits;
  scalars["max_degree_positive"] = st.max_degree_positive;
  scalars["max_degree_root"] = st.max_degree_root;
  scalars["largest_tree"] = st.largest_tree;

  const std::optional<std::uint64_t> horizon = n;
  auto meta = provenance("simulate", spec, seed, horizon);
  std::string payload;
  if (plan.format == Format::json) {
    json j = meta;
    j["stats"] = scalars;
    std::map<std::uint64_t, std::uint64_t> hist;
    for (const auto& [root, size] : st.tree_sizes) ++hist[size];
    json h = json::object();
    for (const auto& [size, count] : hist) h[std::to_string(size)] = count;
    j["tree_size_histogram"] = h;
    std::map<std::uint64_t, std::uint64_t> dhist;
    for (const auto& [root, deg] : st.root_degrees) ++dhist[deg];
    json dh = json::object();
    for (const auto& [deg, count] : dhist) dh[std::to_string(deg)] = count;
    j["root_degree_histogram"] = dh;
    j["profile_of_zero"] = st.profile_of_zero;
    payload = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "stat,value\n";
    for (const auto& [key, value] : scalars.items()) os << key << ',' << value.dump() << '\n';
    payload = os.str();
  }
  write_payload(plan, payload, out);
  write_meta(plan, meta);
  log << "simulate " << spec << " n=" << n << " seed=" << seed << ": M=" << st.num_trees << " O=" << st.root_hits
      << " H=" << st.height << " S0=" << st.size_of_zero() << '\n';
  return kExitOk;
}

int do_exact(const CommandPlan& plan, std::ostream& out, std::ostream& log) {
  const auto d = StepDistribution::parse(plan.dist);
  const std::uint64_t n = *plan.n;
  const auto series = exact::exact_series(d, n);
  const auto trees = exact::expected_trees(d, n, plan.epsilon);
  const auto info = d.mean_info();

  auto meta = provenance("exact", d.spec(), plan.seed, plan.n);
  meta["columns"] = {"n", "r", "Rhat", "m", "EL"};
  meta["EM"] = trees.em;
  meta["EM_error"] = trees.em_error;
  meta["EM_converged"] = trees.converged;
  meta["EM_roots_summed"] = trees.roots_summed;
  meta["epsilon"] = plan.epsilon;
  meta["EO"] = trees.eo;
  meta["VarO"] = trees.var_o;
  meta["mean_finite"] = info.finite;
  if (info.value) meta["mean"] = *info.value;
  meta["survival_probability"] = exact::survival_probability(d);

  std::string payload;
  if (plan.format == Format::csv) {
    std::ostringstream os;
    os << "n,r,Rhat,m,EL\n";
    for (std::uint64_t t = 0; t <= n; ++t) {
      os << t << ',' << num(series.r[t]) << ',' << num(series.rhat[t]) << ',' << num(series.m[t]) << ','
         << num(series.el[t]) << '\n';
    }
    payload = os.str();
  } else {
    json j = meta;
    j["r"] = series.r;
    j["Rhat"] = series.rhat;
    j["m"] = series.m;
    j["EL"] = series.el;
    payload = j.dump(2) + "\n";
  }
  write_payload(plan, payload, out);
  write_meta(plan, meta);
  log << "exact " << d.spec() << " n=" << n << ": r_n=" << num(series.r[n]) << " Rhat_n=" << num(series.rhat[n])
      << " EM=" << num(trees.em) << (trees.converged ? "" : " (not converged)") << '\n';
  return kExitOk;
}

int do_oracle(const CommandPlan& plan, std::ostream& out, std::ostream& log) {
  const auto d = StepDistribution::parse(plan.dist);
  const auto res = oracle::enumerate_exact(d, *plan.n, plan.budget, plan.threads);
  auto meta = provenance("oracle", d.spec(), plan.seed, plan.n);
  std::string payload;
  if (plan.format == Format::json) {
    json j = meta;
    const auto body = oracle::to_json(res);
    for (const auto& [key, value] : body.items()) {
      if (key != "spec" && key != "n") j[key] = value;
    }
    payload = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "quantity,value,rational\n";
    auto row = [&](const std::string& name, const oracle::Value& v) {
      os << name << ',' << num(static_cast<double>(v.value)) << ',' << v.rational << '\n';
    };
    row("EM", res.em);
    row("EO", res.eo);
    row("EL", res.el);
    row("EH", res.eh);
    row("EH0", res.eh_zero);
    for (std::size_t t = 0; t < res.r.size(); ++t) row("r_" + std::to_string(t), res.r[t]);
    for (std::size_t t = 0; t < res.rhat.size(); ++t) row("Rhat_" + std::to_string(t), res.rhat[t]);
    for (std::size_t k = 0; k < res.size_by_root.size(); ++k) row("ES_-" + std::to_string(k), res.size_by_root[k]);
    for (std::size_t k = 0; k < res.degree_root.size(); ++k) row("ED_-" + std::to_string(k), res.degree_root[k]);
    for (std::size_t t = 0; t < res.degree_positive.size(); ++t) {
      row("ED_" + std::to_string(t + 1), res.degree_positive[t]);
    }
    payload = os.str();
  }
  write_payload(plan, payload, out);
  write_meta(plan, meta);
  log << "oracle " << d.spec() << " n=" << *plan.n << ": " << res.sequences << " sequences, EM="
      << (res.em.rational.empty() ? num(static_cast<double>(res.em.value)) : res.em.rational) << '\n';
  return kExitOk;
}

std::string checks_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << "check,n,verdict,measured,reference,tolerance,proxy,detail\n";
  for (const auto& c : rep.checks) {
    std::string detail = c.detail;
    for (auto& ch : detail) {
      if (ch == ',' || ch == '"') ch = ';';
    }
    os << c.name << ',' << c.n << ',' << verdict_name(c.verdict) << ',' << num(c.measured) << ','
       << num(c.reference) << ',' << num(c.tolerance) << ',' << (c.proxy ? 1 : 0) << ',' << detail << '\n';
  }
  return os.str();
}

int emit_report(const CommandPlan& plan, const ExperimentReport& rep, const std::string& command, std::ostream& out,
                std::ostream& log) {
  auto meta = provenance(command, rep.spec, rep.seed, std::nullopt);
  meta["horizons"] = rep.horizons;
  meta["reps"] = rep.reps;
  std::string payload;
  if (plan.format == Format::json) {
    json j = meta;
    const auto body = to_json(rep);
    for (const auto& [key, value] : body.items()) {
      if (!j.contains(key)) j[key] = value;
    }
    payload = j.dump(2) + "\n";
  } else {
    payload = command == "verify" ? checks_csv(rep) : stats_csv(rep);
  }
  write_payload(plan, payload, out);
  write_meta(plan, meta);
  log << to_table(rep);
  std::size_t passed = 0, failed = 0, skipped = 0;
  for (const auto& c : rep.checks) {
    if (c.verdict == Verdict::pass) ++passed;
    else if (c.verdict == Verdict::fail) ++failed;
    else ++skipped;
  }
  log << command << ' ' << rep.spec << ": " << passed << " passed, " << failed << " failed, " << skipped
      << " not applicable\n";
  return rep.any_failed() ? kExitCheckFailed : kExitOk;
}

int do_experiment(const CommandPlan& plan, std::ostream& out, std::ostream& log) {
  auto cfg = parse_config(read_file(plan.config));
  if (plan.threads != 0) cfg.threads = plan.threads;
  return emit_report(plan, run_experiment(cfg), "experiment", out, log);
}

int do_verify(const CommandPlan& plan, std::ostream& out, std::ostream& log) {
  const auto d = StepDistribution::parse(plan.dist);
  const auto rep = verify_suite(d, plan.sizes, plan.seed, plan.reps, plan.threads, plan.epsilon);
  return emit_report(plan, rep, "verify", out, log);
}

void check_dist(const std::string& spec) {
  try {
    StepDistribution::parse(spec);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--dist: ") + e.what());
  }
}

}  // namespace

CommandPlan parse_args(const std::vector<std::string>& args) {
  CommandPlan plan;
  plan.seed = kDefaultSeed;
  plan.epsilon = kDefaultEpsilon;
  plan.budget = oracle::kDefaultBudget;
  plan.reps = 1000;
  std::string format = "json";
  std::uint64_t n = 0;

  CLI::App app{"Simulation, exact computation and verification for subtractive random forests", "surf"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(tool_version()));

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", plan.out, "Output path (default: stdout)");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", plan.threads, "Worker threads (0 = all)");
  };
  auto with_dist = [&](CLI::App* sub) { sub->add_option("--dist", plan.dist, "Step distribution spec")->required(); };
  auto with_n = [&](CLI::App* sub) {
    return sub->add_option("--n", n, "Horizon")->check(CLI::Range(std::uint64_t{1}, kMaxHorizon));
  };
  auto with_seed = [&](CLI::App* sub) { sub->add_option("--seed", plan.seed, "Base seed"); };
  auto with_eps = [&](CLI::App* sub) {
    sub->add_option("--epsilon", plan.epsilon, "E M_n truncation tolerance")->check(CLI::PositiveNumber);
  };

  auto* sim = app.add_subcommand("simulate", "Build one realization and report its statistics");
  sim->add_option("--dist", plan.dist, "Step distribution spec");
  auto* sim_n = with_n(sim);
  with_seed(sim);
  common(sim);
  sim->add_option("--trace", plan.trace, "Also write the realization to this trace file");
  auto* replay = sim->add_option("--replay", plan.replay, "Analyze a saved trace instead of sampling");
  replay->excludes("--dist")->excludes(sim_n);

  auto* ex = app.add_subcommand("exact", "Exact series r, Rhat, m, EL and E M_n");
  with_dist(ex);
  with_n(ex)->required();
  with_seed(ex);
  with_eps(ex);
  common(ex);

  auto* orc = app.add_subcommand("oracle", "Brute-force enumeration over a finite support");
  with_dist(orc);
  with_n(orc)->required();
  with_seed(orc);
  orc->add_option("--budget", plan.budget, "Maximum number of sequences")->check(CLI::PositiveNumber);
  common(orc);

  auto* exp = app.add_subcommand("experiment", "Monte Carlo experiment from a key = value config file");
  exp->add_option("--config", plan.config, "Config file")->required()->check(CLI::ExistingFile);
  common(exp);

  auto* ver = app.add_subcommand("verify", "Run the verification checks");
  with_dist(ver);
  ver->add_option("--sizes", plan.sizes, "Comma-separated horizons")->required()->delimiter(',');
  with_seed(ver);
  ver->add_option("--reps", plan.reps, "Replications")->check(CLI::PositiveNumber);
  with_eps(ver);
  common(ver);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested(std::string(tool_version()) + "\n");
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  plan.format = format == "csv" ? Format::csv : Format::json;
  if (n != 0) plan.n = n;
  if (sim->parsed()) {
    plan.command = Subcommand::simulate;
    if (plan.replay.empty()) {
      if (plan.dist.empty()) throw UsageError("simulate: --dist is required (or --replay)");
      if (!plan.n) throw UsageError("simulate: --n is required");
      check_dist(plan.dist);
    }
  } else if (ex->parsed()) {
    plan.command = Subcommand::exact;
    check_dist(plan.dist);
  } else if (orc->parsed()) {
    plan.command = Subcommand::oracle;
    check_dist(plan.dist);
  } else if (exp->parsed()) {
    plan.command = Subcommand::experiment;
  } else {
    plan.command = Subcommand::verify;
    check_dist(plan.dist);
    for (auto s : plan.sizes) {
      if (s == 0) throw UsageError("--sizes: horizons must be positive");
    }
  }
  return plan;
}

int execute(const CommandPlan& plan, std::ostream& out, std::ostream& log) {
  switch (plan.command) {
    case Subcommand::simulate: return do_simulate(plan, out, log);
    case Subcommand::exact: return do_exact(plan, out, log);
    case Subcommand::oracle: return do_oracle(plan, out, log);
    case Subcommand::experiment: return do_experiment(plan, out, log);
    case Subcommand::verify: return do_verify(plan, out, log);
  }
  return kExitError;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  std::vector<std::string> args(argv + 1, argv + argc);
  CommandPlan plan;
  try {
    plan = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    log << "surf: usage error: " << e.what() << "\nRun 'surf --help' for usage.\n";
    return kExitError;
  }
  try {
    return execute(plan, out, log);
  } catch (const SpecError& e) {
    log << "surf: invalid input: " << e.what() << '\n';
  } catch (const BudgetError& e) {
    log << "surf: budget exceeded: " << e.what() << '\n';
  } catch (const std::exception& e) {
    log << "surf: error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace surf::cli
