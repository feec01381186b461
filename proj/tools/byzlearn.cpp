// byzlearn command-line tool.
//
// Exit codes: 0 success, 1 error (bad usage, unreadable input, runtime
// failure), 2 a requested assumption or graph check failed.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "byzlearn/byzlearn.hpp"

namespace fs = std::filesystem;
using namespace byzlearn;
using io::Json;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kCheckFailed = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("byzlearn");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  const char* env = std::getenv("BYZLEARN_LOG");
  if (env == nullptr) return;
  const std::string level(env);
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "warn")
    spdlog::set_level(spdlog::level::warn);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else
    spdlog::warn("ignoring BYZLEARN_LOG='{}' (expected error, warn, info or debug)", level);
}

void write_json(const fs::path& path, const Json& j) { io::write_text(path, j.dump(2) + "\n"); }

void print_failures(const AssumptionReport& report) {
  for (const auto& f : report.failures) std::cerr << "assumption failed: " << f << "\n";
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rounds;
  std::string out = "out";
  bool force = false;
};

/// Runs one configured scenario into `out`; returns the summary.
RunSummary execute(const ScenarioConfig& config, const std::optional<AssumptionReport>& assumptions,
                   const fs::path& out) {
  RunOptions options;
  options.check_assumptions = false;
  auto result = run_scenario(config, options);
  result.summary.assumptions = assumptions;
  fs::create_directories(out);
  if (config.output.trace) io::write_text(out / "trace.csv", trace_to_csv(result.trace));
  if (config.output.summary) write_json(out / "summary.json", io::summary_to_json(result.summary, config));
  return result.summary;
}

int cmd_run(const RunArgs& args) {
  ScenarioConfig config = io::load_scenario(args.scenario);
  if (args.seed) config.seed = *args.seed;
  if (args.rounds) config.rounds = *args.rounds;
  spdlog::info("checking assumptions for {} (n={}, f={}, m={})", to_string(config.rule), config.agents(),
               config.f, config.hypotheses());
  const AssumptionReport report = check_assumptions(config);
  if (!report.passed) {
    print_failures(report);
    if (!args.force) {
      std::cerr << "refusing to run; pass --force to override\n";
      return kCheckFailed;
    }
    spdlog::warn("running despite failed assumptions (--force)");
  }
  const RunSummary summary = execute(config, report, args.out);
  std::cout << "rule " << to_string(summary.rule) << ", seed " << summary.seed << ", " << summary.rounds
            << " rounds, true state " << summary.hypotheses[summary.theta_star] << "\n";
  for (const auto& a : summary.agents)
    std::cout << "  agent " << a.agent + 1 << ": decision "
              << (a.decision ? summary.hypotheses[*a.decision] : std::string("undecided")) << "\n";
  std::cout << (summary.success ? "all honest agents decided for the true state" : "not all honest agents decided")
            << "\nwrote " << (fs::path(args.out) / "trace.csv").string() << " and "
            << (fs::path(args.out) / "summary.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// check-graph

struct CheckArgs {
  std::string graph;
  std::size_t f = 0;
  std::size_t dim = 1;
  std::string model;
  std::uint64_t sample = 0;
  std::uint64_t cap = 10'000'000;
  std::string out;
};

int cmd_check_graph(const CheckArgs& args) {
  const Digraph g = io::load_graph(args.graph);
  const TopologyOptions options{args.cap, args.sample, 1};
  TopologyReport topology;
  try {
    topology = check_topology(g, args.f, args.dim, options);
  } catch (const ResourceLimitError& e) {
    throw ResourceLimitError(std::string(e.what()) + "; use --sample K to test K random reduced graphs instead");
  }
  Json report{{"topology", io::topology_to_json(topology, args.f, args.dim)}};
  bool pass = topology.assumption_holds;

  std::cout << "reduced graphs (dim " << args.dim << ", f " << args.f << "): chi = " << topology.chi
            << ", examined " << topology.examined << (topology.exhaustive ? "" : " (sampled)") << "\n";
  if (topology.assumption_holds)
    std::cout << "unique source component: yes, gamma = " << topology.gamma << "\n";
  else
    std::cout << "unique source component: no, witness " << describe(*topology.witness) << "\n";

  if (!args.model.empty()) {
    const SignalModel model = io::load_model(args.model);
    if (model.agent_count() != g.size())
      throw InputError("model describes " + std::to_string(model.agent_count()) + " agents but the graph has " +
                       std::to_string(g.size()));
    if (!topology.assumption_holds) {
      report["identifiability"] = nullptr;
      std::cout << "identifiability: skipped (no unique source component)\n";
    } else {
      Json per_truth = Json::array();
      IdentifiabilityOptions id_options;
      id_options.topology = options;
      for (Hypothesis truth = 0; truth < model.hypothesis_count(); ++truth) {
        const auto id = check_identifiability(g, args.f, args.dim, model, truth, id_options);
        pass = pass && id.holds;
        std::cout << "identifiability with true state " << model.hypotheses()[truth] << ": "
                  << (id.holds ? "yes" : "no") << ", min KL sum " << id.min_kl_sum << "\n";
        per_truth.push_back(io::identifiability_to_json(id, model.hypotheses()));
      }
      const double constant = c1(model, g, args.f, args.dim, options);
      std::cout << "C0 = " << c0(model) << ", C1 = " << constant << "\n";
      report["identifiability"] = std::move(per_truth);
      report["c0"] = c0(model);
      report["c1"] = io::number_or_null(constant);
    }
  }
  report["pass"] = pass;
  if (!args.out.empty()) write_json(args.out, report);
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string scenario;
  std::vector<std::uint64_t> seeds;
  std::size_t jobs = 1;
  std::string out;
  bool force = false;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<RunSummary> summary;
};

Json distribution(std::vector<double> values) {
  if (values.empty()) return nullptr;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const std::size_t k = values.size();
  const double median = k % 2 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
  return Json{{"count", k}, {"min", values.front()}, {"median", median}, {"mean", sum / static_cast<double>(k)},
              {"max", values.back()}};
}

int cmd_sweep(const SweepArgs& args) {
  if (args.seeds.empty()) throw CLI::ValidationError("--seeds", "seed list is empty");
  const ScenarioConfig base = io::load_scenario(args.scenario);
  const AssumptionReport report = check_assumptions(base);
  if (!report.passed) {
    print_failures(report);
    if (!args.force) {
      std::cerr << "refusing to run; pass --force to override\n";
      return kCheckFailed;
    }
  }
  const fs::path out(args.out);
  fs::create_directories(out);

  std::vector<SeedOutcome> outcomes(args.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < args.seeds.size(); k = next++) {
      SeedOutcome& o = outcomes[k];
      o.seed = args.seeds[k];
      ScenarioConfig config = base;
      config.seed = o.seed;
      try {
        o.summary = execute(config, report, out / ("seed-" + std::to_string(o.seed)));
        o.ok = true;
        spdlog::info("seed {}: {}", o.seed, o.summary->success ? "success" : "no decision");
      } catch (const std::exception& e) {
        o.error = e.what();
        spdlog::error("seed {}: {}", o.seed, o.error);
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(args.jobs, 1, args.seeds.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Json table = Json::array();
  std::size_t ran = 0, successes = 0;
  std::vector<double> decision_rounds, fit_a, fit_r2;
  std::size_t fits = 0, negative = 0;
  for (const auto& o : outcomes) {
    Json row{{"seed", o.seed}, {"status", o.ok ? "ok" : "error"}};
    if (!o.ok) {
      row["error"] = o.error;
      table.push_back(std::move(row));
      continue;
    }
    ++ran;
    const auto& s = *o.summary;
    row["success"] = s.success;
    row["decision_round"] = s.decision_round ? Json(*s.decision_round) : Json(nullptr);
    if (s.success) ++successes;
    if (s.decision_round) decision_rounds.push_back(static_cast<double>(*s.decision_round));
    for (const auto& a : s.agents)
      for (const auto& [h, fit] : a.fits) {
        fit_a.push_back(fit.a);
        fit_r2.push_back(fit.r_squared);
        ++fits;
        if (fit.a < 0.0) ++negative;
      }
    table.push_back(std::move(row));
  }
  const double fraction = static_cast<double>(successes) / static_cast<double>(args.seeds.size());
  Json aggregate{{"scenario", args.scenario},
                 {"runs", args.seeds.size()},
                 {"completed", ran},
                 {"successes", successes},
                 {"success_fraction", fraction},
                 {"median_decision_round", decision_rounds.empty() ? Json(nullptr)
                                                                   : distribution(decision_rounds)["median"]},
                 {"decision_rounds", distribution(decision_rounds)},
                 {"fit_a", distribution(fit_a)},
                 {"fit_r_squared", distribution(fit_r2)},
                 {"negative_a_fraction", fits ? Json(static_cast<double>(negative) / static_cast<double>(fits))
                                              : Json(nullptr)},
                 {"seeds", std::move(table)}};
  write_json(out / "aggregate.json", aggregate);

  std::cout << "seed     status  success  decision_round\n";
  for (const auto& o : outcomes) {
    std::cout << o.seed << "\t " << (o.ok ? "ok   " : "error") << "\t ";
    if (o.ok)
      std::cout << (o.summary->success ? "yes" : "no ") << "\t  "
                << (o.summary->decision_round ? std::to_string(*o.summary->decision_round) : "-");
    else
      std::cout << o.error;
    std::cout << "\n";
  }
  std::cout << "success " << successes << "/" << args.seeds.size() << "\n";
  return ran == args.seeds.size() ? kOk : kError;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string trace;
  std::string plots;
  std::string summary;
  std::string json;
};

Hypothesis infer_truth(const RoundTrace& trace) {
  const std::size_t m = trace.hypothesis_count();
  const auto& last = trace.rounds.back().agents.front().state;
  Hypothesis best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Hypothesis a = 0; a < m; ++a) {
    double score = 0.0;
    if (trace.rule == Rule::pairwise) {
      score = std::numeric_limits<double>::infinity();
      for (Hypothesis b = 0; b < m; ++b)
        if (a != b) score = std::min(score, last[a * m + b]);
    } else {
      score = last[a];
    }
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

void write_plots(const RoundTrace& trace, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t m = trace.hypothesis_count();
  for (AgentId i : trace.honest) {
    std::ostringstream os;
    os << "# round";
    if (trace.rule == Rule::pairwise) {
      for (Hypothesis a = 0; a < m; ++a)
        for (Hypothesis b = 0; b < m; ++b)
          if (a != b) os << ' ' << trace.hypotheses[a] << '/' << trace.hypotheses[b];
    } else {
      for (const auto& label : trace.hypotheses) os << ' ' << label;
    }
    os << '\n';
    for (const auto& round : trace.rounds) {
      os << round.round;
      const auto& rec = trace.record(round.round, i);
      for (std::size_t k = 0; k < rec.state.size(); ++k)
        if (trace.rule != Rule::pairwise || k / m != k % m) os << ' ' << format_number(rec.state[k]);
      os << '\n';
    }
    io::write_text(dir / ("agent-" + std::to_string(i + 1) + ".dat"), os.str());
  }
  std::ostringstream os;
  os << "# round diameter\n";
  for (const auto& round : trace.rounds) os << round.round << ' ' << format_number(round.diameter) << '\n';
  io::write_text(dir / "diameter.dat", os.str());
}

int cmd_report(const ReportArgs& args) {
  const std::string text = io::read_text(args.trace);
  if (text.empty()) throw InputError(args.trace + ": trace is empty");
  RoundTrace trace;
  try {
    trace = trace_from_csv(text);
  } catch (const InputError& e) {
    throw InputError(args.trace + ": " + e.what());
  }
  if (trace.rule == Rule::consensus) throw InputError("report expects a learning trace");

  fs::path summary_path = args.summary.empty() ? fs::path(args.trace).parent_path() / "summary.json"
                                               : fs::path(args.summary);
  std::string truth_source = "final beliefs";
  trace.theta_star = infer_truth(trace);
  if (fs::exists(summary_path)) {
    const Json summary = io::load_json(summary_path);
    if (summary.contains("theta_star") && summary["theta_star"].is_string()) {
      trace.theta_star = trace.hypothesis_index(summary["theta_star"].get<std::string>());
      truth_source = summary_path.string();
    }
    if (summary.contains("rule") && summary["rule"].is_string()) {
      const Rule rule = parse_rule(summary["rule"].get<std::string>());
      if ((rule == Rule::pairwise) == (trace.rule == Rule::pairwise)) trace.rule = rule;
    }
  }
  const Hypothesis truth = *trace.theta_star;
  const std::size_t horizon = trace.horizon();
  std::cout << "trace " << args.trace << ": " << (trace.rule == Rule::pairwise ? "pairwise" : "belief")
            << " rule, " << horizon << " rounds, " << trace.honest.size() << " agents, "
            << trace.hypothesis_count() << " hypotheses\n"
            << "true state " << trace.hypotheses[truth] << " (from " << truth_source << ")\n"
            << "final consensus diameter " << format_number(trace.rounds.back().diameter) << "\n";
  for (AgentId i : trace.honest) {
    const auto& rec = trace.record(horizon, i);
    std::cout << "  agent " << i + 1 << ":";
    if (trace.rule == Rule::pairwise) {
      const std::size_t m = trace.hypothesis_count();
      for (Hypothesis h = 0; h < m; ++h)
        if (h != truth) std::cout << " r(" << trace.hypotheses[truth] << "," << trace.hypotheses[h]
                                  << ")=" << format_number(rec.state[truth * m + h]);
    } else {
      for (Hypothesis h = 0; h < trace.hypothesis_count(); ++h)
        std::cout << " " << trace.hypotheses[h] << "=" << std::exp(rec.state[h]);
    }
    std::cout << "\n";
  }
  if (!args.plots.empty()) {
    write_plots(trace, args.plots);
    std::cout << "plot data written to " << args.plots << "\n";
  }

  Json fits = Json::array();
  if (horizon < kMinFitRounds) {
    std::cout << "insufficient data: " << horizon << " rounds, decay fits need at least " << kMinFitRounds << "\n";
  } else {
    std::cout << "decay fits over rounds " << horizon - horizon / 2 << ".." << horizon << "\n"
              << "agent  theta        a                 b                 c                 R^2\n";
    for (AgentId i : trace.honest)
      for (Hypothesis h = 0; h < trace.hypothesis_count(); ++h) {
        if (h == truth) continue;
        const DecayFit fit = fit_quadratic_decay(trace, i, h);
        char line[256];
        std::snprintf(line, sizeof line, "%-6zu %-12s %-17.10g %-17.10g %-17.10g %.6f\n", i + 1,
                      trace.hypotheses[h].c_str(), fit.a, fit.b, fit.c, fit.r_squared);
        std::cout << line;
        Json row = io::fit_to_json(fit);
        row["agent"] = i + 1;
        row["theta"] = trace.hypotheses[h];
        fits.push_back(std::move(row));
      }
  }
  if (!args.json.empty())
    write_json(args.json, Json{{"rounds", horizon},
                               {"theta_star", trace.hypotheses[truth]},
                               {"final_diameter", trace.rounds.back().diameter},
                               {"fits", std::move(fits)}});
  return kOk;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item.find_first_not_of("0123456789") != std::string::npos)
      throw CLI::ValidationError("--seeds", "'" + item + "' is not a nonnegative integer");
    seeds.push_back(std::stoull(item));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Byzantine fault-tolerant non-Bayesian learning simulator"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run one scenario and write trace.csv and summary.json");
  run_cmd->add_option("--scenario", run.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "override the master seed");
  run_cmd->add_option("--rounds", run.rounds, "override the horizon T");
  run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();
  run_cmd->add_flag("--force", run.force, "run even if an assumption check fails");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check-graph", "check the unique-source condition (and identifiability)");
  check_cmd->add_option("--graph", check.graph, "graph JSON file")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--f", check.f, "fault budget")->required();
  check_cmd->add_option("--dim", check.dim, "reduced-graph dimension m")->required()->check(CLI::PositiveNumber);
  check_cmd->add_option("--model", check.model, "signal model JSON file")->check(CLI::ExistingFile);
  check_cmd->add_option("--sample", check.sample, "test K random reduced graphs instead of enumerating");
  check_cmd->add_option("--cap", check.cap, "enumeration cap")->capture_default_str();
  check_cmd->add_option("--out", check.out, "write the report as JSON");

  SweepArgs sweep;
  std::string seed_list;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a scenario over several seeds");
  sweep_cmd->add_option("--scenario", sweep.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--seeds", seed_list, "comma-separated seeds")->required();
  sweep_cmd->add_option("--jobs", sweep.jobs, "parallel runs")->capture_default_str()->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep.out, "output directory")->required();
  sweep_cmd->add_flag("--force", sweep.force, "run even if an assumption check fails");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "summarize a trace and fit the decay of wrong hypotheses");
  report_cmd->add_option("--trace", report.trace, "trace CSV file")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--plots", report.plots, "write gnuplot data files to this directory");
  report_cmd->add_option("--summary", report.summary, "summary JSON (default: next to the trace)");
  report_cmd->add_option("--json", report.json, "write the fit table as JSON");

  try {
    app.parse(argc, argv);
    if (*sweep_cmd) sweep.seeds = parse_seeds(seed_list);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*check_cmd) return cmd_check_graph(check);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*report_cmd) return cmd_report(report);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kError;
  } catch (const AssumptionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
