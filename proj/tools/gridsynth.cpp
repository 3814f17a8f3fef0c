#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "gridsynth/abstraction.hpp"
#include "gridsynth/agents.hpp"
#include "gridsynth/bench.hpp"
#include "gridsynth/error.hpp"
#include "gridsynth/simulator.hpp"
#include "gridsynth/synthesis.hpp"

using namespace gridsynth;

namespace {

enum Exit { kOk = 0, kSpecFailure = 1, kUsage = 2, kService = 3 };

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IoError: return kUsage;
    case ErrorCode::ClientError: return kService;
    default: return kSpecFailure;
  }
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Usage("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Usage("cannot write " + path);
  out << text;
}

ProblemSpec load_spec_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Usage("no such file: " + path);
  return load_spec(path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --------------------------------------------------------------- LLM flags

struct ClientFlags {
  std::string mock;
  bool remote = false;
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-4o";
  int retries = 2;
  int timeout = 120;
  std::string log_raw;
  std::string prompts;
  std::int64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mock", mock, "Mock script replayed instead of a remote model")->check(CLI::ExistingFile);
    cmd->add_flag("--remote", remote, "Use the remote chat-completion endpoint (key in GRIDSYNTH_LLM_KEY)");
    cmd->add_option("--base-url", base_url, "Endpoint scheme://host[:port]");
    cmd->add_option("--model", model, "Model name sent to the endpoint");
    cmd->add_option("--retries", retries, "Retries on transport failure")->check(CLI::NonNegativeNumber);
    cmd->add_option("--timeout", timeout, "Request timeout in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--log-raw", log_raw, "Append raw request/response bodies to this file (JSON lines)");
    cmd->add_option("--prompts", prompts, "Prompt template directory")->check(CLI::ExistingDirectory);
    cmd->add_option("--seed", seed, "Seed forwarded to the remote model");
  }

  std::unique_ptr<LlmClient> make() const {
    if (!mock.empty() && remote) throw Usage("--mock and --remote are exclusive");
    if (!mock.empty()) return std::make_unique<MockClient>(MockClient::load(mock));
    if (!remote) throw Usage("no client configured: pass --mock SCRIPT or --remote");
    RemoteConfig cfg = RemoteClient::config_from_env();
    cfg.base_url = base_url;
    cfg.model = model;
    cfg.max_retries = retries;
    cfg.timeout_seconds = timeout;
    cfg.seed = seed;
    if (!log_raw.empty()) {
      auto out = std::make_shared<std::ofstream>(log_raw, std::ios::app);
      if (!*out) throw Usage("cannot write " + log_raw);
      cfg.raw_log = [out](const std::string& req, const std::string& res) {
        nlohmann::ordered_json j;
        j["request"] = req;
        j["response"] = res;
        *out << j.dump() << '\n';
        out->flush();
      };
    }
    return std::make_unique<RemoteClient>(std::move(cfg));
  }

  PromptSet prompt_set() const { return prompts.empty() ? PromptSet::defaults() : PromptSet::load(prompts); }
};

// ------------------------------------------------------------------- synth

struct SynthFlags {
  std::string spec;
  std::string out;
  std::string fts_cache;
  int jobs = 1;
  std::int64_t seed = 0;
};

int cmd_synth(const SynthFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec spec = load_spec_file(f.spec);
  const UniformGrid grid = make_state_grid(spec);
  const std::vector<Vec> inputs = build_input_grid(spec.input_bounds, spec.eta_u);
  const VectorField field = make_vector_field(spec.system, spec.input_bounds);
  const LabeledCells labels = label_cells(grid, spec);

  const FtsCacheHeader header{spec.state_dim(), spec.input_dim(), grid.eta(), spec.tau, abstraction_fingerprint(spec)};
  FiniteTransitionSystem fts;
  bool cached = false;
  if (!f.fts_cache.empty() && std::filesystem::exists(f.fts_cache)) {
    std::ifstream in(f.fts_cache, std::ios::binary);
    try {
      fts = read_fts(in, &header);
      cached = true;
    } catch (const Error& e) {
      std::cerr << "ignoring FTS cache: " << e.what() << "\n";
    }
  }
  if (!cached) {
    AbstractionOptions opt;
    opt.substeps = spec.substeps;
    opt.jobs = f.jobs;
    fts = build_abstraction(grid, inputs, field, spec.tau, opt);
    if (!f.fts_cache.empty()) {
      std::ofstream out(f.fts_cache, std::ios::binary);
      if (!out) throw Usage("cannot write " + f.fts_cache);
      write_fts(out, fts, header);
    }
  }
  const double t_abs = seconds_since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const SymbolicController ctrl = solve_sequential(fts, labels);
  const double t_solve = seconds_since(t1);

  std::ostringstream table;
  write_controller(table, ctrl, grid, inputs);
  write_output(f.out, table.str());

  std::fprintf(stderr, "cells %llu  inputs %zu  transitions %llu%s\n",
               static_cast<unsigned long long>(fts.num_states), inputs.size(),
               static_cast<unsigned long long>(fts.num_transitions()), cached ? "  (cached)" : "");
  for (std::size_t i = 0; i < ctrl.stages.size(); ++i)
    std::fprintf(stderr, "stage %zu winning %llu / %llu (%.1f%%)\n", i,
                 static_cast<unsigned long long>(ctrl.stages[i].winning_count()),
                 static_cast<unsigned long long>(fts.num_states),
                 100.0 * static_cast<double>(ctrl.stages[i].winning_count()) / static_cast<double>(fts.num_states));
  std::fprintf(stderr, "abstraction %.2fs  solve %.2fs\n", t_abs, t_solve);
  for (const auto& w : ctrl.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  if (!initial_cells_winning(ctrl, labels)) {
    std::fprintf(stderr, "error: initial set is not entirely winning\n");
    return kSpecFailure;
  }
  return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimFlags {
  std::string spec;
  std::string controller;
  std::vector<double> x0;
  std::size_t steps = 1000;
  std::string csv;
  std::string svg;
};

int cmd_simulate(const SimFlags& f) {
  const ProblemSpec spec = load_spec_file(f.spec);
  std::ifstream in(f.controller);
  if (!in) throw Usage("cannot read " + f.controller);
  const LoadedController loaded = read_controller(in);
  const UniformGrid grid(loaded.bounds, loaded.eta, loaded.periodic);
  if (f.x0.size() != grid.dim())
    throw Usage("--x0 needs " + std::to_string(grid.dim()) + " components");
  if (!grid.bounds().contains(f.x0)) throw Usage("--x0 lies outside the state bounds");
  const VectorField field = make_vector_field(spec.system, spec.input_bounds);
  ConcreteController cc(loaded.controller, grid, loaded.inputs);
  const Trajectory traj =
      simulate_closed_loop(field, cc, f.x0, spec.tau, spec.substeps, f.steps, spec.obstacle_rects());
  const ReachAvoidVerdict verdict = check_reach_avoid(traj, spec);

  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  if (f.csv.empty()) std::cout << csv.str();
  else write_output(f.csv, csv.str());
  if (!f.svg.empty()) {
    RenderOptions opt;
    opt.trajectory = &traj;
    opt.grid = &grid;
    if (!loaded.controller.stages.empty()) opt.winning = &loaded.controller.stages.front();
    write_output(f.svg, render_svg(spec, opt));
  }

  std::fprintf(stderr, "termination %s  t_final %.3f  steps %zu  reach-avoid %s\n", to_string(traj.termination),
               traj.t_final, traj.samples.size() - 1, verdict.satisfied ? "satisfied" : "violated");
  return traj.termination == Termination::ReachedTarget && verdict.satisfied ? kOk : kSpecFailure;
}

// ----------------------------------------------------------------- nl2spec

struct Nl2SpecFlags {
  std::string nl = "-";
  std::string out;
  std::string transcript;
  int k_max = 2;
  ClientFlags client;
};

int cmd_nl2spec(const Nl2SpecFlags& f) {
  const std::string nl = read_input(f.nl);
  auto client = f.client.make();
  const PromptSet prompts = f.client.prompt_set();
  const AgentTranscript t = pipeline_run(*client, nl, f.k_max, prompts);
  if (!f.transcript.empty()) write_output(f.transcript, t.to_json());
  std::fprintf(stderr, "outcome %s after %zu iteration(s)\n", to_string(t.outcome), t.iterations.size());
  switch (t.outcome) {
    case PipelineOutcome::AcceptedSpec: {
      const std::string doc = serialize_spec(*t.spec);
      if (f.out.empty()) std::cout << doc;
      else write_output(f.out, doc);
      return kOk;
    }
    case PipelineOutcome::BlockedWithFeedback:
    case PipelineOutcome::ParseFailure:
      std::cerr << t.feedback << (t.feedback.empty() || t.feedback.back() == '\n' ? "" : "\n");
      return kSpecFailure;
    case PipelineOutcome::ClientError:
      std::cerr << "client error: " << t.client_error << "\n";
      return kService;
  }
  return kSpecFailure;
}

// -------------------------------------------------------------------- eval

struct EvalFlags {
  std::string cases;
  std::string strategy = "full";
  std::string out;
  int k_max = 2;
  ClientFlags client;
};

int cmd_eval(const EvalFlags& f) {
  const auto strategy = parse_strategy(f.strategy);
  if (!strategy) throw Usage("unknown strategy " + f.strategy);
  const auto cases = load_cases(f.cases);
  auto client = f.client.make();
  const PromptSet prompts = f.client.prompt_set();
  const BenchReport report = run_benchmark(cases, *strategy, *client, prompts, f.k_max);
  report.write(f.out);
  std::cerr << report.summary();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridsynth: reach-avoid controller synthesis on uniform grid abstractions"};
  app.require_subcommand(1);

  SynthFlags synth;
  auto* s = app.add_subcommand("synth", "Abstract, solve and write a controller table");
  s->add_option("spec", synth.spec, "Problem document (JSON)")->required();
  s->add_option("--out", synth.out, "Controller table output")->required();
  s->add_option("--fts-cache", synth.fts_cache, "Reuse or write the transition system here");
  s->add_option("--jobs", synth.jobs, "Worker threads for the abstraction")->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "Reserved; synthesis is deterministic");

  SimFlags sim;
  auto* m = app.add_subcommand("simulate", "Run the closed loop from one initial state");
  m->add_option("spec", sim.spec, "Problem document (JSON)")->required();
  m->add_option("controller", sim.controller, "Controller table from synth")->required();
  m->add_option("--x0", sim.x0, "Initial state, comma separated")->required()->delimiter(',');
  m->add_option("--steps", sim.steps, "Maximum number of control steps");
  m->add_option("--csv", sim.csv, "Trajectory CSV (default stdout)");
  m->add_option("--svg", sim.svg, "SVG rendering of the run");

  Nl2SpecFlags nl;
  auto* n = app.add_subcommand("nl2spec", "Translate a natural-language task with the agent pipeline");
  n->add_option("--nl", nl.nl, "Description file, '-' for stdin");
  n->add_option("--out", nl.out, "Write the accepted document here instead of stdout");
  n->add_option("--transcript", nl.transcript, "Write the agent transcript (JSON)");
  n->add_option("--k-max", nl.k_max, "Maximum Code Agent attempts")->check(CLI::PositiveNumber);
  nl.client.attach(n);

  EvalFlags ev;
  auto* e = app.add_subcommand("eval", "Run a strategy over the benchmark cases");
  e->add_option("--cases", ev.cases, "Case directory")->required();
  e->add_option("--strategy", ev.strategy, "direct | code | full");
  e->add_option("--out", ev.out, "Report directory")->required();
  e->add_option("--k-max", ev.k_max, "Maximum Code Agent attempts")->check(CLI::PositiveNumber);
  ev.client.attach(e);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*m) return cmd_simulate(sim);
    if (*n) return cmd_nl2spec(nl);
    if (*e) return cmd_eval(ev);
  } catch (const Usage& u) {
    std::cerr << "error: " << u.what() << "\n";
    return kUsage;
  } catch (const Error& err) {
    std::cerr << "error [" << to_string(err.code()) << "]: " << err.what() << "\n";
    return exit_for(err);
  }
  return kUsage;
}
