// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "gridsynth/abstraction.hpp"
#include "gridsynth/agents.hpp"
#include "gridsynth/bench.hpp"
#include "gridsynth/dynamics.hpp"
#include "gridsynth/simulator.hpp"
#include "gridsynth/synthesis.hpp"
#include "support/support.hpp"

using namespace gridsynth;
using testsupport::uniform;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Fixture {
  ProblemSpec spec;
  UniformGrid grid;
  std::vector<Vec> inputs;
  VectorField field;
  FiniteTransitionSystem fts;
  LabeledCells labels;
  SymbolicController ctrl;
};

Fixture build_fixture(unsigned jobs) {
  ProblemSpec spec = load_spec(testsupport::fixture_case("01_campus_loop"));
  UniformGrid grid = make_state_grid(spec);
  auto inputs = build_input_grid(spec.input_bounds, spec.eta_u);
  VectorField f = make_vector_field(spec.system, spec.input_bounds);
  AbstractionOptions opt;
  opt.jobs = jobs;
  opt.substeps = spec.substeps;
  auto fts = build_abstraction(grid, inputs, f, spec.tau, opt);
  LabeledCells labels = label_cells(grid, spec);
  SymbolicController ctrl = solve_sequential(fts, labels);
  return {std::move(spec), std::move(grid), std::move(inputs), std::move(f),
          std::move(fts),  std::move(labels), std::move(ctrl)};
}

std::string controller_bytes(const Fixture& fx) {
  std::ostringstream os;
  write_controller(os, fx.ctrl, fx.grid, fx.inputs);
  return os.str();
}

Outcome closed_loop(const Fixture& fx) {
  if (fx.inputs.size() != 49 || fx.grid.num_cells() != 12800)
    return {false, "unexpected grid: " + std::to_string(fx.grid.num_cells()) + " cells"};
  if (!initial_cells_winning(fx.ctrl, fx.labels)) return {false, "initial set not winning"};
  const HyperRect init = fx.spec.initial.as_rect(fx.spec.state_bounds);
  std::mt19937_64 rng(1001);
  int ok = 0;
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    Vec x0(3);
    for (int i = 0; i < 3; ++i) x0[i] = uniform(rng, init.lower[i], init.upper[i]);
    ConcreteController cc(fx.ctrl, fx.grid, fx.inputs);
    const auto bound = cc.value_at(x0);
    const Trajectory t =
        simulate_closed_loop(fx.field, cc, x0, fx.spec.tau, fx.spec.substeps, 1000, fx.spec.obstacle_rects());
    const auto v = check_reach_avoid(t, fx.spec);
    const bool in_time = bound >= 0 && t.t_final <= static_cast<double>(bound) * fx.spec.tau + 1e-9;
    if (t.termination == Termination::ReachedTarget && v.satisfied && in_time) ++ok;
    worst = std::max(worst, t.t_final);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d/100 runs reach the target without contact (max t_f %.1f s)", ok, worst);
  return {ok == 100, buf};
}

Outcome game_equivalence() {
  std::mt19937_64 rng(2002);
  double solver_time = 0;
  int ok = 0;
  for (int k = 0; k < 100; ++k) {
    const std::uint64_t n = 200 + rng() % 2000, m = 1 + rng() % 8;
    const auto fts = testsupport::random_fts(rng, n, m, 0.2 + 0.1 * static_cast<double>(rng() % 8));
    std::vector<CellId> goal, obst;
    for (CellId c = 0; c < n; ++c) {
      const auto r = rng() % 50;
      if (r == 0) goal.push_back(c);
      else if (r < 4) obst.push_back(c);
    }
    if (goal.empty()) goal.push_back(static_cast<CellId>(n - 1));
    obst.erase(std::remove(obst.begin(), obst.end(), goal.front()), obst.end());
    const auto t0 = Clock::now();
    const StageController s = solve_stage(fts, goal, obst);
    solver_time += since(t0);
    const auto ref = testsupport::brute_force_game(fts, goal, obst);
    bool same = s.winning == ref.winning;
    for (CellId c = 0; same && c < n; ++c) same = !s.winning[c] || s.value[c] == ref.value[c];
    ok += same;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d/100 random systems match the brute-force game (solver %.3f s)", ok,
                solver_time);
  return {ok == 100 && solver_time < 10.0, buf};
}

Outcome abstraction_soundness(const Fixture& fx) {
  std::mt19937_64 rng(3003);
  int pairs = 0;
  long misses = 0;
  while (pairs < 100) {
    const std::uint64_t c = rng() % fx.grid.num_cells();
    const std::uint64_t u = rng() % fx.inputs.size();
    if (fx.fts.is_blocked(c, u)) continue;
    ++pairs;
    const auto post = fx.fts.post(c, u);
    const HyperRect box = fx.grid.cell_box(c);
    for (int s = 0; s < 1000; ++s) {
      Vec x(3);
      for (int i = 0; i < 3; ++i) x[i] = uniform(rng, box.lower[i], box.upper[i]);
      const Vec y = integrate(fx.field, x, fx.inputs[u], fx.spec.tau, fx.spec.substeps, &fx.grid);
      const auto cell = static_cast<CellId>(fx.grid.flat_cell_of(y));
      if (!std::binary_search(post.begin(), post.end(), cell)) ++misses;
    }
  }
  return {misses == 0, std::to_string(pairs) + " pairs x 1000 samples, " + std::to_string(misses) +
                           " successors outside post"};
}

Outcome geometry_properties() {
  const double pi = std::numbers::pi;
  const UniformGrid g(HyperRect({-2, 0, -pi}, {2, 3, pi}), {0.4, 0.25, 0.3}, {false, false, true});
  std::mt19937_64 rng(4004);
  std::array<int, 4> fails{};
  for (int k = 0; k < 10000; ++k) {
    const Vec x{uniform(rng, -2, 2), uniform(rng, 0, 3), uniform(rng, -pi, pi)};
    const CellIndex c = g.cell_of(x);
    const Vec center = g.center_of(c);
    for (std::size_t i = 0; i < 3; ++i)
      if (std::abs(x[i] - center[i]) > g.eta()[i] / 2 + 1e-12) {
        ++fails[0];
        break;
      }
  }
  for (int k = 0; k < 10000; ++k) {
    const Vec x{uniform(rng, -2, 2), uniform(rng, 0, 3), uniform(rng, -pi, pi)};
    if (g.cell_of(x).multi != testsupport::brute_cell_of(g, x)) ++fails[1];
  }
  for (int k = 0; k < 10000; ++k) {
    // Interior angles stay clear of cell faces after the shift.
    const auto j = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(g.cell_count(2)));
    const double th = -pi + (static_cast<double>(j) + uniform(rng, 0.01, 0.99)) * g.eta()[2];
    const Vec x{uniform(rng, -2, 2), uniform(rng, 0, 3), th};
    const int shift = static_cast<int>(rng() % 7) - 3;
    const Vec y{x[0], x[1], th + 2 * pi * shift};
    if (g.cell_of(x).multi != g.cell_of(y).multi) ++fails[2];
  }
  for (int k = 0; k < 10000; ++k) {
    const double x0 = uniform(rng, -10, 10), y0 = uniform(rng, -10, 10);
    const double x1 = x0 + uniform(rng, 0, 5), y1 = y0 + uniform(rng, 0, 5);
    const HyperRect a = rect_from_encoding(TwoDiagonalVertices{{x1, y0}, {x0, y1}});
    const HyperRect b = rect_from_encoding(FourVertices{{{x1, y1}, {x0, y0}, {x1, y0}, {x0, y1}}});
    const HyperRect c = rect_from_encoding(CenterAndSides{{0.5 * (x0 + x1), 0.5 * (y0 + y1)}, {x1 - x0, y1 - y0}});
    bool ok = a == b;
    for (std::size_t i = 0; i < 2; ++i)
      ok = ok && std::abs(c.lower[i] - a.lower[i]) <= 1e-12 * std::max(1.0, std::abs(a.lower[i])) &&
           std::abs(c.upper[i] - a.upper[i]) <= 1e-12 * std::max(1.0, std::abs(a.upper[i]));
    if (!ok) ++fails[3];
  }
  const int total = fails[0] + fails[1] + fails[2] + fails[3];
  return {total == 0, "4 properties x 10000 draws, failures " + std::to_string(fails[0]) + "/" +
                          std::to_string(fails[1]) + "/" + std::to_string(fails[2]) + "/" + std::to_string(fails[3])};
}

Outcome pipeline_scenarios() {
  const auto cases = load_cases(testsupport::source_path("fixtures/cases"));
  const BenchCase& c = cases.front();
  const PromptSet& p = PromptSet::defaults();
  const std::string& nl = c.paraphrases[0];
  using F = testsupport::FullScenario;
  auto run = [&](F s) {
    MockClient m(testsupport::full_script(p, nl, c.ground_truth, s));
    return pipeline_run(m, nl, 2, p);
  };
  const auto a = run(F::AcceptAt1);
  const bool s1 = a.outcome == PipelineOutcome::AcceptedSpec && a.iterations.size() == 1 && a.spec &&
                  semantic_diff(c.ground_truth, *a.spec).empty();
  const auto b = run(F::AcceptAt2);
  const bool s2 = b.outcome == PipelineOutcome::AcceptedSpec && b.iterations.size() == 2 && b.spec &&
                  semantic_diff(c.ground_truth, *b.spec).empty() &&
                  b.iterations[1].code_prompt == build_code_prompt(p, nl, b.iterations[0].verdict->feedback);
  const auto d = run(F::BlockedWrong);
  const bool s3 = d.outcome == PipelineOutcome::BlockedWithFeedback && d.iterations.size() == 2 && !d.spec &&
                  d.feedback == d.iterations[1].verdict->feedback && !d.feedback.empty();
  return {s1 && s2 && s3, std::string("accept@1 ") + (s1 ? "ok" : "FAIL") + ", accept@2 with verbatim feedback " +
                              (s2 ? "ok" : "FAIL") + ", blocked after 2 " + (s3 ? "ok" : "FAIL")};
}

template <typename Plan>
BenchReport run_plan(const std::vector<BenchCase>& cases, Strategy s, const Plan& plan) {
  MockClient m = MockClient::parse(testsupport::script_for(cases, PromptSet::defaults(), plan));
  return run_benchmark(cases, s, m, PromptSet::defaults(), 2);
}

Outcome reference_distribution() {
  const auto cases = load_cases(testsupport::source_path("fixtures/cases"));
  const auto d = run_plan(cases, Strategy::DirectLLM, testsupport::reference_direct_plan(cases.size()));
  const auto c = run_plan(cases, Strategy::CodeAgentOnly, testsupport::reference_code_plan(cases.size()));
  const auto f = run_plan(cases, Strategy::FullPipeline, testsupport::reference_full_plan(cases.size()));
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "correct %d/%d/%d of 60; robust/solved %d/%d, %d/%d, %d/%d over %zu cases", d.correct, c.correct,
                f.correct, d.robust, d.solved, c.robust, c.solved, f.robust, f.solved, cases.size());
  const bool ok = cases.size() == 20 && d.correct == 7 && c.correct == 34 && f.correct == 39 && d.robust == 0 &&
                  d.solved == 4 && c.robust == 9 && c.solved == 14 && f.robust == 10 && f.solved == 16;
  return {ok, buf};
}

Outcome bicycle_accuracy() {
  std::mt19937_64 rng(7007);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const double x3 = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const double u1 = uniform(rng, -1, 1), u2 = uniform(rng, -1.4, 1.4);
    const Vec got = bicycle_f(Vec{uniform(rng, 0, 4), uniform(rng, 0, 4), x3}, Vec{u1, u2});
    const long double ta = std::tan(static_cast<long double>(u2)) / 2.0L;
    const long double lx = x3, lu = u1;
    const std::array<long double, 3> want{lu * (std::cos(lx) - ta * std::sin(lx)),
                                          lu * (std::sin(lx) + ta * std::cos(lx)),
                                          lu * std::tan(static_cast<long double>(u2))};
    for (int i = 0; i < 3; ++i) {
      const long double e = std::fabs(got[i] - want[i]) / std::max(1.0L, std::fabs(want[i]));
      worst = std::max(worst, static_cast<double>(e));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "1000 draws, worst relative error %.2e", worst);
  return {worst <= 1e-12, buf};
}

Outcome determinism(const Fixture& fx) {
  const Fixture again = build_fixture(2);
  const bool synth = controller_bytes(fx) == controller_bytes(again) && fx.fts == again.fts;

  const auto cases = load_cases(testsupport::source_path("fixtures/cases"));
  const auto plan = testsupport::reference_full_plan(cases.size());
  const auto r1 = run_plan(cases, Strategy::FullPipeline, plan);
  const auto r2 = run_plan(cases, Strategy::FullPipeline, plan);
  const bool eval = r1.csv() == r2.csv() && r1.summary() == r2.summary();

  ConcreteController c1(fx.ctrl, fx.grid, fx.inputs), c2(again.ctrl, again.grid, again.inputs);
  const Vec x0{0.8, 2.6, 0.0};
  const Trajectory t1 = simulate_closed_loop(fx.field, c1, x0, fx.spec.tau, fx.spec.substeps, 1000);
  const Trajectory t2 = simulate_closed_loop(again.field, c2, x0, again.spec.tau, again.spec.substeps, 1000);
  RenderOptions o1{&t1, &fx.grid, &fx.ctrl.stages.front()}, o2{&t2, &again.grid, &again.ctrl.stages.front()};
  const bool svg = render_svg(fx.spec, o1) == render_svg(again.spec, o2);
  return {synth && eval && svg, std::string("controller bytes (jobs 1 vs 2) ") + (synth ? "equal" : "DIFFER") +
                                    ", eval report " + (eval ? "equal" : "DIFFERS") + ", svg " +
                                    (svg ? "equal" : "DIFFERS")};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const Fixture fx = build_fixture(1);
  std::fprintf(stderr, "fixture 1: %llu transitions, %llu winning cells, built in %.1f s\n",
               static_cast<unsigned long long>(fx.fts.num_transitions()),
               static_cast<unsigned long long>(fx.ctrl.stages.front().winning_count()), since(t0));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-loop reach-avoid on fixture 1", [&] { return closed_loop(fx); }},
      {"solver equals brute-force game", game_equivalence},
      {"abstraction soundness by sampling", [&] { return abstraction_soundness(fx); }},
      {"grid and encoding properties", geometry_properties},
      {"agent pipeline scenarios", pipeline_scenarios},
      {"benchmark reference distribution", reference_distribution},
      {"bicycle vector field accuracy", bicycle_accuracy},
      {"deterministic synth, eval and svg", [&] { return determinism(fx); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
