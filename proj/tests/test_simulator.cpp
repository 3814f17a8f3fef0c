#include <doctest.h>

#include <random>
#include <sstream>

#include "gridsynth/abstraction.hpp"
#include "gridsynth/error.hpp"
#include "gridsynth/simulator.hpp"
#include "support/support.hpp"

using namespace gridsynth;
using testsupport::uniform;

namespace {

std::size_t occurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

ProblemSpec integrator_problem() {
  ProblemSpec s;
  s.system = "integrator";
  s.state_bounds = HyperRect({0, 0}, {4, 4});
  s.periodic = {false, false};
  s.input_bounds = HyperRect({-1, -1}, {1, 1});
  s.eta_x = {0.25, 0.25};
  s.eta_u = {0.5, 0.5};
  s.tau = 0.5;
  s.obstacles = {TwoDiagonalVertices{{1.5, 0}, {2.0, 3.0}}};
  s.targets = {TwoDiagonalVertices{{3, 0.5}, {3.75, 1.25}}};
  s.initial.value = HyperRect({0.5, 0.5}, {1, 1});
  return s;
}

struct Solved {
  ProblemSpec spec;
  UniformGrid grid;
  std::vector<Vec> inputs;
  VectorField field;
  LabeledCells labels;
  SymbolicController ctrl;
};

Solved solve(const ProblemSpec& spec) {
  UniformGrid g = make_state_grid(spec);
  auto inputs = build_input_grid(spec.input_bounds, spec.eta_u);
  VectorField f = make_vector_field(spec.system, spec.input_bounds);
  const auto fts = build_abstraction(g, inputs, f, spec.tau);
  LabeledCells labels = label_cells(g, spec);
  SymbolicController ctrl = solve_sequential(fts, labels);
  return {spec, std::move(g), std::move(inputs), std::move(f), std::move(labels), std::move(ctrl)};
}

}  // namespace

TEST_CASE("closed loop reaches the target around the wall") {
  const Solved s = solve(integrator_problem());
  REQUIRE(initial_cells_winning(s.ctrl, s.labels));
  std::mt19937_64 rng(83);
  for (int k = 0; k < 50; ++k) {
    const Vec x0{uniform(rng, 0.5, 1), uniform(rng, 0.5, 1)};
    ConcreteController cc(s.ctrl, s.grid, s.inputs);
    const auto bound = cc.value_at(x0);
    REQUIRE(bound >= 0);
    const Trajectory t = simulate_closed_loop(s.field, cc, x0, s.spec.tau, 5, 200, s.spec.obstacle_rects());
    REQUIRE(t.termination == Termination::ReachedTarget);
    REQUIRE(t.t_final <= static_cast<double>(bound) * s.spec.tau + 1e-12);
    REQUIRE(t.substeps.size() + 1 == t.samples.size());
    REQUIRE(t.samples.back().input.empty());
    const auto v = check_reach_avoid(t, s.spec);
    REQUIRE(v.satisfied);
    REQUIRE(*v.t_f == doctest::Approx(t.t_final));
  }
}

TEST_CASE("other terminations") {
  const Solved s = solve(integrator_problem());
  ConcreteController cc(s.ctrl, s.grid, s.inputs);
  const Trajectory lim = simulate_closed_loop(s.field, cc, Vec{0.6, 0.6}, s.spec.tau, 5, 1);
  CHECK(lim.termination == Termination::StepLimit);
  CHECK(lim.samples.size() == 2);
  CHECK(lim.t_final == doctest::Approx(0.5));
  CHECK_FALSE(check_reach_avoid(lim, s.spec).satisfied);

  // Inside the wall is never winning.
  ConcreteController cc2(s.ctrl, s.grid, s.inputs);
  const Trajectory lost = simulate_closed_loop(s.field, cc2, Vec{1.75, 1.0}, s.spec.tau, 5, 10);
  CHECK(lost.termination == Termination::LeftWinningSet);
  CHECK(lost.samples.size() == 1);
}

TEST_CASE("check_reach_avoid on hand-built runs") {
  ProblemSpec spec = integrator_problem();
  spec.targets.push_back(TwoDiagonalVertices{{0, 3.5}, {0.5, 4}});
  auto run = [](std::vector<Vec> pts, std::vector<std::vector<Vec>> subs = {}) {
    Trajectory t;
    for (std::size_t i = 0; i < pts.size(); ++i) t.samples.push_back({0.5 * static_cast<double>(i), pts[i], {}});
    if (subs.empty()) subs.assign(pts.size() - 1, {});
    t.substeps = subs;
    t.t_final = t.samples.back().time;
    return t;
  };
  const auto ok = check_reach_avoid(run({{1, 3.5}, {3.2, 3.5}, {3.2, 0.8}, {2.2, 3.2}, {0.2, 3.8}}), spec);
  CHECK(ok.satisfied);
  CHECK(*ok.t_f == 2.0);

  // Second target first does not count.
  const auto order = check_reach_avoid(run({{0.2, 3.8}, {2.2, 3.5}, {3.2, 0.8}}), spec);
  CHECK_FALSE(order.satisfied);

  // A substep inside the wall is a violation even when samples are clear.
  const auto sub = check_reach_avoid(
      run({{1, 1}, {3.2, 0.8}, {2.2, 3.2}, {0.2, 3.8}}, {{{1.75, 1.0}}, {}, {}}), spec);
  CHECK_FALSE(sub.satisfied);
  REQUIRE(sub.first_violation.has_value());
  CHECK(sub.first_violation->second == 0);
}

TEST_CASE("csv output") {
  Trajectory t;
  t.samples = {{0, {1, 2}, {0.5, -0.5}}, {0.5, {1.25, 1.75}, {}}};
  std::ostringstream os;
  write_trajectory_csv(os, t);
  CHECK(os.str() == "time,x1,x2,u1,u2\n0,1,2,0.5,-0.5\n0.5,1.25,1.75,,\n");
}

TEST_CASE("svg elements for fixture one") {
  const ProblemSpec spec = load_spec(testsupport::fixture_case("01_campus_loop"));
  const std::string svg = render_svg(spec);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(occurrences(svg, "class=\"frame\"") == 1);
  CHECK(occurrences(svg, "class=\"obstacle\"") == 2);
  CHECK(occurrences(svg, "class=\"target\"") == 1);
  CHECK(occurrences(svg, "class=\"target-label\"") == 1);
  CHECK(occurrences(svg, "<polygon class=\"initial\"") == 1);
  CHECK(occurrences(svg, "class=\"trajectory\"") == 0);
  CHECK(render_svg(spec) == svg);
}

TEST_CASE("svg with trajectory and winning set") {
  const Solved s = solve(integrator_problem());
  ConcreteController cc(s.ctrl, s.grid, s.inputs);
  const Trajectory t = simulate_closed_loop(s.field, cc, Vec{0.75, 0.75}, s.spec.tau, 5, 200);
  RenderOptions opt;
  opt.trajectory = &t;
  opt.grid = &s.grid;
  opt.winning = &s.ctrl.stages[0];
  const std::string svg = render_svg(s.spec, opt);
  CHECK(occurrences(svg, "class=\"trajectory\"") == 1);
  CHECK(occurrences(svg, "class=\"winning\"") == 1);
  CHECK(render_svg(s.spec, opt) == svg);

  ProblemSpec point = s.spec;
  point.initial.value = Vec{0.75, 0.75};
  CHECK(occurrences(render_svg(point), "<circle class=\"initial\"") == 1);

  ProblemSpec one = point;
  one.state_bounds = HyperRect({0.0}, {4.0});
  CHECK_THROWS_AS(render_svg(one), Error);
}
