#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gridsynth/abstraction.hpp"
#include "gridsynth/agents.hpp"
#include "gridsynth/bench.hpp"
#include "gridsynth/geometry.hpp"
#include "gridsynth/spec_format.hpp"

namespace testsupport {

using gridsynth::CellId;
using gridsynth::Vec;

std::string source_path(const std::string& rel);
std::string fixture_case(const std::string& id);
std::string read_file(const std::string& path);

double uniform(std::mt19937_64& rng, double lo, double hi);

// Brute-force cell lookup: scans every cell for the half-open box holding x.
std::vector<std::int64_t> brute_cell_of(const gridsynth::UniformGrid& g, const Vec& x);

// Cells whose closed box meets r, by testing every cell.
std::vector<CellId> brute_overlapping(const gridsynth::UniformGrid& g, const gridsynth::HyperRect& r);

struct GameResult {
  std::vector<std::uint8_t> winning;
  std::vector<std::uint32_t> value;
};

// Repeated full sweeps of the predecessor operator until nothing changes.
GameResult brute_force_game(const gridsynth::FiniteTransitionSystem& fts, const std::vector<CellId>& goal,
                            const std::vector<CellId>& obstacles);

gridsynth::FiniteTransitionSystem random_fts(std::mt19937_64& rng, std::uint64_t n, std::uint64_t m, double density);

// 4-connected shortest path on a fine 2-D lattice that keeps `margin` away
// from every obstacle, visiting the targets in order. Waypoints start at
// the initial point (or initial box center).
std::vector<Vec> plan_waypoints(const gridsynth::ProblemSpec& spec, double h = 0.05, double margin = 0.04);

// A semantically wrong variant: drops the first obstacle, or shifts the
// first target when there are none.
gridsynth::ProblemSpec corrupt(const gridsynth::ProblemSpec& spec);

std::string fenced(const std::string& doc);

enum class FullScenario { AcceptAt1, AcceptAt2, BlockedWrong, AcceptedWrong, FalseBlock, GarbageTwice };
enum class CodeScenario { Correct, Wrong, Garbage };
enum class DirectScenario { Correct, Wrong };

// Keyed scripts: one response per prompt the run will send, so cases can
// be evaluated in any order.
std::vector<gridsynth::MockResponse> full_script(const gridsynth::PromptSet& prompts, const std::string& nl,
                                                 const gridsynth::ProblemSpec& truth, FullScenario s);
std::vector<gridsynth::MockResponse> code_script(const gridsynth::PromptSet& prompts, const std::string& nl,
                                                 const gridsynth::ProblemSpec& truth, CodeScenario s);
std::vector<gridsynth::MockResponse> direct_script(const gridsynth::PromptSet& prompts, const std::string& nl,
                                                   const gridsynth::ProblemSpec& truth, DirectScenario s);

// Per (case, paraphrase) scenario tables reproducing the three bar charts:
// 7 / 34 / 39 correct of 60 and 0/4, 9/14, 10/16 robust/solved.
std::vector<std::vector<DirectScenario>> reference_direct_plan(std::size_t num_cases);
std::vector<std::vector<CodeScenario>> reference_code_plan(std::size_t num_cases);
std::vector<std::vector<FullScenario>> reference_full_plan(std::size_t num_cases);

std::string script_for(const std::vector<gridsynth::BenchCase>& cases, const gridsynth::PromptSet& prompts,
                       const std::vector<std::vector<DirectScenario>>& plan);
std::string script_for(const std::vector<gridsynth::BenchCase>& cases, const gridsynth::PromptSet& prompts,
                       const std::vector<std::vector<CodeScenario>>& plan);
std::string script_for(const std::vector<gridsynth::BenchCase>& cases, const gridsynth::PromptSet& prompts,
                       const std::vector<std::vector<FullScenario>>& plan);

bool scenario_correct(DirectScenario s);
bool scenario_correct(CodeScenario s);
bool scenario_correct(FullScenario s);

}  // namespace testsupport
