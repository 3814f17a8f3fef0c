#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/dynamics.hpp"
#include "gridsynth/spec_format.hpp"
#include "gridsynth/synthesis.hpp"

namespace gridsynth {

enum class Termination { ReachedTarget, LeftWinningSet, StepLimit, ObstacleHit };

const char* to_string(Termination t);

struct TrajectorySample {
  double time = 0;
  Vec state;
  /// Input held from this sample to the next; empty on the last sample.
  Vec input;
};

/// Sampled closed-loop run. `substeps[i]` holds the intermediate states
/// strictly between samples i and i + 1 at integrator resolution.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<std::vector<Vec>> substeps;
  Termination termination = Termination::StepLimit;
  /// Time of the last sample; the reach time when termination is
  /// ReachedTarget.
  double t_final = 0;
};

/// Runs x <- integrate(f, x, concretize(x), tau) until the final stage goal
/// is entered, the state leaves the winning set, a substep state touches
/// one of `obstacles`, or `max_steps` inputs have been applied.
Trajectory simulate_closed_loop(const VectorField& f, ConcreteController& ctrl, std::span<const double> x0,
                                double tau, int substeps, std::size_t max_steps,
                                const std::vector<HyperRect>& obstacles = {});

struct ReachAvoidVerdict {
  bool satisfied = false;
  std::optional<double> t_f;
  /// (time, obstacle index) of the first contact before t_f.
  std::optional<std::pair<double, std::size_t>> first_violation;
};

/// Reach-avoid check against the problem's original (non-inflated) obstacles:
/// targets must be entered in list order at sample times, and no sample or
/// intermediate substep state before the final entry may lie in a closed
/// obstacle box.
ReachAvoidVerdict check_reach_avoid(const Trajectory& traj, const ProblemSpec& spec);

struct RenderOptions {
  const Trajectory* trajectory = nullptr;
  /// Shades the 2-D projection of `winning`'s winning set on `grid`.
  const UniformGrid* grid = nullptr;
  const StageController* winning = nullptr;
};

/// Deterministic SVG 1.1 of the position plane: frame, winning shading,
/// filled obstacles, outlined numbered targets, initial marker and the
/// trajectory polyline. Coordinates carry six decimals. Throws
/// Error(UnsupportedDimension) for state dimension < 2.
std::string render_svg(const ProblemSpec& spec, const RenderOptions& options = {});

/// "time,x1..xn,u1..um" with one row per sample (inputs empty on the last).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace gridsynth
