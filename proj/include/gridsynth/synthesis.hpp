#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/abstraction.hpp"
#include "gridsynth/geometry.hpp"

namespace gridsynth {

/// Reach-avoid solution for one target stage.
struct StageController {
  static constexpr std::int32_t kNoInput = -1;

  std::vector<std::uint8_t> winning;
  /// Input id per state; kNoInput for goal and losing states.
  std::vector<std::int32_t> choice;
  /// Worst-case steps to the goal; 0 on goal states, undefined if losing.
  std::vector<std::uint32_t> value;
  /// Goal cells this stage was solved for, sorted.
  std::vector<CellId> goal;

  bool is_goal(CellId s) const;
  std::uint64_t winning_count() const;

  friend bool operator==(const StageController&, const StageController&) = default;
};

/// Deterministic symbolic controller: one certified input per winning
/// state and stage. Stage i hands over to stage i + 1 on entering its goal.
struct SymbolicController {
  std::uint64_t num_states = 0;
  std::uint64_t num_inputs = 0;
  std::vector<StageController> stages;
  std::vector<std::string> warnings;

  friend bool operator==(const SymbolicController&, const SymbolicController&) = default;
};

/// Worst-case reach-avoid game on `fts` for goal `labels.target_cells[stage]`.
///
/// Backward fixed point W0 = goal, W(k+1) = W(k) + { s not in O or goal :
/// some input u has a non-empty post(s, u) inside W(k) }, computed in
/// O(|delta|) with per-pair outstanding-successor counters. Pairs whose
/// transit cells touch an obstacle never certify. `value` is the layer k at
/// which a state enters; `choice` is the smallest certifying input id at
/// that layer. Adds an EmptyWinningSet warning when no initial cell wins.
SymbolicController solve_reach_avoid(const FiniteTransitionSystem& fts, const LabeledCells& labels,
                                     std::size_t stage);

/// Single-stage solve against an explicit goal and obstacle set.
StageController solve_stage(const FiniteTransitionSystem& fts, std::span<const CellId> goal,
                            std::span<const CellId> obstacles);

/// Sequential targets, solved last to first. Stage i's goal is shrunk to
/// target i intersected with stage i + 1's winning set so every runtime
/// hand-over lands in a winning state of the next stage.
SymbolicController solve_sequential(const FiniteTransitionSystem& fts, const LabeledCells& labels);

/// True if every initial cell is winning for stage 0.
bool initial_cells_winning(const SymbolicController& ctrl, const LabeledCells& labels);

/// Checks the fixed-point certificate of every stage. Returns an empty
/// string when it holds, otherwise a description of the first violation.
std::string verify_controller(const FiniteTransitionSystem& fts, const LabeledCells& labels,
                              const SymbolicController& ctrl);

/// Feedback concretization of a symbolic controller. Holds the current
/// stage; one instance per closed-loop execution.
class ConcreteController {
 public:
  ConcreteController(const SymbolicController& ctrl, const UniformGrid& grid, std::vector<Vec> inputs);

  std::size_t stage() const { return stage_; }
  std::size_t num_stages() const { return ctrl_->stages.size(); }
  bool finished() const { return stage_ >= ctrl_->stages.size(); }
  void reset() { stage_ = 0; }

  const UniformGrid& grid() const { return *grid_; }
  const SymbolicController& symbolic() const { return *ctrl_; }
  const std::vector<Vec>& inputs() const { return inputs_; }

  /// Advances through every stage whose goal contains the cell of x.
  /// Returns finished().
  bool observe(std::span<const double> x);

  /// Input for x at the current stage (after observe). Throws
  /// Error(OutsideWinningSet) if the cell of x is not winning, and
  /// std::logic_error once every stage is finished.
  Vec concretize(std::span<const double> x);

  /// Value of the cell of x at the current stage, or -1 if not winning.
  std::int64_t value_at(std::span<const double> x) const;

 private:
  const SymbolicController* ctrl_;
  const UniformGrid* grid_;
  std::vector<Vec> inputs_;
  std::size_t stage_ = 0;
};

/// Text table, one line per winning cell and stage:
/// "<flat_id> <stage> <value> <input components | '-' per component on goal cells>",
/// preceded by a header with grid and input parameters.
void write_controller(std::ostream& out, const SymbolicController& ctrl, const UniformGrid& grid,
                      const std::vector<Vec>& inputs);

struct LoadedController {
  SymbolicController controller;
  HyperRect bounds;
  Vec eta;
  std::vector<bool> periodic;
  std::vector<Vec> inputs;
};

/// Throws Error(IoError) on malformed tables.
LoadedController read_controller(std::istream& in);

}  // namespace gridsynth
