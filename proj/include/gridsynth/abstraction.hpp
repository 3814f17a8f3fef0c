#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/dynamics.hpp"
#include "gridsynth/geometry.hpp"
#include "gridsynth/spec_format.hpp"

namespace gridsynth {

/// Finite transition system over grid cells and quantized inputs.
///
/// Storage is CSR over (state, input) pairs, pair id = state * num_inputs +
/// input. `post(s, u)` is the sorted, duplicate-free successor list at the
/// end of the sampling period. `transit(s, u)` lists the cells the
/// over-approximated flow may occupy at the intermediate integrator
/// substeps; the solver uses it to keep substep samples off obstacles. A
/// blocked pair has no successors.
struct FiniteTransitionSystem {
  std::uint64_t num_states = 0;
  std::uint64_t num_inputs = 0;
  std::vector<std::uint64_t> offsets{0};
  std::vector<CellId> successors;
  std::vector<std::uint8_t> blocked;
  std::vector<std::uint64_t> transit_offsets{0};
  std::vector<CellId> transit_cells;

  std::uint64_t nonfinite_pairs = 0;

  std::uint64_t num_pairs() const { return num_states * num_inputs; }
  std::uint64_t pair_id(std::uint64_t s, std::uint64_t u) const { return s * num_inputs + u; }

  std::span<const CellId> post(std::uint64_t s, std::uint64_t u) const;
  std::span<const CellId> transit(std::uint64_t s, std::uint64_t u) const;
  bool is_blocked(std::uint64_t s, std::uint64_t u) const { return blocked[pair_id(s, u)] != 0; }
  std::uint64_t num_transitions() const { return successors.size(); }

  /// Builds a system from explicit successor lists indexed [state][input].
  /// Lists are sorted and deduplicated; an empty list marks the pair blocked.
  static FiniteTransitionSystem from_lists(std::uint64_t num_states, std::uint64_t num_inputs,
                                           const std::vector<std::vector<std::vector<CellId>>>& lists);

  friend bool operator==(const FiniteTransitionSystem&, const FiniteTransitionSystem&) = default;
};

/// Obstacle, per-stage target and initial cells, each sorted ascending.
struct LabeledCells {
  std::vector<CellId> obstacle_cells;
  std::vector<std::vector<CellId>> target_cells;
  std::vector<CellId> initial_cells;
};

/// Lattice points k * eta_u (k integer) inside the closed input box, in
/// row-major order. Throws Error(EmptyInputSet).
std::vector<Vec> build_input_grid(const HyperRect& input_bounds, std::span<const double> eta_u);

struct AbstractionOptions {
  int substeps = 5;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned jobs = 1;
  /// Record intermediate-substep cells for every pair.
  bool track_transit = true;
};

/// Builds the transition relation by propagating every cell box (center,
/// eta/2) under every input with the growth bound. Pairs whose propagated
/// boxes leave the bounds in a non-periodic dimension, or whose
/// integration produces non-finite values, are blocked. Output is
/// independent of `jobs`.
FiniteTransitionSystem build_abstraction(const UniformGrid& grid, const std::vector<Vec>& inputs,
                                         const VectorField& f, double tau, const AbstractionOptions& options = {});

UniformGrid make_state_grid(const ProblemSpec& spec);

/// Maps the problem's sets onto cells: obstacles (clearance-inflated) by
/// closed intersection, targets by containment of the whole cell box
/// minus obstacle cells, initial set by closed intersection (a full
/// dimensional point maps to its single cell). Throws Error(EmptyTarget).
LabeledCells label_cells(const UniformGrid& grid, const ProblemSpec& spec);

/// Binary cache. Layout (little-endian): "GSYN1", u64 state dim, u64 input
/// dim, u64 num_states, u64 num_inputs, u64 |successors|, u64 |transit|,
/// f64 eta[state dim], f64 tau, u64 fingerprint, then the CSR arrays
/// offsets (u64), successors (u32), blocked (u8), transit_offsets (u64),
/// transit_cells (u32).
struct FtsCacheHeader {
  std::uint64_t state_dim = 0;
  std::uint64_t input_dim = 0;
  Vec eta;
  double tau = 0;
  std::uint64_t fingerprint = 0;

  friend bool operator==(const FtsCacheHeader&, const FtsCacheHeader&) = default;
};

/// Fingerprint of every spec field that influences the transition relation.
std::uint64_t abstraction_fingerprint(const ProblemSpec& spec);

void write_fts(std::ostream& out, const FiniteTransitionSystem& fts, const FtsCacheHeader& header);
/// Throws Error(IoError) on malformed data or when `expected` (if given)
/// does not match the stored header.
FiniteTransitionSystem read_fts(std::istream& in, const FtsCacheHeader* expected = nullptr);

}  // namespace gridsynth
