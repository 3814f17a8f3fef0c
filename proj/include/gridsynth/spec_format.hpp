#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridsynth/geometry.hpp"

namespace gridsynth {

/// A single initial state or an initial box. Either may cover fewer
/// dimensions than the state space; missing dimensions span their full
/// range.
struct InitialSet {
  std::variant<Vec, HyperRect> value;

  bool is_point() const { return std::holds_alternative<Vec>(value); }
  /// Box over the full state space.
  HyperRect as_rect(const HyperRect& state_bounds) const;

  friend bool operator==(const InitialSet&, const InitialSet&) = default;
};

/// Canonical reach-avoid problem: dynamics name, state and input boxes,
/// discretization, obstacles, ordered targets, initial set and clearance.
///
/// Obstacles and targets keep the encoding they were written in until
/// canonicalize() rewrites them as diagonal (lower, upper) pairs. Targets
/// are visited in list order.
struct ProblemSpec {
  std::string system = "bicycle";
  HyperRect state_bounds;
  std::vector<bool> periodic;
  HyperRect input_bounds;
  Vec eta_x;
  Vec eta_u;
  double tau = 0.3;
  std::vector<RectEncoding> obstacles;
  std::vector<RectEncoding> targets;
  InitialSet initial;
  double clearance = 0.0;

  /// RK4 substeps per sampling period. Not part of the document format.
  int substeps = 5;
  /// Clearance-inflated obstacles in the order of `obstacles`; filled by
  /// canonicalize(), never serialized.
  std::vector<HyperRect> inflated_obstacles;

  std::size_t state_dim() const { return state_bounds.dim(); }
  std::size_t input_dim() const { return input_bounds.dim(); }

  /// Canonical boxes, as written (not extended to the state dimension).
  std::vector<HyperRect> obstacle_rects() const;
  std::vector<HyperRect> target_rects() const;

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// Number of leading state coordinates that clearance applies to.
inline constexpr std::size_t kPositionDims = 2;

/// Strict parse of a spec document. Throws SchemaError (with field path or
/// line) for malformed documents and Error(GeometryError) for inverted or
/// out-of-bounds geometry.
ProblemSpec parse_spec(std::string_view text);
ProblemSpec load_spec(const std::string& path);

/// Document text; parse_spec(serialize_spec(s)) == s for parsed specs.
std::string serialize_spec(const ProblemSpec& spec);

/// Rewrites every encoding as its canonical diagonal pair, sorts
/// obstacles by (lower, upper) and computes the inflated copies.
/// Idempotent.
ProblemSpec canonicalize(const ProblemSpec& spec);

enum class MismatchCategory {
  MissingObstacle,
  ExtraObstacle,
  GeometryMismatch,
  WrongTarget,
  WrongTargetOrder,
  WrongInitial,
  WrongBounds,
  WrongClearance,
};

const char* to_string(MismatchCategory c);

struct MismatchEntry {
  MismatchCategory category;
  std::string detail;
  std::optional<HyperRect> expected;
  std::optional<HyperRect> actual;
};

struct MismatchReport {
  std::vector<MismatchEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t count(MismatchCategory c) const;
  /// One line per entry, "<category>: <detail>".
  std::string to_text() const;
};

/// Semantic comparison of two specs. Geometry is compared componentwise
/// within `tol`; obstacles are paired greedily by nearest distance; target
/// order is significant. Throws Error(DimensionMismatch) when the state
/// dimensions differ.
MismatchReport semantic_diff(const ProblemSpec& reference, const ProblemSpec& candidate, double tol = 1e-6);

}  // namespace gridsynth
