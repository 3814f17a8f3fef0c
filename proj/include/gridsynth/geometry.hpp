#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace gridsynth {

using Vec = std::vector<double>;
using CellId = std::uint32_t;

/// Closed axis-aligned box [lower, upper].
struct HyperRect {
  Vec lower;
  Vec upper;

  HyperRect() = default;
  /// Throws GeometryError when the dimensions disagree, are zero, or when
  /// lower[i] > upper[i].
  HyperRect(Vec lo, Vec hi);

  std::size_t dim() const { return lower.size(); }
  Vec center() const;
  Vec half_widths() const;

  /// Closed containment over the first min(dim(), x.size()) coordinates.
  bool contains(std::span<const double> x) const;
  bool contains(const HyperRect& other, double tol = 0.0) const;
  bool intersects(const HyperRect& other) const;

  friend bool operator==(const HyperRect&, const HyperRect&) = default;
};

struct CellIndex {
  std::vector<std::int64_t> multi;
  std::uint64_t flat = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform axis-aligned partition of a box into cells of width eta.
///
/// Cells are half-open per dimension, [center - eta/2, center + eta/2), so
/// every point of the bounds maps to exactly one cell; the upper face of a
/// non-periodic dimension is folded into the last cell. Periodic
/// dimensions wrap modulo their width.
///
/// A non-periodic width that is not an integer multiple of eta (within
/// 1e-9 relative) is rejected. A periodic width is split into
/// ceil(width / eta) equal cells, so the effective eta never exceeds the
/// requested one.
class UniformGrid {
 public:
  UniformGrid(HyperRect bounds, Vec eta, std::vector<bool> periodic = {});

  std::size_t dim() const { return bounds_.dim(); }
  const HyperRect& bounds() const { return bounds_; }
  const Vec& eta() const { return eta_; }
  bool periodic(std::size_t i) const { return periodic_[i]; }
  const std::vector<bool>& periodic_mask() const { return periodic_; }
  std::int64_t cell_count(std::size_t i) const { return counts_[i]; }
  const std::vector<std::int64_t>& cell_counts() const { return counts_; }
  std::uint64_t num_cells() const { return num_cells_; }

  /// Throws Error(OutOfBounds) if a non-periodic coordinate is outside.
  CellIndex cell_of(std::span<const double> x) const;
  std::uint64_t flat_cell_of(std::span<const double> x) const;

  /// Throws Error(InvalidIndex) on out-of-range indices.
  Vec center_of(const CellIndex& c) const;
  Vec center_of(std::uint64_t flat) const;
  CellIndex index_of(std::uint64_t flat) const;
  std::uint64_t flatten(std::span<const std::int64_t> multi) const;

  /// Closed box of a cell.
  HyperRect cell_box(std::uint64_t flat) const;

  /// Cells whose closed box meets the closed rect r (touching counts).
  /// Coordinates of r past a periodic bound wrap around.
  std::vector<CellId> cells_overlapping(const HyperRect& r) const;

  /// Cells that contain at least one point of the closed rect r under the
  /// half-open cell_of map. This is the tightest cell cover that is still
  /// consistent with cell_of; it is what transition construction uses.
  /// r must lie within the bounds in every non-periodic dimension.
  std::vector<CellId> cells_containing_points_of(const HyperRect& r) const;

  /// Wrap periodic coordinates into [lower, upper).
  void wrap(std::span<double> x) const;
  double wrap_coordinate(std::size_t i, double v) const;

  /// True if r leaves the bounds in some non-periodic dimension.
  bool exits_bounds(const HyperRect& r) const;

 private:
  std::int64_t raw_index(std::size_t i, double v) const;
  template <typename RangeFn>
  std::vector<CellId> enumerate_ranges(RangeFn&& range_of) const;

  HyperRect bounds_;
  Vec eta_;
  std::vector<bool> periodic_;
  std::vector<std::int64_t> counts_;
  std::vector<std::uint64_t> strides_;
  std::uint64_t num_cells_ = 1;
};

// Rectangle encodings accepted from problem documents.

struct FourVertices {
  std::vector<Vec> vertices;  // exactly four 2-D points, any order
  friend bool operator==(const FourVertices&, const FourVertices&) = default;
};

struct TwoDiagonalVertices {
  Vec a;
  Vec b;
  friend bool operator==(const TwoDiagonalVertices&, const TwoDiagonalVertices&) = default;
};

struct CenterAndSides {
  Vec center;
  Vec sides;
  friend bool operator==(const CenterAndSides&, const CenterAndSides&) = default;
};

using RectEncoding = std::variant<FourVertices, TwoDiagonalVertices, CenterAndSides>;

/// Canonical box of an encoding: per-coordinate min/max. Throws
/// Error(NonAxisAligned) or Error(NegativeSide).
HyperRect rect_from_encoding(const RectEncoding& encoding);

/// Box extended to `bounds.dim()` dimensions: missing trailing dimensions
/// take the full range of `bounds`.
HyperRect extend_to(const HyperRect& r, const HyperRect& bounds);

/// Minkowski sum with the infinity-ball of radius `margin` applied to the
/// first `dims` coordinates, then clipped to `clip` in those coordinates.
HyperRect inflate(const HyperRect& r, double margin, std::size_t dims, const HyperRect& clip);

}  // namespace gridsynth
