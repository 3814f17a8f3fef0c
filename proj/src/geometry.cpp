#include "gridsynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gridsynth/error.hpp"

namespace gridsynth {

namespace {

constexpr double kDivisibilityTol = 1e-9;
constexpr double kAxisTol = 1e-9;
constexpr double kIndexTol = 1e-9;

std::string vec_str(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::NonAxisAligned: return "NonAxisAligned";
    case ErrorCode::NegativeSide: return "NegativeSide";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyInputSet: return "EmptyInputSet";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::OutsideWinningSet: return "OutsideWinningSet";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::GeometryError: return "GeometryError";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::UnknownSystem: return "UnknownSystem";
    case ErrorCode::ClientError: return "ClientError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- HyperRect

HyperRect::HyperRect(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.empty() || lower.size() != upper.size())
    throw Error(ErrorCode::GeometryError, "rect bounds must have equal, non-zero dimension");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw Error(ErrorCode::GeometryError, "rect bounds must be finite");
    if (lower[i] > upper[i])
      throw Error(ErrorCode::GeometryError,
                  "inverted rect: lower " + vec_str(lower) + " exceeds upper " + vec_str(upper));
  }
}

Vec HyperRect::center() const {
  Vec c(dim());
  for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
  return c;
}

Vec HyperRect::half_widths() const {
  Vec r(dim());
  for (std::size_t i = 0; i < dim(); ++i) r[i] = 0.5 * (upper[i] - lower[i]);
  return r;
}

bool HyperRect::contains(std::span<const double> x) const {
  const std::size_t n = std::min(dim(), x.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  return true;
}

bool HyperRect::contains(const HyperRect& other, double tol) const {
  const std::size_t n = std::min(dim(), other.dim());
  for (std::size_t i = 0; i < n; ++i)
    if (other.lower[i] < lower[i] - tol || other.upper[i] > upper[i] + tol) return false;
  return true;
}

bool HyperRect::intersects(const HyperRect& other) const {
  const std::size_t n = std::min(dim(), other.dim());
  for (std::size_t i = 0; i < n; ++i)
    if (other.upper[i] < lower[i] || other.lower[i] > upper[i]) return false;
  return true;
}

// -------------------------------------------------------------- UniformGrid

UniformGrid::UniformGrid(HyperRect bounds, Vec eta, std::vector<bool> periodic)
    : bounds_(std::move(bounds)), eta_(std::move(eta)), periodic_(std::move(periodic)) {
  const std::size_t n = bounds_.dim();
  if (n == 0) throw Error(ErrorCode::InvalidGrid, "grid dimension must be at least 1");
  if (eta_.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "eta has dimension " + std::to_string(eta_.size()) +
                                                  ", bounds have " + std::to_string(n));
  if (periodic_.empty()) periodic_.assign(n, false);
  if (periodic_.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "periodic mask dimension disagrees with bounds");

  counts_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eta_[i] > 0.0) || !std::isfinite(eta_[i]))
      throw Error(ErrorCode::InvalidGrid, "eta[" + std::to_string(i) + "] must be positive");
    const double width = bounds_.upper[i] - bounds_.lower[i];
    if (!(width > 0.0))
      throw Error(ErrorCode::InvalidGrid, "bounds have zero width in dimension " + std::to_string(i));
    const double ratio = width / eta_[i];
    if (periodic_[i]) {
      counts_[i] = static_cast<std::int64_t>(std::ceil(ratio - kDivisibilityTol));
      eta_[i] = width / static_cast<double>(counts_[i]);
    } else {
      const double k = std::round(ratio);
      if (k < 1.0 || std::abs(ratio - k) > kDivisibilityTol * std::max(1.0, k))
        throw Error(ErrorCode::InvalidGrid,
                    "width " + std::to_string(width) + " of dimension " + std::to_string(i) +
                        " is not an integer multiple of eta " + std::to_string(eta_[i]));
      counts_[i] = static_cast<std::int64_t>(k);
    }
  }

  strides_.assign(n, 1);
  num_cells_ = 1;
  for (std::size_t i = n; i-- > 0;) {
    strides_[i] = num_cells_;
    num_cells_ *= static_cast<std::uint64_t>(counts_[i]);
    if (num_cells_ > std::numeric_limits<CellId>::max())
      throw Error(ErrorCode::InvalidGrid, "grid has too many cells");
  }
}

double UniformGrid::wrap_coordinate(std::size_t i, double v) const {
  if (!periodic_[i]) return v;
  const double lo = bounds_.lower[i];
  const double width = bounds_.upper[i] - lo;
  double w = std::fmod(v - lo, width);
  if (w < 0.0) w += width;
  double r = lo + w;
  if (r >= bounds_.upper[i]) r = lo;
  return r;
}

void UniformGrid::wrap(std::span<double> x) const {
  for (std::size_t i = 0; i < dim() && i < x.size(); ++i) x[i] = wrap_coordinate(i, x[i]);
}

std::int64_t UniformGrid::raw_index(std::size_t i, double v) const {
  return static_cast<std::int64_t>(std::floor((v - bounds_.lower[i]) / eta_[i]));
}

std::uint64_t UniformGrid::flat_cell_of(std::span<const double> x) const {
  if (x.size() != dim())
    throw Error(ErrorCode::DimensionMismatch, "point dimension disagrees with grid");
  std::uint64_t flat = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    double v = x[i];
    if (!std::isfinite(v)) throw Error(ErrorCode::OutOfBounds, "non-finite coordinate");
    if (periodic_[i]) {
      v = wrap_coordinate(i, v);
    } else if (v < bounds_.lower[i] || v > bounds_.upper[i]) {
      throw Error(ErrorCode::OutOfBounds, "point " + vec_str(x) + " outside grid bounds in dimension " +
                                              std::to_string(i));
    }
    const std::int64_t k = std::clamp<std::int64_t>(raw_index(i, v), 0, counts_[i] - 1);
    flat += static_cast<std::uint64_t>(k) * strides_[i];
  }
  return flat;
}

CellIndex UniformGrid::cell_of(std::span<const double> x) const {
  return index_of(flat_cell_of(x));
}

CellIndex UniformGrid::index_of(std::uint64_t flat) const {
  if (flat >= num_cells_) throw Error(ErrorCode::InvalidIndex, "flat cell id out of range");
  CellIndex c;
  c.flat = flat;
  c.multi.resize(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    c.multi[i] = static_cast<std::int64_t>(flat / strides_[i]);
    flat %= strides_[i];
  }
  return c;
}

std::uint64_t UniformGrid::flatten(std::span<const std::int64_t> multi) const {
  if (multi.size() != dim()) throw Error(ErrorCode::InvalidIndex, "multi-index dimension mismatch");
  std::uint64_t flat = 0;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (multi[i] < 0 || multi[i] >= counts_[i])
      throw Error(ErrorCode::InvalidIndex, "cell index " + std::to_string(multi[i]) +
                                               " out of range in dimension " + std::to_string(i));
    flat += static_cast<std::uint64_t>(multi[i]) * strides_[i];
  }
  return flat;
}

Vec UniformGrid::center_of(const CellIndex& c) const {
  const std::uint64_t flat = flatten(c.multi);
  if (flat != c.flat) throw Error(ErrorCode::InvalidIndex, "flat id disagrees with multi-index");
  Vec x(dim());
  for (std::size_t i = 0; i < dim(); ++i)
    x[i] = bounds_.lower[i] + (static_cast<double>(c.multi[i]) + 0.5) * eta_[i];
  return x;
}

Vec UniformGrid::center_of(std::uint64_t flat) const { return center_of(index_of(flat)); }

HyperRect UniformGrid::cell_box(std::uint64_t flat) const {
  const CellIndex c = index_of(flat);
  Vec lo(dim()), hi(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    lo[i] = bounds_.lower[i] + static_cast<double>(c.multi[i]) * eta_[i];
    hi[i] = bounds_.lower[i] + static_cast<double>(c.multi[i] + 1) * eta_[i];
  }
  return HyperRect(std::move(lo), std::move(hi));
}

bool UniformGrid::exits_bounds(const HyperRect& r) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    if (periodic_[i]) continue;
    if (r.lower[i] < bounds_.lower[i] || r.upper[i] > bounds_.upper[i]) return true;
  }
  return false;
}

template <typename RangeFn>
std::vector<CellId> UniformGrid::enumerate_ranges(RangeFn&& range_of) const {
  const std::size_t n = dim();
  std::vector<std::vector<std::int64_t>> axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    axes[i] = range_of(i);
    if (axes[i].empty()) return {};
    std::sort(axes[i].begin(), axes[i].end());
    axes[i].erase(std::unique(axes[i].begin(), axes[i].end()), axes[i].end());
  }
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  std::vector<CellId> out;
  out.reserve(total);
  std::vector<std::size_t> pos(n, 0);
  for (;;) {
    std::uint64_t flat = 0;
    for (std::size_t i = 0; i < n; ++i)
      flat += static_cast<std::uint64_t>(axes[i][pos[i]]) * strides_[i];
    out.push_back(static_cast<CellId>(flat));
    std::size_t i = n;
    while (i-- > 0) {
      if (++pos[i] < axes[i].size()) break;
      pos[i] = 0;
      if (i == 0) return out;
    }
  }
}

namespace {

std::vector<std::int64_t> periodic_span(std::int64_t first, std::int64_t count, std::int64_t n) {
  std::vector<std::int64_t> ks;
  if (count >= n) {
    ks.resize(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) ks[static_cast<std::size_t>(k)] = k;
    return ks;
  }
  for (std::int64_t j = 0; j < count; ++j) ks.push_back(((first + j) % n + n) % n);
  return ks;
}

}  // namespace

std::vector<CellId> UniformGrid::cells_overlapping(const HyperRect& r) const {
  if (r.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "rect dimension disagrees with grid");
  return enumerate_ranges([&](std::size_t i) -> std::vector<std::int64_t> {
    const double lo = bounds_.lower[i];
    // Cell k's closed box [lo + k eta, lo + (k+1) eta] meets [a, b] iff
    // (a - lo)/eta - 1 <= k <= (b - lo)/eta. The tolerance widens the range
    // so touching boxes are not lost to rounding.
    const auto kl = static_cast<std::int64_t>(std::ceil((r.lower[i] - lo) / eta_[i] - 1.0 - kIndexTol));
    const auto kh = static_cast<std::int64_t>(std::floor((r.upper[i] - lo) / eta_[i] + kIndexTol));
    if (periodic_[i]) {
      if (kh < kl) return {};
      return periodic_span(kl, kh - kl + 1, counts_[i]);
    }
    const std::int64_t a = std::max<std::int64_t>(kl, 0);
    const std::int64_t b = std::min<std::int64_t>(kh, counts_[i] - 1);
    std::vector<std::int64_t> ks;
    for (std::int64_t k = a; k <= b; ++k) ks.push_back(k);
    return ks;
  });
}

std::vector<CellId> UniformGrid::cells_containing_points_of(const HyperRect& r) const {
  if (r.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "rect dimension disagrees with grid");
  return enumerate_ranges([&](std::size_t i) -> std::vector<std::int64_t> {
    const std::int64_t n = counts_[i];
    if (periodic_[i]) {
      const double width = bounds_.upper[i] - bounds_.lower[i];
      if (r.upper[i] - r.lower[i] >= width) return periodic_span(0, n, n);
      const std::int64_t nominal = raw_index(i, r.upper[i]) - raw_index(i, r.lower[i]);
      if (nominal >= n) return periodic_span(0, n, n);
      // Same path as cell_of so every point of r lands in the returned run.
      const std::int64_t first = std::clamp<std::int64_t>(raw_index(i, wrap_coordinate(i, r.lower[i])), 0, n - 1);
      const std::int64_t last = std::clamp<std::int64_t>(raw_index(i, wrap_coordinate(i, r.upper[i])), 0, n - 1);
      const std::int64_t count = ((last - first) % n + n) % n + 1;
      return periodic_span(first, count, n);
    }
    if (r.upper[i] < bounds_.lower[i] || r.lower[i] > bounds_.upper[i]) return {};
    const std::int64_t a = std::clamp<std::int64_t>(raw_index(i, std::max(r.lower[i], bounds_.lower[i])), 0, n - 1);
    const std::int64_t b = std::clamp<std::int64_t>(raw_index(i, std::min(r.upper[i], bounds_.upper[i])), 0, n - 1);
    std::vector<std::int64_t> ks;
    for (std::int64_t k = a; k <= b; ++k) ks.push_back(k);
    return ks;
  });
}

// ----------------------------------------------------------------- encodings

namespace {

HyperRect from_vertices(const FourVertices& e) {
  if (e.vertices.size() != 4)
    throw Error(ErrorCode::NonAxisAligned, "vertices4 needs exactly four vertices");
  for (const auto& v : e.vertices)
    if (v.size() != 2) throw Error(ErrorCode::NonAxisAligned, "vertices4 is defined for 2-D points only");
  Vec lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec hi{-lo[0], -lo[1]};
  for (const auto& v : e.vertices)
    for (std::size_t i = 0; i < 2; ++i) {
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
  // Every vertex must sit on a corner, and all four corners must be hit.
  bool seen[2][2] = {{false, false}, {false, false}};
  for (const auto& v : e.vertices) {
    int side[2];
    for (std::size_t i = 0; i < 2; ++i) {
      const bool at_lo = std::abs(v[i] - lo[i]) <= kAxisTol;
      const bool at_hi = std::abs(v[i] - hi[i]) <= kAxisTol;
      if (!at_lo && !at_hi)
        throw Error(ErrorCode::NonAxisAligned, "vertex " + vec_str(v) + " is not a corner of an axis-aligned rectangle");
      side[i] = at_lo ? 0 : 1;
    }
    seen[side[0]][side[1]] = true;
  }
  const bool degenerate = std::abs(hi[0] - lo[0]) <= kAxisTol || std::abs(hi[1] - lo[1]) <= kAxisTol;
  if (!degenerate && !(seen[0][0] && seen[0][1] && seen[1][0] && seen[1][1]))
    throw Error(ErrorCode::NonAxisAligned, "vertices do not cover all four corners");
  return HyperRect(std::move(lo), std::move(hi));
}

HyperRect from_diagonal(const TwoDiagonalVertices& e) {
  if (e.a.size() != e.b.size() || e.a.empty())
    throw Error(ErrorCode::DimensionMismatch, "diagonal vertices must have equal, non-zero dimension");
  Vec lo(e.a.size()), hi(e.a.size());
  for (std::size_t i = 0; i < e.a.size(); ++i) {
    lo[i] = std::min(e.a[i], e.b[i]);
    hi[i] = std::max(e.a[i], e.b[i]);
  }
  return HyperRect(std::move(lo), std::move(hi));
}

HyperRect from_center(const CenterAndSides& e) {
  if (e.center.size() != e.sides.size() || e.center.empty())
    throw Error(ErrorCode::DimensionMismatch, "center and sides must have equal, non-zero dimension");
  Vec lo(e.center.size()), hi(e.center.size());
  for (std::size_t i = 0; i < e.center.size(); ++i) {
    if (e.sides[i] < 0.0)
      throw Error(ErrorCode::NegativeSide, "side length " + std::to_string(e.sides[i]) + " is negative");
    lo[i] = e.center[i] - 0.5 * e.sides[i];
    hi[i] = e.center[i] + 0.5 * e.sides[i];
  }
  return HyperRect(std::move(lo), std::move(hi));
}

}  // namespace

HyperRect rect_from_encoding(const RectEncoding& encoding) {
  return std::visit(
      [](const auto& e) -> HyperRect {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, FourVertices>) return from_vertices(e);
        else if constexpr (std::is_same_v<T, TwoDiagonalVertices>) return from_diagonal(e);
        else return from_center(e);
      },
      encoding);
}

HyperRect extend_to(const HyperRect& r, const HyperRect& bounds) {
  if (r.dim() > bounds.dim())
    throw Error(ErrorCode::DimensionMismatch, "rect has more dimensions than the state space");
  Vec lo = bounds.lower, hi = bounds.upper;
  for (std::size_t i = 0; i < r.dim(); ++i) {
    lo[i] = r.lower[i];
    hi[i] = r.upper[i];
  }
  return HyperRect(std::move(lo), std::move(hi));
}

HyperRect inflate(const HyperRect& r, double margin, std::size_t dims, const HyperRect& clip) {
  HyperRect out = r;
  const std::size_t n = std::min({dims, r.dim(), clip.dim()});
  for (std::size_t i = 0; i < n; ++i) {
    out.lower[i] = std::max(r.lower[i] - margin, clip.lower[i]);
    out.upper[i] = std::min(r.upper[i] + margin, clip.upper[i]);
    if (out.lower[i] > out.upper[i]) out.lower[i] = out.upper[i];
  }
  return out;
}

}  // namespace gridsynth
