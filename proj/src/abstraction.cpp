#include "gridsynth/abstraction.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include "gridsynth/error.hpp"
#include "gridsynth/hash.hpp"

namespace gridsynth {

std::span<const CellId> FiniteTransitionSystem::post(std::uint64_t s, std::uint64_t u) const {
  const std::uint64_t p = pair_id(s, u);
  return {successors.data() + offsets[p], successors.data() + offsets[p + 1]};
}

std::span<const CellId> FiniteTransitionSystem::transit(std::uint64_t s, std::uint64_t u) const {
  if (transit_offsets.size() != num_pairs() + 1) return {};
  const std::uint64_t p = pair_id(s, u);
  return {transit_cells.data() + transit_offsets[p], transit_cells.data() + transit_offsets[p + 1]};
}

FiniteTransitionSystem FiniteTransitionSystem::from_lists(
    std::uint64_t num_states, std::uint64_t num_inputs,
    const std::vector<std::vector<std::vector<CellId>>>& lists) {
  if (lists.size() != num_states) throw Error(ErrorCode::DimensionMismatch, "one successor table per state expected");
  FiniteTransitionSystem fts;
  fts.num_states = num_states;
  fts.num_inputs = num_inputs;
  fts.blocked.assign(num_states * num_inputs, 0);
  fts.offsets.assign(1, 0);
  fts.transit_offsets.assign(num_states * num_inputs + 1, 0);
  for (std::uint64_t s = 0; s < num_states; ++s) {
    if (lists[s].size() != num_inputs)
      throw Error(ErrorCode::DimensionMismatch, "one successor list per input expected");
    for (std::uint64_t u = 0; u < num_inputs; ++u) {
      std::vector<CellId> succ = lists[s][u];
      std::sort(succ.begin(), succ.end());
      succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
      for (CellId t : succ)
        if (t >= num_states) throw Error(ErrorCode::InvalidIndex, "successor id out of range");
      if (succ.empty()) fts.blocked[s * num_inputs + u] = 1;
      fts.successors.insert(fts.successors.end(), succ.begin(), succ.end());
      fts.offsets.push_back(fts.successors.size());
    }
  }
  return fts;
}

std::vector<Vec> build_input_grid(const HyperRect& input_bounds, std::span<const double> eta_u) {
  const std::size_t m = input_bounds.dim();
  if (eta_u.size() != m) throw Error(ErrorCode::DimensionMismatch, "eta_u dimension disagrees with input bounds");
  std::vector<Vec> axes(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(eta_u[i] > 0)) throw Error(ErrorCode::InvalidGrid, "eta_u must be positive");
    const auto k0 = static_cast<std::int64_t>(std::ceil(input_bounds.lower[i] / eta_u[i] - 1e-9));
    const auto k1 = static_cast<std::int64_t>(std::floor(input_bounds.upper[i] / eta_u[i] + 1e-9));
    for (std::int64_t k = k0; k <= k1; ++k)
      axes[i].push_back(std::clamp(static_cast<double>(k) * eta_u[i], input_bounds.lower[i], input_bounds.upper[i]));
    if (axes[i].empty())
      throw Error(ErrorCode::EmptyInputSet, "no multiple of eta_u lies inside the input bounds of dimension " +
                                                std::to_string(i));
  }
  std::vector<Vec> inputs;
  std::vector<std::size_t> pos(m, 0);
  for (;;) {
    Vec u(m);
    for (std::size_t i = 0; i < m; ++i) u[i] = axes[i][pos[i]];
    inputs.push_back(std::move(u));
    std::size_t i = m;
    while (i-- > 0) {
      if (++pos[i] < axes[i].size()) break;
      pos[i] = 0;
      if (i == 0) return inputs;
    }
  }
}

namespace {

HyperRect box_of(const BoxImage& b) {
  Vec lo(b.center.size()), hi(b.center.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] = b.center[i] - b.radius[i];
    hi[i] = b.center[i] + b.radius[i];
  }
  return HyperRect(std::move(lo), std::move(hi));
}

/// Successors of every cell under one input, in cell order.
struct InputSlice {
  std::vector<std::uint32_t> succ_count;
  std::vector<CellId> succ;
  std::vector<std::uint32_t> transit_count;
  std::vector<CellId> transit;
  std::vector<std::uint8_t> blocked;
  std::uint64_t nonfinite = 0;
};

InputSlice build_slice(const UniformGrid& grid, const Vec& u, const BoxPropagator& prop, bool track_transit) {
  const std::uint64_t n_cells = grid.num_cells();
  InputSlice slice;
  slice.succ_count.assign(n_cells, 0);
  slice.transit_count.assign(n_cells, 0);
  slice.blocked.assign(n_cells, 0);
  Vec radius(grid.dim());
  for (std::size_t i = 0; i < grid.dim(); ++i) radius[i] = grid.eta()[i] / 2.0;
  std::vector<CellId> scratch;
  for (std::uint64_t c = 0; c < n_cells; ++c) {
    const Vec center = grid.center_of(c);
    std::vector<BoxImage> tube;
    try {
      tube = prop.tube(center, radius, u);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      ++slice.nonfinite;
      slice.blocked[c] = 1;
      continue;
    }
    std::vector<HyperRect> boxes;
    boxes.reserve(tube.size());
    bool exits = false;
    for (const auto& b : tube) {
      boxes.push_back(box_of(b));
      exits = exits || grid.exits_bounds(boxes.back());
    }
    if (exits) {
      slice.blocked[c] = 1;
      continue;
    }
    const auto post = grid.cells_containing_points_of(boxes.back());
    slice.succ.insert(slice.succ.end(), post.begin(), post.end());
    slice.succ_count[c] = static_cast<std::uint32_t>(post.size());
    if (track_transit && boxes.size() > 1) {
      scratch.clear();
      for (std::size_t j = 0; j + 1 < boxes.size(); ++j) {
        const auto cells = grid.cells_containing_points_of(boxes[j]);
        scratch.insert(scratch.end(), cells.begin(), cells.end());
      }
      std::sort(scratch.begin(), scratch.end());
      scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
      slice.transit.insert(slice.transit.end(), scratch.begin(), scratch.end());
      slice.transit_count[c] = static_cast<std::uint32_t>(scratch.size());
    }
  }
  return slice;
}

}  // namespace

FiniteTransitionSystem build_abstraction(const UniformGrid& grid, const std::vector<Vec>& inputs,
                                         const VectorField& f, double tau, const AbstractionOptions& options) {
  if (grid.dim() != f.dim_state)
    throw Error(ErrorCode::DimensionMismatch, "grid and vector field state dimensions disagree");
  for (const auto& u : inputs)
    if (u.size() != f.dim_input) throw Error(ErrorCode::DimensionMismatch, "input dimension disagrees with field");
  if (inputs.empty()) throw Error(ErrorCode::EmptyInputSet, "no inputs");

  const BoxPropagator prop(f, tau, options.substeps);
  const std::size_t n_inputs = inputs.size();
  std::vector<InputSlice> slices(n_inputs);

  unsigned jobs = options.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.jobs;
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n_inputs));
  if (jobs <= 1) {
    for (std::size_t u = 0; u < n_inputs; ++u) slices[u] = build_slice(grid, inputs[u], prop, options.track_transit);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w)
      workers.emplace_back([&, w] {
        try {
          for (std::size_t u; (u = next.fetch_add(1)) < n_inputs;)
            slices[u] = build_slice(grid, inputs[u], prop, options.track_transit);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : workers) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Merge the per-input slices into state-major CSR.
  FiniteTransitionSystem fts;
  fts.num_states = grid.num_cells();
  fts.num_inputs = n_inputs;
  const std::uint64_t pairs = fts.num_pairs();
  fts.offsets.assign(pairs + 1, 0);
  fts.transit_offsets.assign(pairs + 1, 0);
  fts.blocked.assign(pairs, 0);
  std::vector<std::uint64_t> succ_cursor(n_inputs, 0), transit_cursor(n_inputs, 0);
  std::uint64_t total_succ = 0, total_transit = 0;
  for (const auto& s : slices) {
    total_succ += s.succ.size();
    total_transit += s.transit.size();
    fts.nonfinite_pairs += s.nonfinite;
  }
  fts.successors.resize(total_succ);
  fts.transit_cells.resize(total_transit);
  std::uint64_t so = 0, to = 0;
  for (std::uint64_t c = 0; c < fts.num_states; ++c) {
    for (std::size_t u = 0; u < n_inputs; ++u) {
      const InputSlice& s = slices[u];
      const std::uint64_t p = c * n_inputs + u;
      fts.blocked[p] = s.blocked[c];
      const std::uint32_t ns = s.succ_count[c];
      std::copy_n(s.succ.begin() + static_cast<std::ptrdiff_t>(succ_cursor[u]), ns, fts.successors.begin() + static_cast<std::ptrdiff_t>(so));
      succ_cursor[u] += ns;
      so += ns;
      fts.offsets[p + 1] = so;
      const std::uint32_t nt = s.transit_count[c];
      std::copy_n(s.transit.begin() + static_cast<std::ptrdiff_t>(transit_cursor[u]), nt,
                  fts.transit_cells.begin() + static_cast<std::ptrdiff_t>(to));
      transit_cursor[u] += nt;
      to += nt;
      fts.transit_offsets[p + 1] = to;
    }
  }
  return fts;
}

UniformGrid make_state_grid(const ProblemSpec& spec) {
  return UniformGrid(spec.state_bounds, spec.eta_x, spec.periodic);
}

LabeledCells label_cells(const UniformGrid& grid, const ProblemSpec& spec) {
  const ProblemSpec canon = canonicalize(spec);
  const HyperRect& bounds = grid.bounds();
  LabeledCells labels;

  std::vector<CellId> obstacles;
  for (const auto& r : canon.inflated_obstacles) {
    const auto cells = grid.cells_overlapping(extend_to(r, bounds));
    obstacles.insert(obstacles.end(), cells.begin(), cells.end());
  }
  std::sort(obstacles.begin(), obstacles.end());
  obstacles.erase(std::unique(obstacles.begin(), obstacles.end()), obstacles.end());
  labels.obstacle_cells = std::move(obstacles);

  const auto rects = canon.target_rects();
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const HyperRect target = extend_to(rects[i], bounds);
    std::vector<CellId> cells;
    for (CellId c : grid.cells_overlapping(target)) {
      if (!target.contains(grid.cell_box(c), 1e-9)) continue;
      if (std::binary_search(labels.obstacle_cells.begin(), labels.obstacle_cells.end(), c)) continue;
      cells.push_back(c);
    }
    if (cells.empty())
      throw Error(ErrorCode::EmptyTarget, "target " + std::to_string(i) +
                                              " contains no complete obstacle-free grid cell; refine eta_x");
    labels.target_cells.push_back(std::move(cells));
  }

  const Vec* point = std::get_if<Vec>(&canon.initial.value);
  if (point && point->size() == grid.dim()) {
    labels.initial_cells.push_back(static_cast<CellId>(grid.flat_cell_of(*point)));
  } else {
    labels.initial_cells = grid.cells_overlapping(canon.initial.as_rect(bounds));
  }
  return labels;
}

// -------------------------------------------------------------------- cache

namespace {

constexpr char kMagic[5] = {'G', 'S', 'Y', 'N', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw Error(ErrorCode::IoError, "truncated transition cache");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

template <typename T>
void put_array(std::ostream& out, const std::vector<T>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  } else {
    for (const T& x : v) put(out, x);
  }
}

template <typename T>
std::vector<T> get_array(std::istream& in, std::uint64_t count) {
  std::vector<T> v(count);
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(T))))
      throw Error(ErrorCode::IoError, "truncated transition cache");
  } else {
    for (auto& x : v) x = get<T>(in);
  }
  return v;
}

}  // namespace

std::uint64_t abstraction_fingerprint(const ProblemSpec& spec) {
  ProblemSpec s = spec;
  s.obstacles.clear();
  s.targets = {TwoDiagonalVertices{{0.0}, {0.0}}};
  s.initial = {};
  s.clearance = 0;
  s.inflated_obstacles.clear();
  return fnv1a64(serialize_spec(s) + "substeps=" + std::to_string(spec.substeps));
}

void write_fts(std::ostream& out, const FiniteTransitionSystem& fts, const FtsCacheHeader& header) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, header.state_dim);
  put<std::uint64_t>(out, header.input_dim);
  put<std::uint64_t>(out, fts.num_states);
  put<std::uint64_t>(out, fts.num_inputs);
  put<std::uint64_t>(out, fts.successors.size());
  put<std::uint64_t>(out, fts.transit_cells.size());
  for (double e : header.eta) put<double>(out, e);
  put<double>(out, header.tau);
  put<std::uint64_t>(out, header.fingerprint);
  put_array(out, fts.offsets);
  put_array(out, fts.successors);
  put_array(out, fts.blocked);
  put_array(out, fts.transit_offsets);
  put_array(out, fts.transit_cells);
  if (!out) throw Error(ErrorCode::IoError, "failed to write transition cache");
}

FiniteTransitionSystem read_fts(std::istream& in, const FtsCacheHeader* expected) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(ErrorCode::IoError, "not a transition cache (bad magic)");
  FtsCacheHeader h;
  h.state_dim = get<std::uint64_t>(in);
  h.input_dim = get<std::uint64_t>(in);
  FiniteTransitionSystem fts;
  fts.num_states = get<std::uint64_t>(in);
  fts.num_inputs = get<std::uint64_t>(in);
  const auto n_succ = get<std::uint64_t>(in);
  const auto n_transit = get<std::uint64_t>(in);
  if (h.state_dim > 64) throw Error(ErrorCode::IoError, "implausible state dimension in cache");
  for (std::uint64_t i = 0; i < h.state_dim; ++i) h.eta.push_back(get<double>(in));
  h.tau = get<double>(in);
  h.fingerprint = get<std::uint64_t>(in);
  if (expected && !(h == *expected)) throw Error(ErrorCode::IoError, "transition cache does not match the problem");
  const std::uint64_t pairs = fts.num_pairs();
  fts.offsets = get_array<std::uint64_t>(in, pairs + 1);
  fts.successors = get_array<CellId>(in, n_succ);
  fts.blocked = get_array<std::uint8_t>(in, pairs);
  fts.transit_offsets = get_array<std::uint64_t>(in, pairs + 1);
  fts.transit_cells = get_array<CellId>(in, n_transit);
  if (fts.offsets.back() != n_succ || fts.transit_offsets.back() != n_transit)
    throw Error(ErrorCode::IoError, "corrupt transition cache offsets");
  for (CellId c : fts.successors)
    if (c >= fts.num_states) throw Error(ErrorCode::IoError, "corrupt transition cache successor id");
  for (CellId c : fts.transit_cells)
    if (c >= fts.num_states) throw Error(ErrorCode::IoError, "corrupt transition cache transit id");
  return fts;
}

}  // namespace gridsynth
