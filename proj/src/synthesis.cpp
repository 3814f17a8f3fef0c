#include "gridsynth/synthesis.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gridsynth/error.hpp"

namespace gridsynth {

bool StageController::is_goal(CellId s) const { return std::binary_search(goal.begin(), goal.end(), s); }

std::uint64_t StageController::winning_count() const {
  return static_cast<std::uint64_t>(std::count(winning.begin(), winning.end(), std::uint8_t{1}));
}

StageController solve_stage(const FiniteTransitionSystem& fts, std::span<const CellId> goal,
                            std::span<const CellId> obstacles) {
  const std::uint64_t n = fts.num_states;
  const std::uint64_t m = fts.num_inputs;
  if (fts.num_pairs() >= std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::InvalidGrid, "too many state/input pairs for the solver");

  std::vector<std::uint8_t> obstacle(n, 0);
  for (CellId c : obstacles) {
    if (c >= n) throw Error(ErrorCode::InvalidIndex, "obstacle cell out of range");
    obstacle[c] = 1;
  }

  StageController out;
  out.winning.assign(n, 0);
  out.choice.assign(n, StageController::kNoInput);
  out.value.assign(n, 0);
  for (CellId c : goal) {
    if (c >= n) throw Error(ErrorCode::InvalidIndex, "goal cell out of range");
    if (!obstacle[c]) out.goal.push_back(c);
  }
  std::sort(out.goal.begin(), out.goal.end());
  out.goal.erase(std::unique(out.goal.begin(), out.goal.end()), out.goal.end());

  // Outstanding-successor counters; disabled pairs never reach zero.
  constexpr std::uint32_t kDisabled = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> counter(fts.num_pairs(), kDisabled);
  std::vector<std::uint64_t> pred_offsets(n + 1, 0);
  for (std::uint64_t p = 0; p < fts.num_pairs(); ++p) {
    if (fts.blocked[p]) continue;
    const auto post = fts.post(p / m, p % m);
    if (post.empty()) continue;
    const auto transit = fts.transit(p / m, p % m);
    if (std::any_of(transit.begin(), transit.end(), [&](CellId c) { return obstacle[c] != 0; })) continue;
    counter[p] = static_cast<std::uint32_t>(post.size());
    for (CellId t : post) ++pred_offsets[t + 1];
  }
  for (std::uint64_t s = 0; s < n; ++s) pred_offsets[s + 1] += pred_offsets[s];
  std::vector<std::uint32_t> preds(pred_offsets[n]);
  {
    std::vector<std::uint64_t> cursor(pred_offsets.begin(), pred_offsets.end() - 1);
    for (std::uint64_t p = 0; p < fts.num_pairs(); ++p) {
      if (counter[p] == kDisabled) continue;
      for (CellId t : fts.post(p / m, p % m)) preds[cursor[t]++] = static_cast<std::uint32_t>(p);
    }
  }

  std::vector<CellId> layer = out.goal;
  for (CellId c : layer) out.winning[c] = 1;
  std::vector<std::int32_t> candidate(n, StageController::kNoInput);
  std::vector<CellId> next;
  for (std::uint32_t k = 0; !layer.empty(); ++k) {
    next.clear();
    for (CellId t : layer) {
      for (std::uint64_t i = pred_offsets[t]; i < pred_offsets[t + 1]; ++i) {
        const std::uint32_t p = preds[i];
        if (--counter[p] != 0) continue;
        const auto s = static_cast<CellId>(p / m);
        const auto u = static_cast<std::int32_t>(p % m);
        if (out.winning[s] || obstacle[s]) continue;
        if (candidate[s] == StageController::kNoInput) {
          candidate[s] = u;
          next.push_back(s);
        } else if (u < candidate[s]) {
          candidate[s] = u;
        }
      }
    }
    std::sort(next.begin(), next.end());
    for (CellId s : next) {
      out.winning[s] = 1;
      out.value[s] = k + 1;
      out.choice[s] = candidate[s];
    }
    layer.swap(next);
  }
  return out;
}

namespace {

void warn_if_initial_losing(SymbolicController& ctrl, const LabeledCells& labels) {
  if (labels.initial_cells.empty() || ctrl.stages.empty()) return;
  const auto& w = ctrl.stages.front().winning;
  const bool any = std::any_of(labels.initial_cells.begin(), labels.initial_cells.end(),
                               [&](CellId c) { return c < w.size() && w[c]; });
  if (!any) ctrl.warnings.push_back("EmptyWinningSet: no initial cell is winning");
}

}  // namespace

SymbolicController solve_reach_avoid(const FiniteTransitionSystem& fts, const LabeledCells& labels,
                                     std::size_t stage) {
  if (stage >= labels.target_cells.size())
    throw Error(ErrorCode::InvalidIndex, "stage " + std::to_string(stage) + " has no target");
  SymbolicController ctrl;
  ctrl.num_states = fts.num_states;
  ctrl.num_inputs = fts.num_inputs;
  ctrl.stages.push_back(solve_stage(fts, labels.target_cells[stage], labels.obstacle_cells));
  warn_if_initial_losing(ctrl, labels);
  return ctrl;
}

SymbolicController solve_sequential(const FiniteTransitionSystem& fts, const LabeledCells& labels) {
  const std::size_t stages = labels.target_cells.size();
  if (stages == 0) throw Error(ErrorCode::EmptyTarget, "no target stages");
  SymbolicController ctrl;
  ctrl.num_states = fts.num_states;
  ctrl.num_inputs = fts.num_inputs;
  ctrl.stages.resize(stages);
  for (std::size_t i = stages; i-- > 0;) {
    std::vector<CellId> goal;
    for (CellId c : labels.target_cells[i])
      if (i + 1 == stages || ctrl.stages[i + 1].winning[c]) goal.push_back(c);
    ctrl.stages[i] = solve_stage(fts, goal, labels.obstacle_cells);
    if (ctrl.stages[i].goal.empty())
      ctrl.warnings.push_back("EmptyWinningSet: stage " + std::to_string(i) +
                              " has no target cell that is winning for the next stage");
  }
  warn_if_initial_losing(ctrl, labels);
  return ctrl;
}

bool initial_cells_winning(const SymbolicController& ctrl, const LabeledCells& labels) {
  if (ctrl.stages.empty() || labels.initial_cells.empty()) return false;
  const auto& w = ctrl.stages.front().winning;
  return std::all_of(labels.initial_cells.begin(), labels.initial_cells.end(),
                     [&](CellId c) { return c < w.size() && w[c]; });
}

std::string verify_controller(const FiniteTransitionSystem& fts, const LabeledCells& labels,
                              const SymbolicController& ctrl) {
  std::vector<std::uint8_t> obstacle(fts.num_states, 0);
  for (CellId c : labels.obstacle_cells) obstacle[c] = 1;
  for (std::size_t i = 0; i < ctrl.stages.size(); ++i) {
    const auto& st = ctrl.stages[i];
    const std::string where = "stage " + std::to_string(i) + ": ";
    for (CellId g : st.goal)
      if (!st.winning[g] || st.value[g] != 0) return where + "goal cell " + std::to_string(g) + " not winning with value 0";
    if (i + 1 < ctrl.stages.size())
      for (CellId g : st.goal)
        if (!ctrl.stages[i + 1].winning[g]) return where + "goal cell " + std::to_string(g) + " loses the next stage";
    for (std::uint64_t s = 0; s < fts.num_states; ++s) {
      if (!st.winning[s]) continue;
      if (obstacle[s]) return where + "obstacle cell " + std::to_string(s) + " is winning";
      if (st.is_goal(static_cast<CellId>(s))) continue;
      const std::int32_t u = st.choice[s];
      if (u < 0 || static_cast<std::uint64_t>(u) >= fts.num_inputs)
        return where + "winning cell " + std::to_string(s) + " has no input";
      const auto post = fts.post(s, static_cast<std::uint64_t>(u));
      if (post.empty()) return where + "winning cell " + std::to_string(s) + " uses a blocked input";
      for (CellId t : post)
        if (!st.winning[t] || st.value[t] >= st.value[s])
          return where + "cell " + std::to_string(s) + " has successor " + std::to_string(t) +
                 " outside the winning set or without progress";
      for (CellId t : fts.transit(s, static_cast<std::uint64_t>(u)))
        if (obstacle[t]) return where + "cell " + std::to_string(s) + " passes through obstacle cell " + std::to_string(t);
    }
  }
  return {};
}

// --------------------------------------------------------- concretization

ConcreteController::ConcreteController(const SymbolicController& ctrl, const UniformGrid& grid, std::vector<Vec> inputs)
    : ctrl_(&ctrl), grid_(&grid), inputs_(std::move(inputs)) {
  if (ctrl.num_states != grid.num_cells())
    throw Error(ErrorCode::DimensionMismatch, "controller and grid disagree on the number of cells");
  if (ctrl.num_inputs != inputs_.size())
    throw Error(ErrorCode::DimensionMismatch, "controller and input list disagree on the number of inputs");
}

bool ConcreteController::observe(std::span<const double> x) {
  const auto cell = static_cast<CellId>(grid_->flat_cell_of(x));
  while (!finished() && ctrl_->stages[stage_].is_goal(cell)) ++stage_;
  return finished();
}

Vec ConcreteController::concretize(std::span<const double> x) {
  if (observe(x)) throw std::logic_error("controller finished: every target stage has been reached");
  const auto cell = grid_->flat_cell_of(x);
  const auto& st = ctrl_->stages[stage_];
  if (!st.winning[cell] || st.choice[cell] < 0)
    throw Error(ErrorCode::OutsideWinningSet,
                "cell " + std::to_string(cell) + " is not winning at stage " + std::to_string(stage_));
  return inputs_[static_cast<std::size_t>(st.choice[cell])];
}

std::int64_t ConcreteController::value_at(std::span<const double> x) const {
  if (finished()) return 0;
  const auto cell = grid_->flat_cell_of(x);
  const auto& st = ctrl_->stages[stage_];
  return st.winning[cell] ? static_cast<std::int64_t>(st.value[cell]) : -1;
}

// ------------------------------------------------------------------- export

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_row(std::ostream& out, const char* key, const Vec& v) {
  out << key;
  for (double d : v) out << ' ' << num(d);
  out << '\n';
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::IoError, "controller table: " + what); }

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> t;
  for (std::string s; is >> s;) t.push_back(s);
  return t;
}

double to_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    double d = std::stod(s, &pos);
    if (pos != s.size()) bad("bad number '" + s + "'");
    return d;
  } catch (const std::logic_error&) {
    bad("bad number '" + s + "'");
  }
}

std::uint64_t to_uint(const std::string& s) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) bad("bad integer '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    bad("bad integer '" + s + "'");
  }
}

Vec expect_row(std::istream& in, const std::string& key, std::size_t n) {
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') break;
  auto t = tokens(line);
  if (t.empty() || t[0] != key || t.size() != n + 1) bad("expected '" + key + "' with " + std::to_string(n) + " values");
  Vec v;
  for (std::size_t i = 1; i < t.size(); ++i) v.push_back(to_double(t[i]));
  return v;
}

}  // namespace

void write_controller(std::ostream& out, const SymbolicController& ctrl, const UniformGrid& grid,
                      const std::vector<Vec>& inputs) {
  const std::size_t n = grid.dim();
  const std::size_t m = inputs.empty() ? 0 : inputs.front().size();
  out << "# gridsynth symbolic controller\n";
  out << "# one row per winning cell: flat_id stage value input... ('-' on goal cells)\n";
  out << "# flat_id is row-major over the cell counts, last dimension fastest\n";
  out << "format 1\n";
  out << "state_dim " << n << '\n';
  write_row(out, "lower", grid.bounds().lower);
  write_row(out, "upper", grid.bounds().upper);
  write_row(out, "eta", grid.eta());
  out << "periodic";
  for (std::size_t i = 0; i < n; ++i) out << ' ' << (grid.periodic(i) ? 1 : 0);
  out << '\n';
  out << "input_dim " << m << '\n';
  out << "inputs " << inputs.size() << '\n';
  for (const auto& u : inputs) write_row(out, "u", u);
  out << "stages " << ctrl.stages.size() << '\n';
  std::uint64_t rows = 0;
  for (const auto& st : ctrl.stages) rows += st.winning_count();
  out << "cells " << rows << '\n';
  for (std::size_t k = 0; k < ctrl.stages.size(); ++k) {
    const auto& st = ctrl.stages[k];
    for (std::uint64_t s = 0; s < ctrl.num_states; ++s) {
      if (!st.winning[s]) continue;
      out << s << ' ' << k << ' ' << st.value[s];
      if (st.choice[s] < 0) {
        for (std::size_t i = 0; i < m; ++i) out << " -";
      } else {
        for (double d : inputs[static_cast<std::size_t>(st.choice[s])]) out << ' ' << num(d);
      }
      out << '\n';
    }
  }
}

LoadedController read_controller(std::istream& in) {
  LoadedController lc;
  std::string line;
  auto next_tokens = [&]() {
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') return tokens(line);
    bad("unexpected end of file");
  };
  auto t = next_tokens();
  if (t.size() != 2 || t[0] != "format" || t[1] != "1") bad("unsupported format line");
  t = next_tokens();
  if (t.size() != 2 || t[0] != "state_dim") bad("expected state_dim");
  const std::size_t n = to_uint(t[1]);
  Vec lo = expect_row(in, "lower", n);
  Vec hi = expect_row(in, "upper", n);
  lc.bounds = HyperRect(lo, hi);
  lc.eta = expect_row(in, "eta", n);
  for (double p : expect_row(in, "periodic", n)) lc.periodic.push_back(p != 0.0);
  t = next_tokens();
  if (t.size() != 2 || t[0] != "input_dim") bad("expected input_dim");
  const std::size_t m = to_uint(t[1]);
  t = next_tokens();
  if (t.size() != 2 || t[0] != "inputs") bad("expected inputs");
  const std::size_t n_inputs = to_uint(t[1]);
  for (std::size_t i = 0; i < n_inputs; ++i) lc.inputs.push_back(expect_row(in, "u", m));
  t = next_tokens();
  if (t.size() != 2 || t[0] != "stages") bad("expected stages");
  const std::size_t n_stages = to_uint(t[1]);
  t = next_tokens();
  if (t.size() != 2 || t[0] != "cells") bad("expected cells");
  const std::uint64_t rows = to_uint(t[1]);

  // The grid rebuilt from the header fixes the number of cells.
  const UniformGrid grid(lc.bounds, lc.eta, lc.periodic);
  auto& ctrl = lc.controller;
  ctrl.num_states = grid.num_cells();
  ctrl.num_inputs = n_inputs;
  ctrl.stages.resize(n_stages);
  for (auto& st : ctrl.stages) {
    st.winning.assign(ctrl.num_states, 0);
    st.choice.assign(ctrl.num_states, StageController::kNoInput);
    st.value.assign(ctrl.num_states, 0);
  }
  for (std::uint64_t r = 0; r < rows; ++r) {
    t = next_tokens();
    if (t.size() != 3 + m) bad("row " + std::to_string(r) + " has the wrong number of fields");
    const std::uint64_t s = to_uint(t[0]);
    const std::uint64_t k = to_uint(t[1]);
    if (s >= ctrl.num_states || k >= n_stages) bad("row " + std::to_string(r) + " is out of range");
    auto& st = ctrl.stages[k];
    st.winning[s] = 1;
    st.value[s] = static_cast<std::uint32_t>(to_uint(t[2]));
    if (t[3] == "-") {
      st.goal.push_back(static_cast<CellId>(s));
      continue;
    }
    Vec u;
    for (std::size_t i = 0; i < m; ++i) u.push_back(to_double(t[3 + i]));
    const auto it = std::find(lc.inputs.begin(), lc.inputs.end(), u);
    if (it == lc.inputs.end()) bad("row " + std::to_string(r) + " uses an input missing from the header");
    st.choice[s] = static_cast<std::int32_t>(it - lc.inputs.begin());
  }
  for (auto& st : ctrl.stages) std::sort(st.goal.begin(), st.goal.end());
  return lc;
}

}  // namespace gridsynth
