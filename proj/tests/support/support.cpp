#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "gridsynth/error.hpp"
#include "gridsynth/hash.hpp"

#ifndef GRIDSYNTH_SOURCE_DIR
#define GRIDSYNTH_SOURCE_DIR "."
#endif

namespace testsupport {

using namespace gridsynth;

std::string source_path(const std::string& rel) { return std::string(GRIDSYNTH_SOURCE_DIR) + "/" + rel; }

std::string fixture_case(const std::string& id) { return source_path("fixtures/cases/" + id + "/spec.json"); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

namespace {

double cell_lo(const UniformGrid& g, std::size_t i, std::int64_t k) {
  return g.bounds().lower[i] + static_cast<double>(k) * g.eta()[i];
}

}  // namespace

std::vector<std::int64_t> brute_cell_of(const UniformGrid& g, const Vec& x) {
  Vec y = x;
  for (std::size_t i = 0; i < g.dim(); ++i) {
    if (!g.periodic(i)) continue;
    const double lo = g.bounds().lower[i];
    const double w = g.bounds().upper[i] - lo;
    y[i] = lo + std::fmod(std::fmod(y[i] - lo, w) + w, w);
  }
  for (std::uint64_t c = 0; c < g.num_cells(); ++c) {
    std::vector<std::int64_t> idx(g.dim());
    std::uint64_t rest = c;
    for (std::size_t i = g.dim(); i-- > 0;) {
      idx[i] = static_cast<std::int64_t>(rest % static_cast<std::uint64_t>(g.cell_count(i)));
      rest /= static_cast<std::uint64_t>(g.cell_count(i));
    }
    bool in = true;
    for (std::size_t i = 0; i < g.dim() && in; ++i) {
      const double lo = cell_lo(g, i, idx[i]);
      const double hi = cell_lo(g, i, idx[i] + 1);
      const bool last = idx[i] + 1 == g.cell_count(i);
      in = y[i] >= lo && (y[i] < hi || (last && y[i] <= g.bounds().upper[i]));
    }
    if (in) return idx;
  }
  throw std::runtime_error("point outside every cell");
}

std::vector<CellId> brute_overlapping(const UniformGrid& g, const HyperRect& r) {
  std::vector<CellId> out;
  for (std::uint64_t c = 0; c < g.num_cells(); ++c) {
    std::uint64_t rest = c;
    bool hit = true;
    for (std::size_t i = g.dim(); i-- > 0;) {
      const auto k = static_cast<std::int64_t>(rest % static_cast<std::uint64_t>(g.cell_count(i)));
      rest /= static_cast<std::uint64_t>(g.cell_count(i));
      const double tol = 1e-9 * g.eta()[i];
      const double lo = cell_lo(g, i, k);
      const double hi = cell_lo(g, i, k + 1);
      if (hi < r.lower[i] - tol || lo > r.upper[i] + tol) hit = false;
    }
    if (hit) out.push_back(static_cast<CellId>(c));
  }
  return out;
}

GameResult brute_force_game(const FiniteTransitionSystem& fts, const std::vector<CellId>& goal,
                            const std::vector<CellId>& obstacles) {
  const auto n = fts.num_states;
  std::vector<std::uint8_t> is_obs(n, 0), is_goal(n, 0);
  for (auto o : obstacles) is_obs[o] = 1;
  for (auto t : goal) is_goal[t] = 1;
  GameResult r{std::vector<std::uint8_t>(n, 0), std::vector<std::uint32_t>(n, 0)};
  for (auto t : goal) r.winning[t] = 1;
  for (std::uint32_t layer = 1;; ++layer) {
    std::vector<std::uint8_t> next = r.winning;
    bool changed = false;
    for (std::uint64_t s = 0; s < n; ++s) {
      if (r.winning[s] || is_obs[s] || is_goal[s]) continue;
      for (std::uint64_t u = 0; u < fts.num_inputs; ++u) {
        const auto post = fts.post(s, u);
        if (post.empty()) continue;
        const auto tr = fts.transit(s, u);
        if (std::any_of(tr.begin(), tr.end(), [&](CellId c) { return is_obs[c] != 0; })) continue;
        if (std::all_of(post.begin(), post.end(), [&](CellId t) { return r.winning[t] != 0; })) {
          next[s] = 1;
          r.value[s] = layer;
          changed = true;
          break;
        }
      }
    }
    r.winning = std::move(next);
    if (!changed) return r;
  }
}

FiniteTransitionSystem random_fts(std::mt19937_64& rng, std::uint64_t n, std::uint64_t m, double density) {
  // density scales the expected successor-list length (1 + 4 * density).
  std::vector<std::vector<std::vector<CellId>>> lists(n, std::vector<std::vector<CellId>>(m));
  std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
  std::bernoulli_distribution blocked(0.1);
  std::poisson_distribution<int> extra(4.0 * density);
  for (std::uint64_t s = 0; s < n; ++s)
    for (std::uint64_t u = 0; u < m; ++u) {
      if (blocked(rng)) continue;
      const int k = 1 + extra(rng);
      for (int j = 0; j < k; ++j) lists[s][u].push_back(static_cast<CellId>(pick(rng)));
    }
  return FiniteTransitionSystem::from_lists(n, m, lists);
}

std::vector<Vec> plan_waypoints(const ProblemSpec& spec, double h, double margin) {
  const HyperRect& b = spec.state_bounds;
  const int nx = static_cast<int>(std::lround((b.upper[0] - b.lower[0]) / h));
  const int ny = static_cast<int>(std::lround((b.upper[1] - b.lower[1]) / h));
  auto cx = [&](int i) { return b.lower[0] + (i + 0.5) * h; };
  auto cy = [&](int j) { return b.lower[1] + (j + 0.5) * h; };
  const auto obstacles = spec.obstacle_rects();
  std::vector<std::uint8_t> free(static_cast<std::size_t>(nx * ny), 1);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (const auto& o : obstacles) {
        const double pad = margin + h / 2;
        if (cx(i) >= o.lower[0] - pad && cx(i) <= o.upper[0] + pad && cy(j) >= o.lower[1] - pad &&
            cy(j) <= o.upper[1] + pad)
          free[static_cast<std::size_t>(i * ny + j)] = 0;
      }

  const HyperRect init = spec.initial.as_rect(b);
  const Vec start{0.5 * (init.lower[0] + init.upper[0]), 0.5 * (init.lower[1] + init.upper[1])};
  int cur = std::clamp(static_cast<int>((start[0] - b.lower[0]) / h), 0, nx - 1) * ny +
            std::clamp(static_cast<int>((start[1] - b.lower[1]) / h), 0, ny - 1);
  if (!free[static_cast<std::size_t>(cur)]) throw std::runtime_error("planner start blocked");

  std::vector<int> nodes{cur};
  for (const auto& t : spec.target_rects()) {
    std::vector<int> prev(free.size(), -1);
    std::deque<int> q{cur};
    prev[static_cast<std::size_t>(cur)] = cur;
    int hit = -1;
    while (!q.empty()) {
      const int c = q.front();
      q.pop_front();
      const int i = c / ny, j = c % ny;
      if (cx(i) > t.lower[0] + h && cx(i) < t.upper[0] - h && cy(j) > t.lower[1] + h && cy(j) < t.upper[1] - h) {
        hit = c;
        break;
      }
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int a = i + di[k], bb = j + dj[k];
        if (a < 0 || a >= nx || bb < 0 || bb >= ny) continue;
        const int nb = a * ny + bb;
        if (!free[static_cast<std::size_t>(nb)] || prev[static_cast<std::size_t>(nb)] >= 0) continue;
        prev[static_cast<std::size_t>(nb)] = c;
        q.push_back(nb);
      }
    }
    if (hit < 0) throw std::runtime_error("planner found no path");
    std::vector<int> leg;
    for (int c = hit; c != cur; c = prev[static_cast<std::size_t>(c)]) leg.push_back(c);
    std::reverse(leg.begin(), leg.end());
    nodes.insert(nodes.end(), leg.begin(), leg.end());
    cur = hit;
  }

  std::vector<Vec> pts{start};
  for (int c : nodes) pts.push_back({cx(c / ny), cy(c % ny)});
  // Drop interior points of straight runs.
  std::vector<Vec> out{pts.front()};
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const Vec& a = out.back();
    const Vec& p = pts[k];
    const Vec& c = pts[k + 1];
    const double cross = (p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0]);
    if (std::abs(cross) > 1e-12) out.push_back(p);
  }
  out.push_back(pts.back());
  return out;
}

ProblemSpec corrupt(const ProblemSpec& spec) {
  ProblemSpec s = spec;
  if (!s.obstacles.empty()) {
    s.obstacles.erase(s.obstacles.begin());
  } else {
    HyperRect t = rect_from_encoding(s.targets.front());
    t.lower[0] += 0.4;
    t.upper[0] += 0.4;
    s.targets.front() = TwoDiagonalVertices{t.lower, t.upper};
  }
  return s;
}

std::string fenced(const std::string& doc) { return "```json\n" + doc + "```"; }

namespace {

MockResponse keyed(const std::string& prompt, std::string text) { return {fnv1a64(prompt), std::move(text)}; }

const char* kFeedback1 = "1. obstacles: an obstacle from the description is missing.";
const char* kFeedback2 = "1. obstacles: the document still does not list every obstacle.";
const char* kGarbage = "The robot should drive around the obstacles and park in the target area.";

std::string parse_error_of(const PromptSet& prompts, const std::string& nl, const std::string& reply,
                           const std::optional<std::string>& feedback) {
  MockClient probe({MockResponse{std::nullopt, reply}});
  return code_agent_generate(probe, prompts, nl, feedback).parse_error;
}

}  // namespace

std::vector<MockResponse> full_script(const PromptSet& prompts, const std::string& nl, const ProblemSpec& truth,
                                      FullScenario s) {
  const std::string good = serialize_spec(truth);
  const std::string bad = serialize_spec(corrupt(truth));
  const std::string first = build_code_prompt(prompts, nl);
  std::vector<MockResponse> out;
  switch (s) {
    case FullScenario::AcceptAt1:
      out.push_back(keyed(first, fenced(good)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, good), "True"));
      break;
    case FullScenario::AcceptAt2:
      out.push_back(keyed(first, fenced(bad)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, bad), kFeedback1));
      out.push_back(keyed(build_code_prompt(prompts, nl, kFeedback1), fenced(good)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, good), "True"));
      break;
    case FullScenario::BlockedWrong:
      out.push_back(keyed(first, fenced(bad)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, bad), kFeedback1));
      out.push_back(keyed(build_code_prompt(prompts, nl, kFeedback1), fenced(bad)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, bad), kFeedback2));
      break;
    case FullScenario::AcceptedWrong:
      out.push_back(keyed(first, fenced(bad)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, bad), "True"));
      break;
    case FullScenario::FalseBlock:
      out.push_back(keyed(first, fenced(good)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, good), kFeedback1));
      out.push_back(keyed(build_code_prompt(prompts, nl, kFeedback1), fenced(good)));
      out.push_back(keyed(build_checker_prompt(prompts, nl, good), kFeedback2));
      break;
    case FullScenario::GarbageTwice: {
      out.push_back(keyed(first, kGarbage));
      const std::string err = parse_error_of(prompts, nl, kGarbage, std::nullopt);
      out.push_back(keyed(build_code_prompt(prompts, nl, err), kGarbage));
      break;
    }
  }
  return out;
}

std::vector<MockResponse> code_script(const PromptSet& prompts, const std::string& nl, const ProblemSpec& truth,
                                      CodeScenario s) {
  const std::string prompt = build_code_prompt(prompts, nl);
  switch (s) {
    case CodeScenario::Correct: return {keyed(prompt, fenced(serialize_spec(truth)))};
    case CodeScenario::Wrong: return {keyed(prompt, fenced(serialize_spec(corrupt(truth))))};
    case CodeScenario::Garbage: return {keyed(prompt, kGarbage)};
  }
  return {};
}

std::vector<MockResponse> direct_script(const PromptSet& prompts, const std::string& nl, const ProblemSpec& truth,
                                        DirectScenario s) {
  const std::string prompt = build_planner_prompt(prompts, nl);
  nlohmann::json path = nlohmann::json::array();
  if (s == DirectScenario::Correct) {
    for (const auto& p : plan_waypoints(truth)) path.push_back({p[0], p[1]});
  } else {
    const HyperRect init = truth.initial.as_rect(truth.state_bounds);
    path.push_back({0.5 * (init.lower[0] + init.upper[0]), 0.5 * (init.lower[1] + init.upper[1])});
  }
  return {keyed(prompt, fenced(path.dump() + "\n"))};
}

// ------------------------------------------------------------------ plans

std::vector<std::vector<DirectScenario>> reference_direct_plan(std::size_t num_cases) {
  using D = DirectScenario;
  std::vector<std::vector<D>> plan(num_cases, {D::Wrong, D::Wrong, D::Wrong});
  plan.at(0) = {D::Correct, D::Correct, D::Wrong};
  plan.at(1) = {D::Wrong, D::Correct, D::Correct};
  plan.at(2) = {D::Correct, D::Wrong, D::Correct};
  plan.at(3) = {D::Correct, D::Wrong, D::Wrong};
  return plan;
}

std::vector<std::vector<CodeScenario>> reference_code_plan(std::size_t num_cases) {
  using C = CodeScenario;
  std::vector<std::vector<C>> plan(num_cases, {C::Wrong, C::Garbage, C::Wrong});
  for (std::size_t i = 0; i < 9; ++i) plan.at(i) = {C::Correct, C::Correct, C::Correct};
  plan.at(9) = {C::Correct, C::Correct, C::Wrong};
  plan.at(10) = {C::Correct, C::Wrong, C::Correct};
  plan.at(11) = {C::Correct, C::Wrong, C::Wrong};
  plan.at(12) = {C::Wrong, C::Correct, C::Garbage};
  plan.at(13) = {C::Garbage, C::Wrong, C::Correct};
  return plan;
}

std::vector<std::vector<FullScenario>> reference_full_plan(std::size_t num_cases) {
  using F = FullScenario;
  std::vector<std::vector<F>> plan(num_cases, {F::BlockedWrong, F::BlockedWrong, F::BlockedWrong});
  for (std::size_t i = 0; i < 10; ++i)
    plan.at(i) = i % 3 == 0 ? std::vector<F>{F::AcceptAt1, F::AcceptAt2, F::AcceptAt1}
                            : std::vector<F>{F::AcceptAt1, F::AcceptAt1, F::AcceptAt1};
  plan.at(10) = {F::AcceptAt1, F::AcceptAt2, F::BlockedWrong};
  plan.at(11) = {F::AcceptAt1, F::AcceptedWrong, F::AcceptAt1};
  plan.at(12) = {F::FalseBlock, F::AcceptAt1, F::AcceptAt2};
  plan.at(13) = {F::AcceptAt1, F::BlockedWrong, F::GarbageTwice};
  plan.at(14) = {F::AcceptedWrong, F::AcceptAt2, F::BlockedWrong};
  plan.at(15) = {F::BlockedWrong, F::BlockedWrong, F::AcceptAt1};
  plan.at(16) = {F::AcceptedWrong, F::BlockedWrong, F::BlockedWrong};
  plan.at(17) = {F::GarbageTwice, F::BlockedWrong, F::BlockedWrong};
  return plan;
}

namespace {

template <typename Plan, typename Fn>
std::string build_script(const std::vector<BenchCase>& cases, const Plan& plan, Fn fn) {
  std::vector<MockResponse> all;
  for (std::size_t i = 0; i < cases.size(); ++i)
    for (std::size_t p = 0; p < 3; ++p) {
      auto part = fn(cases[i].paraphrases[p], cases[i].ground_truth, plan.at(i).at(p));
      all.insert(all.end(), part.begin(), part.end());
    }
  return write_mock_script(all);
}

}  // namespace

std::string script_for(const std::vector<BenchCase>& cases, const PromptSet& prompts,
                       const std::vector<std::vector<DirectScenario>>& plan) {
  return build_script(cases, plan, [&](const std::string& nl, const ProblemSpec& t, DirectScenario s) {
    return direct_script(prompts, nl, t, s);
  });
}

std::string script_for(const std::vector<BenchCase>& cases, const PromptSet& prompts,
                       const std::vector<std::vector<CodeScenario>>& plan) {
  return build_script(cases, plan, [&](const std::string& nl, const ProblemSpec& t, CodeScenario s) {
    return code_script(prompts, nl, t, s);
  });
}

std::string script_for(const std::vector<BenchCase>& cases, const PromptSet& prompts,
                       const std::vector<std::vector<FullScenario>>& plan) {
  return build_script(cases, plan, [&](const std::string& nl, const ProblemSpec& t, FullScenario s) {
    return full_script(prompts, nl, t, s);
  });
}

bool scenario_correct(DirectScenario s) { return s == DirectScenario::Correct; }
bool scenario_correct(CodeScenario s) { return s == CodeScenario::Correct; }
bool scenario_correct(FullScenario s) { return s == FullScenario::AcceptAt1 || s == FullScenario::AcceptAt2; }

}  // namespace testsupport
