#include "gridsynth/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

#include "gridsynth/error.hpp"

namespace gridsynth {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTarget: return "ReachedTarget";
    case Termination::LeftWinningSet: return "LeftWinningSet";
    case Termination::StepLimit: return "StepLimit";
    case Termination::ObstacleHit: return "ObstacleHit";
  }
  return "Unknown";
}

namespace {

bool hits(const std::vector<HyperRect>& obstacles, std::span<const double> x) {
  return std::any_of(obstacles.begin(), obstacles.end(), [&](const HyperRect& o) { return o.contains(x); });
}

}  // namespace

Trajectory simulate_closed_loop(const VectorField& f, ConcreteController& ctrl, std::span<const double> x0,
                                double tau, int substeps, std::size_t max_steps,
                                const std::vector<HyperRect>& obstacles) {
  const UniformGrid& grid = ctrl.grid();
  Trajectory traj;
  Vec x(x0.begin(), x0.end());
  grid.wrap(x);
  traj.samples.push_back({0.0, x, {}});
  for (std::size_t step = 0;; ++step) {
    const double t = traj.samples.back().time;
    traj.t_final = t;
    Vec u;
    try {
      if (ctrl.observe(x)) {
        traj.termination = Termination::ReachedTarget;
        return traj;
      }
      u = ctrl.concretize(x);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutsideWinningSet && e.code() != ErrorCode::OutOfBounds) throw;
      traj.termination = Termination::LeftWinningSet;
      return traj;
    }
    if (step == max_steps) {
      traj.termination = Termination::StepLimit;
      return traj;
    }
    traj.samples.back().input = u;
    std::vector<Vec> path = integrate_path(f, x, u, tau, substeps);
    for (auto& p : path) grid.wrap(p);
    x = path.back();
    path.pop_back();
    const bool contact = hits(obstacles, x) ||
                         std::any_of(path.begin(), path.end(), [&](const Vec& p) { return hits(obstacles, p); });
    traj.substeps.push_back(std::move(path));
    traj.samples.push_back({static_cast<double>(step + 1) * tau, x, {}});
    if (contact) {
      traj.t_final = traj.samples.back().time;
      traj.termination = Termination::ObstacleHit;
      return traj;
    }
  }
}

ReachAvoidVerdict check_reach_avoid(const Trajectory& traj, const ProblemSpec& spec) {
  const std::vector<HyperRect> targets = spec.target_rects();
  const std::vector<HyperRect> obstacles = spec.obstacle_rects();
  ReachAvoidVerdict v;
  auto first_obstacle = [&](std::span<const double> x) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < obstacles.size(); ++k)
      if (obstacles[k].contains(x)) return k;
    return std::nullopt;
  };

  std::size_t stage = 0;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    while (stage < targets.size() && targets[stage].contains(s.state)) ++stage;
    if (stage == targets.size()) {
      v.satisfied = true;
      v.t_f = s.time;
      return v;
    }
    if (auto k = first_obstacle(s.state)) {
      v.first_violation = std::make_pair(s.time, *k);
      return v;
    }
    if (i < traj.substeps.size()) {
      const auto& sub = traj.substeps[i];
      const double next_time = i + 1 < traj.samples.size() ? traj.samples[i + 1].time : s.time;
      for (std::size_t j = 0; j < sub.size(); ++j) {
        if (auto k = first_obstacle(sub[j])) {
          const double frac = static_cast<double>(j + 1) / static_cast<double>(sub.size() + 1);
          v.first_violation = std::make_pair(s.time + frac * (next_time - s.time), *k);
          return v;
        }
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------- rendering

namespace {

std::string fx(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // Avoid "-0.000000" so equal drawings stay byte-identical.
  if (std::string(buf) == "-0.000000") return "0.000000";
  return buf;
}

struct Canvas {
  double x0, y1, scale, margin;
  double px(double x) const { return margin + (x - x0) * scale; }
  double py(double y) const { return margin + (y1 - y) * scale; }
};

}  // namespace

std::string render_svg(const ProblemSpec& spec, const RenderOptions& options) {
  if (spec.state_dim() < 2)
    throw Error(ErrorCode::UnsupportedDimension, "rendering needs at least two state dimensions");
  const HyperRect& b = spec.state_bounds;
  const double w = b.upper[0] - b.lower[0];
  const double h = b.upper[1] - b.lower[1];
  const double extent = 600.0;
  const Canvas cv{b.lower[0], b.upper[1], extent / std::max(w, h), 20.0};
  const double width = w * cv.scale + 2 * cv.margin;
  const double height = h * cv.scale + 2 * cv.margin;

  std::ostringstream os;
  auto rect = [&](const HyperRect& r, const char* cls, const char* style) {
    os << "<rect class=\"" << cls << "\" x=\"" << fx(cv.px(r.lower[0])) << "\" y=\"" << fx(cv.py(r.upper[1]))
       << "\" width=\"" << fx((r.upper[0] - r.lower[0]) * cv.scale) << "\" height=\""
       << fx((r.upper[1] - r.lower[1]) * cv.scale) << "\" " << style << "/>\n";
  };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fx(width) << "\" height=\""
     << fx(height) << "\" viewBox=\"0 0 " << fx(width) << ' ' << fx(height) << "\">\n";
  rect(b, "frame", "fill=\"white\" stroke=\"black\" stroke-width=\"1\"");

  if (options.grid && options.winning) {
    const UniformGrid& g = *options.grid;
    std::set<std::pair<std::int64_t, std::int64_t>> cells;
    for (std::uint64_t c = 0; c < g.num_cells(); ++c) {
      if (!options.winning->winning[c]) continue;
      const CellIndex idx = g.index_of(c);
      cells.emplace(idx.multi[0], idx.multi[1]);
    }
    if (!cells.empty()) {
      os << "<path class=\"winning\" fill=\"#cfe8cf\" stroke=\"none\" d=\"";
      bool first = true;
      for (const auto& [i, j] : cells) {
        const double x = g.bounds().lower[0] + static_cast<double>(i) * g.eta()[0];
        const double y = g.bounds().lower[1] + static_cast<double>(j + 1) * g.eta()[1];
        os << (first ? "" : " ") << 'M' << fx(cv.px(x)) << ',' << fx(cv.py(y)) << 'h' << fx(g.eta()[0] * cv.scale)
           << 'v' << fx(g.eta()[1] * cv.scale) << 'h' << fx(-g.eta()[0] * cv.scale) << 'z';
        first = false;
      }
      os << "\"/>\n";
    }
  }

  for (const auto& o : spec.obstacle_rects()) rect(extend_to(o, b), "obstacle", "fill=\"#555555\" stroke=\"none\"");
  const auto targets = spec.target_rects();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const HyperRect t = extend_to(targets[i], b);
    rect(t, "target", "fill=\"none\" stroke=\"#1a7f37\" stroke-width=\"2\"");
    os << "<text class=\"target-label\" x=\"" << fx(cv.px(0.5 * (t.lower[0] + t.upper[0]))) << "\" y=\""
       << fx(cv.py(0.5 * (t.lower[1] + t.upper[1]))) << "\" text-anchor=\"middle\" dominant-baseline=\"middle\""
       << " font-size=\"14\" fill=\"#1a7f37\">" << (i + 1) << "</text>\n";
  }

  if (const Vec* p = std::get_if<Vec>(&spec.initial.value); p && p->size() >= 2) {
    os << "<circle class=\"initial\" cx=\"" << fx(cv.px((*p)[0])) << "\" cy=\"" << fx(cv.py((*p)[1]))
       << "\" r=\"5.000000\" fill=\"#0969da\"/>\n";
  } else {
    const HyperRect r = spec.initial.as_rect(b);
    os << "<polygon class=\"initial\" points=\"" << fx(cv.px(r.lower[0])) << ',' << fx(cv.py(r.lower[1])) << ' '
       << fx(cv.px(r.upper[0])) << ',' << fx(cv.py(r.lower[1])) << ' ' << fx(cv.px(r.upper[0])) << ','
       << fx(cv.py(r.upper[1])) << ' ' << fx(cv.px(r.lower[0])) << ',' << fx(cv.py(r.upper[1]))
       << "\" fill=\"none\" stroke=\"#0969da\" stroke-dasharray=\"4 2\"/>\n";
  }

  if (options.trajectory && !options.trajectory->samples.empty()) {
    const Trajectory& tr = *options.trajectory;
    os << "<polyline class=\"trajectory\" fill=\"none\" stroke=\"#cf222e\" stroke-width=\"2\" points=\"";
    bool first = true;
    auto point = [&](const Vec& s) {
      os << (first ? "" : " ") << fx(cv.px(s[0])) << ',' << fx(cv.py(s[1]));
      first = false;
    };
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
      point(tr.samples[i].state);
      if (i < tr.substeps.size())
        for (const auto& s : tr.substeps[i]) point(s);
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t n = traj.samples.empty() ? 0 : traj.samples.front().state.size();
  std::size_t m = 0;
  for (const auto& s : traj.samples) m = std::max(m, s.input.size());
  out << "time";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << (i + 1);
  for (std::size_t i = 0; i < m; ++i) out << ",u" << (i + 1);
  out << '\n';
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (const auto& s : traj.samples) {
    out << num(s.time);
    for (double v : s.state) out << ',' << num(v);
    for (std::size_t i = 0; i < m; ++i) out << ',' << (i < s.input.size() ? num(s.input[i]) : std::string());
    out << '\n';
  }
}

}  // namespace gridsynth
