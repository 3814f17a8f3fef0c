#include "gridsynth/spec_format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridsynth/error.hpp"

namespace gridsynth {

using json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kTopLevelKeys = {"system",  "state_bounds", "periodic",  "input_bounds",
                                             "eta_x",   "eta_u",        "tau",       "obstacles",
                                             "targets", "initial",      "clearance"};

void require_keys(const json& obj, const std::string& path, const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!required.count(key) && !optional.count(key)) throw SchemaError(path + "/" + key, "unknown key");
  for (const auto& key : required)
    if (!obj.contains(key)) throw SchemaError(path + "/" + key, "missing required key");
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path, "expected a finite number");
  return d;
}

Vec get_vec(const json& v, const std::string& path, std::size_t expected_dim = 0) {
  if (!v.is_array() || v.empty()) throw SchemaError(path, "expected a non-empty array of numbers");
  Vec out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "/" + std::to_string(i)));
  if (expected_dim && out.size() != expected_dim)
    throw SchemaError(path, "expected " + std::to_string(expected_dim) + " components, got " +
                                std::to_string(out.size()));
  return out;
}

HyperRect get_box(const json& v, const std::string& path) {
  require_keys(v, path, {"lower", "upper"});
  Vec lo = get_vec(v["lower"], path + "/lower");
  Vec hi = get_vec(v["upper"], path + "/upper", lo.size());
  try {
    return HyperRect(std::move(lo), std::move(hi));
  } catch (const Error& e) {
    throw Error(ErrorCode::GeometryError, path + ": " + e.what());
  }
}

RectEncoding get_encoding(const json& v, const std::string& path) {
  if (!v.is_object() || !v.contains("kind") || !v["kind"].is_string())
    throw SchemaError(path + "/kind", "expected a string tag \"vertices4\", \"diagonal\" or \"center_sides\"");
  const std::string kind = v["kind"].get<std::string>();
  if (kind == "vertices4") {
    require_keys(v, path, {"kind", "vertices"});
    const json& vs = v["vertices"];
    if (!vs.is_array() || vs.size() != 4) throw SchemaError(path + "/vertices", "expected exactly four vertices");
    FourVertices e;
    for (std::size_t i = 0; i < 4; ++i) e.vertices.push_back(get_vec(vs[i], path + "/vertices/" + std::to_string(i), 2));
    return e;
  }
  if (kind == "diagonal") {
    require_keys(v, path, {"kind", "corners"});
    const json& cs = v["corners"];
    if (!cs.is_array() || cs.size() != 2) throw SchemaError(path + "/corners", "expected exactly two corners");
    Vec a = get_vec(cs[0], path + "/corners/0");
    Vec b = get_vec(cs[1], path + "/corners/1", a.size());
    return TwoDiagonalVertices{std::move(a), std::move(b)};
  }
  if (kind == "center_sides") {
    require_keys(v, path, {"kind", "center", "sides"});
    Vec c = get_vec(v["center"], path + "/center");
    Vec s = get_vec(v["sides"], path + "/sides", c.size());
    return CenterAndSides{std::move(c), std::move(s)};
  }
  throw SchemaError(path + "/kind", "unknown rectangle kind \"" + kind + "\"");
}

HyperRect checked_rect(const RectEncoding& e, const HyperRect& bounds, const std::string& what) {
  HyperRect r;
  try {
    r = rect_from_encoding(e);
  } catch (const Error& err) {
    throw Error(err.code(), what + ": " + err.what());
  }
  if (r.dim() > bounds.dim())
    throw Error(ErrorCode::GeometryError, what + " has more dimensions than the state space");
  if (!bounds.contains(r))
    throw Error(ErrorCode::GeometryError, what + " lies outside state_bounds");
  return r;
}

int line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (double d : v) a.push_back(d);
  return a;
}

json box_json(const HyperRect& r) {
  json o;
  o["lower"] = vec_json(r.lower);
  o["upper"] = vec_json(r.upper);
  return o;
}

json encoding_json(const RectEncoding& e) {
  json o;
  std::visit(
      [&](const auto& enc) {
        using T = std::decay_t<decltype(enc)>;
        if constexpr (std::is_same_v<T, FourVertices>) {
          o["kind"] = "vertices4";
          json vs = json::array();
          for (const auto& v : enc.vertices) vs.push_back(vec_json(v));
          o["vertices"] = vs;
        } else if constexpr (std::is_same_v<T, TwoDiagonalVertices>) {
          o["kind"] = "diagonal";
          o["corners"] = json::array({vec_json(enc.a), vec_json(enc.b)});
        } else {
          o["kind"] = "center_sides";
          o["center"] = vec_json(enc.center);
          o["sides"] = vec_json(enc.sides);
        }
      },
      e);
  return o;
}

bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool approx(const Vec& a, const Vec& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!approx(a[i], b[i], tol)) return false;
  return true;
}

double rect_distance(const HyperRect& a, const HyperRect& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    d = std::max(d, std::abs(a.lower[i] - b.lower[i]));
    d = std::max(d, std::abs(a.upper[i] - b.upper[i]));
  }
  return d;
}

std::string rect_str(const HyperRect& r) {
  std::ostringstream os;
  os.precision(10);
  for (std::size_t i = 0; i < r.dim(); ++i) os << (i ? " x " : "") << "[" << r.lower[i] << ", " << r.upper[i] << "]";
  return os.str();
}

}  // namespace

HyperRect InitialSet::as_rect(const HyperRect& state_bounds) const {
  if (const Vec* p = std::get_if<Vec>(&value)) return extend_to(HyperRect(*p, *p), state_bounds);
  return extend_to(std::get<HyperRect>(value), state_bounds);
}

std::vector<HyperRect> ProblemSpec::obstacle_rects() const {
  std::vector<HyperRect> out;
  for (const auto& e : obstacles) out.push_back(rect_from_encoding(e));
  return out;
}

std::vector<HyperRect> ProblemSpec::target_rects() const {
  std::vector<HyperRect> out;
  for (const auto& e : targets) out.push_back(rect_from_encoding(e));
  return out;
}

ProblemSpec parse_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what(), line_of(text, e.byte));
  }
  require_keys(doc, "", kTopLevelKeys);

  ProblemSpec spec;
  if (!doc["system"].is_string() || doc["system"].get<std::string>().empty())
    throw SchemaError("/system", "expected a non-empty string");
  spec.system = doc["system"].get<std::string>();
  spec.state_bounds = get_box(doc["state_bounds"], "/state_bounds");
  const std::size_t n = spec.state_bounds.dim();

  const json& per = doc["periodic"];
  if (!per.is_array() || per.size() != n)
    throw SchemaError("/periodic", "expected " + std::to_string(n) + " booleans");
  for (std::size_t i = 0; i < n; ++i) {
    if (!per[i].is_boolean()) throw SchemaError("/periodic/" + std::to_string(i), "expected a boolean");
    spec.periodic.push_back(per[i].get<bool>());
  }

  spec.input_bounds = get_box(doc["input_bounds"], "/input_bounds");
  spec.eta_x = get_vec(doc["eta_x"], "/eta_x", n);
  spec.eta_u = get_vec(doc["eta_u"], "/eta_u", spec.input_bounds.dim());
  for (std::size_t i = 0; i < spec.eta_x.size(); ++i)
    if (!(spec.eta_x[i] > 0)) throw SchemaError("/eta_x/" + std::to_string(i), "must be positive");
  for (std::size_t i = 0; i < spec.eta_u.size(); ++i)
    if (!(spec.eta_u[i] > 0)) throw SchemaError("/eta_u/" + std::to_string(i), "must be positive");
  spec.tau = get_number(doc["tau"], "/tau");
  if (!(spec.tau > 0)) throw SchemaError("/tau", "must be positive");

  const json& obs = doc["obstacles"];
  if (!obs.is_array()) throw SchemaError("/obstacles", "expected an array");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string path = "/obstacles/" + std::to_string(i);
    spec.obstacles.push_back(get_encoding(obs[i], path));
    checked_rect(spec.obstacles.back(), spec.state_bounds, "obstacle " + std::to_string(i));
  }

  const json& tgs = doc["targets"];
  if (!tgs.is_array() || tgs.empty()) throw SchemaError("/targets", "expected a non-empty array");
  for (std::size_t i = 0; i < tgs.size(); ++i) {
    const std::string path = "/targets/" + std::to_string(i);
    spec.targets.push_back(get_encoding(tgs[i], path));
    checked_rect(spec.targets.back(), spec.state_bounds, "target " + std::to_string(i));
  }

  const json& init = doc["initial"];
  if (!init.is_object() || !init.contains("kind") || !init["kind"].is_string())
    throw SchemaError("/initial/kind", "expected a string tag \"point\" or \"rect\"");
  const std::string ikind = init["kind"].get<std::string>();
  if (ikind == "point") {
    require_keys(init, "/initial", {"kind", "point"});
    spec.initial.value = get_vec(init["point"], "/initial/point");
  } else if (ikind == "rect") {
    require_keys(init, "/initial", {"kind", "lower", "upper"});
    json box;
    box["lower"] = init["lower"];
    box["upper"] = init["upper"];
    spec.initial.value = get_box(box, "/initial");
  } else {
    throw SchemaError("/initial/kind", "unknown initial kind \"" + ikind + "\"");
  }
  {
    const HyperRect r = std::visit(
        [](const auto& v) -> HyperRect {
          if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Vec>) return HyperRect(v, v);
          else return v;
        },
        spec.initial.value);
    if (r.dim() > n) throw Error(ErrorCode::GeometryError, "initial set has more dimensions than the state space");
    if (!spec.state_bounds.contains(r)) throw Error(ErrorCode::GeometryError, "initial set lies outside state_bounds");
  }

  spec.clearance = get_number(doc["clearance"], "/clearance");
  if (spec.clearance < 0) throw SchemaError("/clearance", "must be non-negative");
  return spec;
}

ProblemSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open spec file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

std::string serialize_spec(const ProblemSpec& spec) {
  json doc;
  doc["system"] = spec.system;
  doc["state_bounds"] = box_json(spec.state_bounds);
  json per = json::array();
  for (bool b : spec.periodic) per.push_back(b);
  doc["periodic"] = per;
  doc["input_bounds"] = box_json(spec.input_bounds);
  doc["eta_x"] = vec_json(spec.eta_x);
  doc["eta_u"] = vec_json(spec.eta_u);
  doc["tau"] = spec.tau;
  json obs = json::array();
  for (const auto& e : spec.obstacles) obs.push_back(encoding_json(e));
  doc["obstacles"] = obs;
  json tgs = json::array();
  for (const auto& e : spec.targets) tgs.push_back(encoding_json(e));
  doc["targets"] = tgs;
  json init;
  if (const Vec* p = std::get_if<Vec>(&spec.initial.value)) {
    init["kind"] = "point";
    init["point"] = vec_json(*p);
  } else {
    const auto& r = std::get<HyperRect>(spec.initial.value);
    init["kind"] = "rect";
    init["lower"] = vec_json(r.lower);
    init["upper"] = vec_json(r.upper);
  }
  doc["initial"] = init;
  doc["clearance"] = spec.clearance;
  return doc.dump(2) + "\n";
}

ProblemSpec canonicalize(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  std::vector<HyperRect> obs = spec.obstacle_rects();
  std::sort(obs.begin(), obs.end(), [](const HyperRect& a, const HyperRect& b) {
    return std::tie(a.lower, a.upper) < std::tie(b.lower, b.upper);
  });
  out.obstacles.clear();
  out.inflated_obstacles.clear();
  for (const auto& r : obs) {
    out.obstacles.push_back(TwoDiagonalVertices{r.lower, r.upper});
    HyperRect clip(Vec(spec.state_bounds.lower.begin(), spec.state_bounds.lower.begin() + static_cast<std::ptrdiff_t>(r.dim())),
                   Vec(spec.state_bounds.upper.begin(), spec.state_bounds.upper.begin() + static_cast<std::ptrdiff_t>(r.dim())));
    out.inflated_obstacles.push_back(spec.clearance > 0 ? inflate(r, spec.clearance, kPositionDims, clip) : r);
  }
  out.targets.clear();
  for (const auto& r : spec.target_rects()) out.targets.push_back(TwoDiagonalVertices{r.lower, r.upper});
  return out;
}

// --------------------------------------------------------------------- diff

const char* to_string(MismatchCategory c) {
  switch (c) {
    case MismatchCategory::MissingObstacle: return "missing_obstacle";
    case MismatchCategory::ExtraObstacle: return "extra_obstacle";
    case MismatchCategory::GeometryMismatch: return "geometry_mismatch";
    case MismatchCategory::WrongTarget: return "wrong_target";
    case MismatchCategory::WrongTargetOrder: return "wrong_target_order";
    case MismatchCategory::WrongInitial: return "wrong_initial";
    case MismatchCategory::WrongBounds: return "wrong_bounds";
    case MismatchCategory::WrongClearance: return "wrong_clearance";
  }
  return "unknown";
}

std::size_t MismatchReport::count(MismatchCategory c) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [c](const MismatchEntry& e) { return e.category == c; }));
}

std::string MismatchReport::to_text() const {
  std::string out;
  for (const auto& e : entries) out += std::string(to_string(e.category)) + ": " + e.detail + "\n";
  return out;
}

MismatchReport semantic_diff(const ProblemSpec& reference, const ProblemSpec& candidate, double tol) {
  if (reference.state_dim() != candidate.state_dim())
    throw Error(ErrorCode::DimensionMismatch, "reference has " + std::to_string(reference.state_dim()) +
                                                  " state dimensions, candidate has " +
                                                  std::to_string(candidate.state_dim()));
  const ProblemSpec ref = canonicalize(reference);
  const ProblemSpec cand = canonicalize(candidate);
  const HyperRect& bounds = ref.state_bounds;
  MismatchReport report;
  auto add = [&](MismatchCategory c, std::string detail, std::optional<HyperRect> exp = std::nullopt,
                 std::optional<HyperRect> act = std::nullopt) {
    report.entries.push_back({c, std::move(detail), std::move(exp), std::move(act)});
  };

  if (ref.system != cand.system)
    add(MismatchCategory::WrongBounds, "system is \"" + cand.system + "\", expected \"" + ref.system + "\"");
  if (!approx(ref.state_bounds.lower, cand.state_bounds.lower, tol) ||
      !approx(ref.state_bounds.upper, cand.state_bounds.upper, tol))
    add(MismatchCategory::WrongBounds,
        "state bounds are " + rect_str(cand.state_bounds) + ", expected " + rect_str(ref.state_bounds),
        ref.state_bounds, cand.state_bounds);
  if (ref.periodic != cand.periodic) add(MismatchCategory::WrongBounds, "periodic dimensions differ");
  if (!approx(ref.input_bounds.lower, cand.input_bounds.lower, tol) ||
      !approx(ref.input_bounds.upper, cand.input_bounds.upper, tol))
    add(MismatchCategory::WrongBounds,
        "input bounds are " + rect_str(cand.input_bounds) + ", expected " + rect_str(ref.input_bounds),
        ref.input_bounds, cand.input_bounds);
  if (!approx(ref.eta_x, cand.eta_x, tol)) add(MismatchCategory::WrongBounds, "state quantization eta_x differs");
  if (!approx(ref.eta_u, cand.eta_u, tol)) add(MismatchCategory::WrongBounds, "input quantization eta_u differs");
  if (!approx(ref.tau, cand.tau, tol)) add(MismatchCategory::WrongBounds, "sampling period tau differs");

  // Obstacles: repeatedly pair the globally closest remaining (ref, cand).
  std::vector<HyperRect> ro, co;
  for (const auto& r : ref.obstacle_rects()) ro.push_back(extend_to(r, bounds));
  for (const auto& r : cand.obstacle_rects()) co.push_back(extend_to(r, bounds));
  std::vector<bool> ru(ro.size(), false), cu(co.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < std::min(ro.size(), co.size()); ++k) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < ro.size(); ++i) {
      if (ru[i]) continue;
      for (std::size_t j = 0; j < co.size(); ++j) {
        if (cu[j]) continue;
        const double d = rect_distance(ro[i], co[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    ru[bi] = cu[bj] = true;
    pairs.emplace_back(bi, bj);
  }
  std::sort(pairs.begin(), pairs.end());
  for (const auto& [i, j] : pairs)
    if (rect_distance(ro[i], co[j]) > tol)
      add(MismatchCategory::GeometryMismatch,
          "obstacle " + rect_str(co[j]) + " should be " + rect_str(ro[i]), ro[i], co[j]);
  for (std::size_t i = 0; i < ro.size(); ++i)
    if (!ru[i]) add(MismatchCategory::MissingObstacle, "obstacle " + rect_str(ro[i]) + " is missing", ro[i]);
  for (std::size_t j = 0; j < co.size(); ++j)
    if (!cu[j]) add(MismatchCategory::ExtraObstacle, "obstacle " + rect_str(co[j]) + " does not exist", std::nullopt, co[j]);

  // Targets: order matters.
  std::vector<HyperRect> rt, ct;
  for (const auto& r : ref.target_rects()) rt.push_back(extend_to(r, bounds));
  for (const auto& r : cand.target_rects()) ct.push_back(extend_to(r, bounds));
  bool same_order = rt.size() == ct.size();
  for (std::size_t i = 0; same_order && i < rt.size(); ++i) same_order = rect_distance(rt[i], ct[i]) <= tol;
  if (!same_order) {
    bool permutation = rt.size() == ct.size();
    std::vector<bool> used(ct.size(), false);
    for (std::size_t i = 0; permutation && i < rt.size(); ++i) {
      bool found = false;
      for (std::size_t j = 0; j < ct.size() && !found; ++j)
        if (!used[j] && rect_distance(rt[i], ct[j]) <= tol) used[j] = found = true;
      permutation = found;
    }
    if (permutation) {
      add(MismatchCategory::WrongTargetOrder, "targets are visited in the wrong order");
    } else {
      for (std::size_t i = 0; i < std::max(rt.size(), ct.size()); ++i) {
        if (i >= ct.size())
          add(MismatchCategory::WrongTarget, "target " + std::to_string(i + 1) + " " + rect_str(rt[i]) + " is missing", rt[i]);
        else if (i >= rt.size())
          add(MismatchCategory::WrongTarget, "target " + std::to_string(i + 1) + " " + rect_str(ct[i]) + " does not exist",
              std::nullopt, ct[i]);
        else if (rect_distance(rt[i], ct[i]) > tol)
          add(MismatchCategory::WrongTarget,
              "target " + std::to_string(i + 1) + " is " + rect_str(ct[i]) + ", expected " + rect_str(rt[i]), rt[i], ct[i]);
      }
    }
  }

  const HyperRect ri = ref.initial.as_rect(bounds);
  const HyperRect ci = cand.initial.as_rect(bounds);
  if (rect_distance(ri, ci) > tol)
    add(MismatchCategory::WrongInitial, "initial set is " + rect_str(ci) + ", expected " + rect_str(ri), ri, ci);

  if (!approx(ref.clearance, cand.clearance, tol)) {
    std::ostringstream os;
    os << "clearance is " << cand.clearance << ", expected " << ref.clearance;
    add(MismatchCategory::WrongClearance, os.str());
  }
  return report;
}

}  // namespace gridsynth
