#include "gridsynth/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "gridsynth/error.hpp"

namespace gridsynth {

Vec VectorField::operator()(std::span<const double> x, std::span<const double> u) const {
  Vec dx(dim_state);
  eval(x, u, dx);
  return dx;
}

bool VectorField::growth_is_zero() const {
  return std::all_of(growth.begin(), growth.end(), [](double v) { return v == 0.0; });
}

// ------------------------------------------------------------------ bicycle

double bicycle_slip_angle(double steering) { return std::atan(std::tan(steering) / 2.0); }

Vec bicycle_f(std::span<const double> x, std::span<const double> u) {
  const double alpha = bicycle_slip_angle(u[1]);
  const double k = u[0] / std::cos(alpha);
  return {k * std::cos(alpha + x[2]), k * std::sin(alpha + x[2]), u[0] * std::tan(u[1])};
}

double bicycle_growth_constant(const HyperRect& input_bounds) {
  if (input_bounds.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "bicycle expects a 2-D input box");
  const double speed = std::max(std::abs(input_bounds.lower[0]), std::abs(input_bounds.upper[0]));
  const double steer = std::max(std::abs(input_bounds.lower[1]), std::abs(input_bounds.upper[1]));
  if (steer >= std::numbers::pi / 2)
    throw Error(ErrorCode::GeometryError, "bicycle steering bound must stay below pi/2");
  // |d f1/d x3| = |u1 sin(alpha + x3)| / cos(alpha), maximal at the widest
  // steering angle; f2 is symmetric and f3 does not depend on x.
  return speed / std::cos(bicycle_slip_angle(steer));
}

VectorField bicycle_field(const HyperRect& input_bounds) {
  const double c = bicycle_growth_constant(input_bounds);
  VectorField f;
  f.name = "bicycle";
  f.dim_state = 3;
  f.dim_input = 2;
  f.eval = [](std::span<const double> x, std::span<const double> u, std::span<double> dx) {
    const double alpha = std::atan(std::tan(u[1]) / 2.0);
    const double k = u[0] / std::cos(alpha);
    dx[0] = k * std::cos(alpha + x[2]);
    dx[1] = k * std::sin(alpha + x[2]);
    dx[2] = u[0] * std::tan(u[1]);
  };
  f.growth = {0, 0, c,  //
              0, 0, c,  //
              0, 0, 0};
  return f;
}

VectorField integrator_field(std::size_t dim) {
  VectorField f;
  f.name = "integrator";
  f.dim_state = dim;
  f.dim_input = dim;
  f.eval = [](std::span<const double>, std::span<const double> u, std::span<double> dx) {
    std::copy(u.begin(), u.end(), dx.begin());
  };
  f.growth.assign(dim * dim, 0.0);
  return f;
}

// ----------------------------------------------------------------- registry

namespace {

struct Registry {
  std::mutex mutex;
  std::map<std::string, FieldFactory> factories{
      {"bicycle", [](const HyperRect& u) { return bicycle_field(u); }},
      {"integrator", [](const HyperRect& u) { return integrator_field(u.dim()); }},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

VectorField make_vector_field(const std::string& name, const HyperRect& input_bounds) {
  FieldFactory factory;
  {
    std::lock_guard lock(registry().mutex);
    auto it = registry().factories.find(name);
    if (it == registry().factories.end())
      throw Error(ErrorCode::UnknownSystem, "no vector field registered under \"" + name + "\"");
    factory = it->second;
  }
  return factory(input_bounds);
}

void register_vector_field(const std::string& name, FieldFactory factory) {
  std::lock_guard lock(registry().mutex);
  registry().factories[name] = std::move(factory);
}

std::vector<std::string> registered_systems() {
  std::lock_guard lock(registry().mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : registry().factories) names.push_back(name);
  return names;
}

// -------------------------------------------------------------- integration

namespace {

void check_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "non-finite value during integration");
}

void rk4_step(const VectorField& f, Vec& x, std::span<const double> u, double h, Vec& k1, Vec& k2, Vec& k3,
              Vec& k4, Vec& tmp) {
  const std::size_t n = x.size();
  f.eval(x, u, k1);
  check_finite(k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  f.eval(tmp, u, k2);
  check_finite(k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  f.eval(tmp, u, k3);
  check_finite(k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  f.eval(tmp, u, k4);
  check_finite(k4);
  for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  check_finite(x);
}

void check_args(const VectorField& f, std::span<const double> x0, std::span<const double> u, double tau,
                int substeps) {
  if (x0.size() != f.dim_state || u.size() != f.dim_input)
    throw Error(ErrorCode::DimensionMismatch, "state or input dimension disagrees with vector field " + f.name);
  if (!(tau > 0.0)) throw Error(ErrorCode::GeometryError, "tau must be positive");
  if (substeps < 1) throw Error(ErrorCode::GeometryError, "substeps must be positive");
}

}  // namespace

std::vector<Vec> integrate_path(const VectorField& f, std::span<const double> x0, std::span<const double> u,
                                double tau, int substeps) {
  check_args(f, x0, u, tau, substeps);
  const std::size_t n = f.dim_state;
  Vec x(x0.begin(), x0.end()), k1(n), k2(n), k3(n), k4(n), tmp(n);
  check_finite(x);
  const double h = tau / substeps;
  std::vector<Vec> path;
  path.reserve(static_cast<std::size_t>(substeps));
  for (int s = 0; s < substeps; ++s) {
    rk4_step(f, x, u, h, k1, k2, k3, k4, tmp);
    path.push_back(x);
  }
  return path;
}

Vec integrate(const VectorField& f, std::span<const double> x0, std::span<const double> u, double tau,
              int substeps, const UniformGrid* wrap_grid) {
  check_args(f, x0, u, tau, substeps);
  const std::size_t n = f.dim_state;
  Vec x(x0.begin(), x0.end()), k1(n), k2(n), k3(n), k4(n), tmp(n);
  check_finite(x);
  const double h = tau / substeps;
  for (int s = 0; s < substeps; ++s) rk4_step(f, x, u, h, k1, k2, k3, k4, tmp);
  if (wrap_grid) wrap_grid->wrap(x);
  return x;
}

// ----------------------------------------------------------- growth bounds

std::vector<double> matrix_exp(std::span<const double> a, std::size_t n, double t) {
  if (a.size() != n * n) throw Error(ErrorCode::DimensionMismatch, "matrix_exp expects an n x n matrix");
  double norm = 0.0;  // max row sum of |A t|
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(a[i * n + j] * t);
    norm = std::max(norm, row);
  }
  int squarings = 0;
  double scale = t;
  while (norm > 0.5) {
    norm /= 2.0;
    scale /= 2.0;
    ++squarings;
  }

  auto multiply = [n](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const double xik = x[i * n + k];
        if (xik == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) z[i * n + j] += xik * y[k * n + j];
      }
    return z;
  };

  std::vector<double> scaled(n * n);
  for (std::size_t i = 0; i < n * n; ++i) scaled[i] = a[i] * scale;
  std::vector<double> result(n * n, 0.0), term(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) result[i * n + i] = term[i * n + i] = 1.0;
  // ||A||/2^s <= 1/2, so 24 Taylor terms are far below double precision.
  for (int k = 1; k <= 24; ++k) {
    term = multiply(term, scaled);
    const double inv = 1.0 / k;
    bool negligible = true;
    for (std::size_t i = 0; i < n * n; ++i) {
      term[i] *= inv;
      result[i] += term[i];
      if (term[i] != 0.0) negligible = false;
    }
    if (negligible) break;
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

BoxPropagator::BoxPropagator(const VectorField& f, double tau, int substeps)
    : field_(&f), tau_(tau), substeps_(substeps), exact_(f.growth_is_zero()) {
  if (!(tau > 0.0) || substeps < 1) throw Error(ErrorCode::GeometryError, "tau and substeps must be positive");
  if (f.growth.size() != f.dim_state * f.dim_state)
    throw Error(ErrorCode::DimensionMismatch, "growth matrix must be n x n");
  for (double g : f.growth)
    if (!(g >= 0.0)) throw Error(ErrorCode::GeometryError, "growth matrix entries must be non-negative");
  for (int j = 1; j <= substeps; ++j)
    factors_.push_back(matrix_exp(f.growth, f.dim_state, tau * j / substeps));
}

std::vector<BoxImage> BoxPropagator::tube(std::span<const double> center, std::span<const double> radius,
                                          std::span<const double> u) const {
  const std::size_t n = field_->dim_state;
  if (radius.size() != n) throw Error(ErrorCode::DimensionMismatch, "radius dimension disagrees with field");
  for (double r : radius)
    if (!(r >= 0.0)) throw Error(ErrorCode::GeometryError, "radius must be non-negative");
  std::vector<Vec> path = integrate_path(*field_, center, u, tau_, substeps_);
  std::vector<BoxImage> out;
  out.reserve(path.size());
  for (std::size_t j = 0; j < path.size(); ++j) {
    const auto& e = factors_[j];
    Vec r(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += e[i * n + k] * radius[k];
      if (!exact_ && acc > 0.0) acc = std::nextafter(acc, std::numeric_limits<double>::infinity());
      r[i] = acc;
    }
    check_finite(r);
    out.push_back({std::move(path[j]), std::move(r)});
  }
  return out;
}

BoxImage propagate_box(const VectorField& f, std::span<const double> center, std::span<const double> radius,
                       std::span<const double> u, double tau, int substeps) {
  BoxPropagator p(f, tau, substeps);
  auto boxes = p.tube(center, radius, u);
  return std::move(boxes.back());
}

}  // namespace gridsynth
