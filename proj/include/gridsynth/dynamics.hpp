#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/geometry.hpp"

namespace gridsynth {

/// Continuous-time dynamics dx/dt = f(x, u).
///
/// `growth` is a row-major n x n non-negative matrix bounding the Jacobian
/// magnitude componentwise, |df_i/dx_j| <= growth[i*n + j], over the whole
/// state space and input box the field was instantiated for.
struct VectorField {
  using EvalFn = std::function<void(std::span<const double> x, std::span<const double> u, std::span<double> dx)>;

  std::string name;
  std::size_t dim_state = 0;
  std::size_t dim_input = 0;
  EvalFn eval;
  std::vector<double> growth;

  Vec operator()(std::span<const double> x, std::span<const double> u) const;
  bool growth_is_zero() const;
};

/// Bicycle kinematics: position (x1, x2), heading x3; input is rear wheel
/// velocity u1 and steering angle u2 with |u2| < pi/2.
Vec bicycle_f(std::span<const double> x, std::span<const double> u);

/// Slip angle alpha = atan(tan(u2) / 2).
double bicycle_slip_angle(double steering);

/// sup |u1| / cos(alpha_max) over the input box; the only nonzero entries
/// of the bicycle growth matrix (column 3, rows 1 and 2) take this value.
double bicycle_growth_constant(const HyperRect& input_bounds);

VectorField bicycle_field(const HyperRect& input_bounds);

/// dx/dt = u with n = m. Zero growth matrix.
VectorField integrator_field(std::size_t dim);

/// Registry lookup. Built-ins: "bicycle", "integrator". Throws
/// Error(UnknownSystem).
VectorField make_vector_field(const std::string& name, const HyperRect& input_bounds);

using FieldFactory = std::function<VectorField(const HyperRect& input_bounds)>;
void register_vector_field(const std::string& name, FieldFactory factory);
std::vector<std::string> registered_systems();

/// Fixed-step classical RK4 under a zero-order-hold input. When `wrap_grid`
/// is given, periodic coordinates are wrapped after integration. Throws
/// Error(NonFinite) if any stage value is not finite.
Vec integrate(const VectorField& f, std::span<const double> x0, std::span<const double> u, double tau,
              int substeps, const UniformGrid* wrap_grid = nullptr);

/// Like integrate() but returns the state after every substep (substeps
/// entries, the last being the tau state). No wrapping.
std::vector<Vec> integrate_path(const VectorField& f, std::span<const double> x0, std::span<const double> u,
                                double tau, int substeps);

/// exp(A t) for a row-major n x n matrix, by scaling and squaring.
std::vector<double> matrix_exp(std::span<const double> a, std::size_t n, double t);

struct BoxImage {
  Vec center;
  Vec radius;
};

/// Over-approximates the tau-image of the box center +- radius:
/// center' = integrate(center), radius' = exp(L tau) radius rounded up by one
/// ulp (no rounding when L = 0).
BoxImage propagate_box(const VectorField& f, std::span<const double> center, std::span<const double> radius,
                       std::span<const double> u, double tau, int substeps = 5);

/// Precomputed growth factors for repeated box propagation at a fixed tau
/// and substep count. `tube()` returns one box per substep; the last one is
/// the propagate_box() result. Centers are not wrapped.
class BoxPropagator {
 public:
  BoxPropagator(const VectorField& f, double tau, int substeps);

  int substeps() const { return substeps_; }
  double tau() const { return tau_; }
  std::vector<BoxImage> tube(std::span<const double> center, std::span<const double> radius,
                             std::span<const double> u) const;

 private:
  const VectorField* field_;
  double tau_;
  int substeps_;
  bool exact_;
  std::vector<std::vector<double>> factors_;  // exp(L t_j), j = 1..substeps
};

}  // namespace gridsynth
