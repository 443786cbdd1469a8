#pragma once

// Grid geometry, mesh functions and the discrete difference operators used
// by the cross-diffusion scheme.
//
// Storage is row-major with j1 as the outer index and j2 as the inner index.
// Axis 1 therefore has stride n2 and axis 2 is contiguous.

#include <cstddef>
#include <span>
#include <vector>

namespace xdiff {

struct Grid {
  int n1 = 2;
  int n2 = 2;
  double h1 = 1.0;
  double h2 = 1.0;

  Grid() = default;
  Grid(int n1_, int n2_, double h1_ = 1.0, double h2_ = 1.0);

  std::size_t size() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }
  std::size_t index(int j1, int j2) const {
    return static_cast<std::size_t>(j1) * static_cast<std::size_t>(n2) + static_cast<std::size_t>(j2);
  }
  double spacing(int axis) const;
  int count(int axis) const;
  double cell_area() const { return h1 * h2; }

  // Number of interior faces normal to `axis`.
  std::size_t face_count(int axis) const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& grid, double fill = 0.0);
  ScalarField(const Grid& grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double operator()(int j1, int j2) const { return values_[grid_.index(j1, j2)]; }
  double& operator()(int j1, int j2) { return values_[grid_.index(j1, j2)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

  bool all_finite() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

// Values at the interior faces j + e_k/2 normal to one axis.
// Axis 1 faces form an (n1-1) x n2 array, axis 2 faces an n1 x (n2-1) array,
// both row-major.
class HalfPointField {
 public:
  HalfPointField() = default;
  HalfPointField(const Grid& grid, int axis, double fill = 0.0);
  HalfPointField(const Grid& grid, int axis, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int axis() const { return axis_; }
  int rows() const { return axis_ == 1 ? grid_.n1 - 1 : grid_.n1; }
  int cols() const { return axis_ == 1 ? grid_.n2 : grid_.n2 - 1; }
  std::size_t size() const { return values_.size(); }

  // Face between node (j1, j2) and its neighbour along axis().
  double operator()(int j1, int j2) const { return values_[static_cast<std::size_t>(j1) * cols() + j2]; }
  double& operator()(int j1, int j2) { return values_[static_cast<std::size_t>(j1) * cols() + j2]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const double* data() const { return values_.data(); }
  double* data() { return values_.data(); }

 private:
  Grid grid_;
  int axis_ = 1;
  std::vector<double> values_;
};

struct VectorField {
  ScalarField u;
  ScalarField v;

  VectorField() = default;
  VectorField(ScalarField u_, ScalarField v_);
  explicit VectorField(const Grid& grid) : u(grid), v(grid) {}

  const Grid& grid() const { return u.grid(); }
  bool all_finite() const { return u.all_finite() && v.all_finite(); }

  // The concatenated vector w = (u, v) of length 2 n1 n2.
  std::vector<double> concatenated() const;
  static VectorField from_concatenated(const Grid& grid, std::span<const double> w);
};

// (f[j + e_k] - f[j]) / h_k on every interior face.
HalfPointField forward_diff(const ScalarField& f, int axis);

// Node divergence of a face flux, (F[j+1/2] - F[j-1/2]) / h_k. Boundary nodes
// use the reflected ghost flux F[-1/2] = -F[1/2] (homogeneous Neumann), so the
// boundary value is 2 F[1/2] / h_k and -2 F[n-3/2] / h_k at the far end.
ScalarField backward_div(const HalfPointField& flux);

// Pointwise product of two face fields on the same axis.
HalfPointField operator*(const HalfPointField& a, const HalfPointField& b);

// Trapezoid-weighted inner products and norms.
double inner_h(const ScalarField& a, const ScalarField& b);
double norm_h(const ScalarField& f);
double norm_h(const VectorField& w);
double inner_h_star(const HalfPointField& a, const HalfPointField& b);
double norm_h_star(const HalfPointField& f);
// Same, rejecting a face field laid out for the other axis.
double norm_h_star(const HalfPointField& f, int axis);

// Quadrature weight of node (j1, j2) in (.,.)_h.
double node_weight(const Grid& grid, int j1, int j2);

}  // namespace xdiff
