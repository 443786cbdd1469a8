#include "xdiff/field.hpp"

#include <cmath>
#include <string>

#include "xdiff/error.hpp"

namespace xdiff {

namespace {

void check_axis(int axis) {
  if (axis != 1 && axis != 2) throw InvalidArgument("axis must be 1 or 2, got " + std::to_string(axis));
}

// Boundary nodes carry half weight along each axis.
double edge_factor(int j, int n) { return (j == 0 || j == n - 1) ? 0.5 : 1.0; }

}  // namespace

Grid::Grid(int n1_, int n2_, double h1_, double h2_) : n1(n1_), n2(n2_), h1(h1_), h2(h2_) {
  if (n1 < 2 || n2 < 2) throw InvalidArgument("grid needs at least 2 nodes per axis");
  if (!(h1 > 0.0) || !(h2 > 0.0)) throw InvalidArgument("grid spacings must be positive");
}

double Grid::spacing(int axis) const {
  check_axis(axis);
  return axis == 1 ? h1 : h2;
}

int Grid::count(int axis) const {
  check_axis(axis);
  return axis == 1 ? n1 : n2;
}

std::size_t Grid::face_count(int axis) const {
  check_axis(axis);
  return axis == 1 ? static_cast<std::size_t>(n1 - 1) * n2 : static_cast<std::size_t>(n1) * (n2 - 1);
}

ScalarField::ScalarField(const Grid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw InvalidArgument("scalar field length does not match grid");
}

bool ScalarField::all_finite() const {
  for (double x : values_)
    if (!std::isfinite(x)) return false;
  return true;
}

HalfPointField::HalfPointField(const Grid& grid, int axis, double fill)
    : grid_(grid), axis_(axis), values_(grid.face_count(axis), fill) {}

HalfPointField::HalfPointField(const Grid& grid, int axis, std::vector<double> values)
    : grid_(grid), axis_(axis), values_(std::move(values)) {
  if (values_.size() != grid_.face_count(axis)) throw InvalidArgument("face field length does not match grid");
}

VectorField::VectorField(ScalarField u_, ScalarField v_) : u(std::move(u_)), v(std::move(v_)) {
  if (!(u.grid() == v.grid())) throw InvalidArgument("vector field components live on different grids");
}

std::vector<double> VectorField::concatenated() const {
  std::vector<double> w(u.values().begin(), u.values().end());
  w.insert(w.end(), v.values().begin(), v.values().end());
  return w;
}

VectorField VectorField::from_concatenated(const Grid& grid, std::span<const double> w) {
  const std::size_t n = grid.size();
  if (w.size() != 2 * n) throw InvalidArgument("concatenated vector has wrong length");
  return VectorField(ScalarField(grid, std::vector<double>(w.begin(), w.begin() + n)),
                     ScalarField(grid, std::vector<double>(w.begin() + n, w.end())));
}

HalfPointField forward_diff(const ScalarField& f, int axis) {
  const Grid& g = f.grid();
  HalfPointField out(g, axis);
  const double inv_h = 1.0 / g.spacing(axis);
  for (int j1 = 0; j1 < out.rows(); ++j1)
    for (int j2 = 0; j2 < out.cols(); ++j2) {
      const double next = axis == 1 ? f(j1 + 1, j2) : f(j1, j2 + 1);
      out(j1, j2) = (next - f(j1, j2)) * inv_h;
    }
  return out;
}

ScalarField backward_div(const HalfPointField& flux) {
  const Grid& g = flux.grid();
  const int axis = flux.axis();
  const double inv_h = 1.0 / g.spacing(axis);
  const int n = g.count(axis);
  ScalarField out(g);
  for (int j1 = 0; j1 < g.n1; ++j1)
    for (int j2 = 0; j2 < g.n2; ++j2) {
      const int j = axis == 1 ? j1 : j2;
      // Face j+1/2 is stored at the node index j, face j-1/2 at j-1.
      auto face = [&](int jj) { return axis == 1 ? flux(jj, j2) : flux(j1, jj); };
      double value;
      if (j == 0)
        value = 2.0 * face(0);
      else if (j == n - 1)
        value = -2.0 * face(n - 2);
      else
        value = face(j) - face(j - 1);
      out(j1, j2) = value * inv_h;
    }
  return out;
}

HalfPointField operator*(const HalfPointField& a, const HalfPointField& b) {
  if (a.axis() != b.axis() || !(a.grid() == b.grid())) throw InvalidArgument("face fields have different layouts");
  HalfPointField out(a.grid(), a.axis());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double node_weight(const Grid& grid, int j1, int j2) {
  return grid.cell_area() * edge_factor(j1, grid.n1) * edge_factor(j2, grid.n2);
}

double inner_h(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("inner_h: grid mismatch");
  const Grid& g = a.grid();
  double sum = 0.0;
  for (int j1 = 0; j1 < g.n1; ++j1)
    for (int j2 = 0; j2 < g.n2; ++j2) sum += node_weight(g, j1, j2) * a(j1, j2) * b(j1, j2);
  return sum;
}

double norm_h(const ScalarField& f) { return std::sqrt(inner_h(f, f)); }

double norm_h(const VectorField& w) { return std::sqrt(inner_h(w.u, w.u) + inner_h(w.v, w.v)); }

double inner_h_star(const HalfPointField& a, const HalfPointField& b) {
  if (a.axis() != b.axis() || !(a.grid() == b.grid())) throw InvalidArgument("inner_h_star: layout mismatch");
  const Grid& g = a.grid();
  double sum = 0.0;
  for (int j1 = 0; j1 < a.rows(); ++j1)
    for (int j2 = 0; j2 < a.cols(); ++j2) {
      // Transverse trapezoid weight: faces on the outer rows belong to one cell.
      const double w = a.axis() == 1 ? edge_factor(j2, g.n2) : edge_factor(j1, g.n1);
      sum += g.cell_area() * w * a(j1, j2) * b(j1, j2);
    }
  return sum;
}

double norm_h_star(const HalfPointField& f) { return std::sqrt(inner_h_star(f, f)); }

double norm_h_star(const HalfPointField& f, int axis) {
  check_axis(axis);
  if (f.axis() != axis) throw InvalidArgument("norm_h_star: face field is laid out for the other axis");
  return norm_h_star(f);
}

}  // namespace xdiff
