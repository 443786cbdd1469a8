#pragma once

// Time stepping for the cross-diffusion system with reaction
//
//   u_t = div(d1 grad u + d2 grad v) - lambda (u - u0)
//   v_t = div(d3 grad u + d4 grad v)
//
// with homogeneous Neumann boundaries. Coefficients are evaluated at the
// current state W^m and averaged onto faces. theta = 0 gives the explicit
// scheme, theta = 1 the semi-implicit one (diffusion and reaction at m+1,
// coefficients still frozen at m).

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "xdiff/field.hpp"
#include "xdiff/influence.hpp"

namespace xdiff {

struct SchemeConfig {
  double dt = 0.1;
  int steps = 10;
  int theta = 1;
  double lambda = 0.0;
  Grid grid;

  void validate() const;
  double stop_time() const { return dt * steps; }
};

struct StepTrace {
  std::vector<VectorField> states;  // w^0 .. w^M
  SchemeConfig config;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

// d_l averaged onto the faces normal to `axis`: (d_l(v_j) + d_l(v_{j+e_k})) / 2.
std::array<HalfPointField, 4> half_point_coefficients(const InfluenceSet& set, const VectorField& w, int axis);

// sum_k delta_k(D delta_k W) with D frozen at the given node coefficients.
VectorField diffusion_term(const VectorField& w, const NodeCoefficients& d);
VectorField diffusion_term(const VectorField& w, const InfluenceSet& set);

VectorField explicit_step(const VectorField& w, const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg);
VectorField semi_implicit_step(const VectorField& w, const ScalarField& u0, const InfluenceSet& set,
                               const SchemeConfig& cfg);
VectorField step(const VectorField& w, const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg);

// Square node-indexed difference and averaging matrices (n1 n2 x n1 n2). The
// face j + e_k/2 is stored at row j; rows of the last node along the axis are
// empty.
SparseMatrix face_gradient_matrix(const Grid& grid, int axis);   // k_r, includes 1/h
SparseMatrix node_divergence_matrix(const Grid& grid, int axis); // k_l, includes 1/h and ghost reflection
SparseMatrix face_averaging_matrix(const Grid& grid, int axis);  // (e_j + e_{j+e_k}) / 2

// The diffusion operator as the sum of K_l D K_r products over both axes and
// both the diagonal (d1, d4) and the cross (d2, d3) couplings. Acts on the
// concatenated vector (u, v).
SparseMatrix assemble_matrix_form(const InfluenceSet& set, const VectorField& w, const Grid& grid);

// The same operator assembled directly from the five-point stencil.
SparseMatrix assemble_stencil_operator(const InfluenceSet& set, const VectorField& w, const Grid& grid);

struct LinearSystem {
  SparseMatrix matrix;  // I + dt lambda P_u - dt A
  Eigen::VectorXd rhs;  // w^m + dt lambda (u0, 0)
};

LinearSystem semi_implicit_system(const SparseMatrix& diffusion_operator, const VectorField& w, const ScalarField& u0,
                                  const SchemeConfig& cfg);

// Solves a semi-implicit system and enforces the relative residual contract.
// Sparse LU up to 256 x 256 grids, diagonally preconditioned BiCGSTAB above.
// Reuses the symbolic factorization across calls with the same pattern.
class SemiImplicitSolver {
 public:
  SemiImplicitSolver();
  ~SemiImplicitSolver();
  SemiImplicitSolver(SemiImplicitSolver&&) noexcept;
  SemiImplicitSolver& operator=(SemiImplicitSolver&&) noexcept;

  Eigen::VectorXd solve(const LinearSystem& system);

  static constexpr double kResidualTolerance = 1e-10;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

double relative_residual(const LinearSystem& system, const Eigen::VectorXd& x);

// w^0 = (u0, 0).
VectorField initial_state(const ScalarField& u0);

// M steps of the configured scheme from w^0 = (u0, 0). Throws NumericalError
// naming the step when a state stops being finite.
StepTrace run_trace(const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg);
VectorField run(const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg);

}  // namespace xdiff
