#pragma once

// Reverse-mode gradient of the denoising loss through an explicit rollout.
//
// Parameters are ordered {lambda, delta_1, delta_4, delta_2, delta_3}: the
// diagonal couplings (d1, d4) first, then the cross couplings (d2, d3).

#include <span>
#include <vector>

#include "xdiff/field.hpp"
#include "xdiff/influence.hpp"
#include "xdiff/scheme.hpp"

namespace xdiff {

struct ParameterVector {
  double lambda = 0.0;
  std::vector<double> lam14;  // delta_1 (P) then delta_4 (P)
  std::vector<double> lam23;  // delta_2 (P) then delta_3 (P)

  static ParameterVector zeros(int p);
  static ParameterVector from_set(const InfluenceSet& set, double lambda);
  static ParameterVector from_flat(std::span<const double> flat, int p);

  int p() const { return static_cast<int>(lam14.size() / 2); }
  std::size_t size() const { return 1 + lam14.size() + lam23.size(); }
  InfluenceSet to_set(const RbfBasis& basis) const;
  std::vector<double> flat() const;

  // Coefficient i of d_ell, ell in 1..4.
  double delta(int ell, int i) const;
  double& delta(int ell, int i);

  bool all_finite() const;
  ParameterVector& operator+=(const ParameterVector& other);
};

using GradientVector = ParameterVector;

// 1/2 sum_j (u_final - u_clean)^2, unweighted.
double loss(const ScalarField& u_final, const ScalarField& u_clean);

// d loss / d w^M = [(u_final - u_clean), 0].
std::vector<double> loss_output_adjoint(const ScalarField& u_final, const ScalarField& u_clean);

struct StepVjp {
  std::vector<double> state;  // adjoint * d w^{m+1} / d w^m
  GradientVector params;      // adjoint * d w^{m+1} / d Theta (direct part)
};

// Both products of one explicit step in a single pass.
StepVjp step_vjp(std::span<const double> adjoint, const VectorField& w_m, const ScalarField& u0,
                 const InfluenceSet& set, const SchemeConfig& cfg);

// adjoint * d w^{m+1} / d w^m. Includes the -dt lambda reaction block on the
// U diagonal in addition to the four diffusion brackets.
std::vector<double> step_jacobian_apply(std::span<const double> adjoint, const VectorField& w_m,
                                        const InfluenceSet& set, const SchemeConfig& cfg);

// adjoint * (direct partial of the step output w.r.t. Theta).
GradientVector step_param_partial(std::span<const double> adjoint, const VectorField& w_prev, const ScalarField& u0,
                                  const InfluenceSet& set, const SchemeConfig& cfg);

struct LossGradient {
  double loss = 0.0;
  GradientVector grad;
};

// Reverse accumulation over a recorded explicit trace; u0 is taken from
// trace.states[0].u.
LossGradient backprop(const StepTrace& trace, const ScalarField& u_clean, const InfluenceSet& set);

}  // namespace xdiff
