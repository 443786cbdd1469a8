#pragma once

// Gaussian RBF expansions for the four influence functions d1..d4 of the
// cross-diffusion matrix. All four share one basis and are functions of the
// edge-detector component v only:
//
//   d_l(v) = sum_i delta[l][i] * exp(-(v - mu_i)^2 / (4 nu^2))

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xdiff/kernels.hpp"

namespace xdiff {

// Step of the centered difference used for d_l'(v).
inline constexpr double kDerivativeStep = 1e-4;

class RbfBasis {
 public:
  RbfBasis() = default;

  // p equidistant centers spanning [a_min, a_max] (both endpoints included).
  static RbfBasis equidistant(double a_min, double a_max, int p, double nu);

  // A = [-20, 20], P = 151, nu = 0.2.
  static RbfBasis standard();

  double a_min() const { return a_min_; }
  double a_max() const { return a_max_; }
  int p() const { return static_cast<int>(centers_.size()); }
  double nu() const { return nu_; }
  std::span<const double> centers() const { return centers_; }
  double inv4nu2() const { return 1.0 / (4.0 * nu_ * nu_); }

  double phi(int i, double v) const;
  kernels::RbfShape shape() const { return {centers_.data(), centers_.size(), inv4nu2()}; }

 private:
  double a_min_ = 0.0;
  double a_max_ = 0.0;
  double nu_ = 1.0;
  std::vector<double> centers_;
};

struct InfluenceSet {
  RbfBasis basis;
  // deltas[l - 1] holds the coefficients of d_l.
  std::array<std::vector<double>, 4> deltas;

  InfluenceSet() = default;
  explicit InfluenceSet(RbfBasis b);
  InfluenceSet(RbfBasis b, std::array<std::vector<double>, 4> d);

  const std::vector<double>& coefficients(int ell) const;
  std::vector<double>& coefficients(int ell);
};

// Node values of all four functions, d[l - 1][j] = d_l(v_j).
struct NodeCoefficients {
  std::array<std::vector<double>, 4> d;
};

double eval(const InfluenceSet& set, int ell, double v);

// (d_l(v + h) - d_l(v - h)) / (2h) with h = kDerivativeStep.
double derivative(const InfluenceSet& set, int ell, double v);

// Analytic derivative, used only to check the centered difference.
double derivative_exact(const InfluenceSet& set, int ell, double v);

// Phi with Phi(j, i) = phi_i(v_j).
using BasisMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
BasisMatrix eval_basis_matrix(const RbfBasis& basis, std::span<const double> v);

// Batched evaluation through the active kernel table.
NodeCoefficients eval_all(const InfluenceSet& set, std::span<const double> v);
NodeCoefficients derivative_all(const InfluenceSet& set, std::span<const double> v);

// accum[l][i] += sum_j weight[l][j] * phi_i(v_j): the transpose of the basis
// matrix applied to four node vectors at once.
void accumulate_basis_transpose(const RbfBasis& basis, std::span<const double> v,
                                const std::array<std::vector<double>, 4>& weight,
                                std::array<std::vector<double>, 4>& accum);

// Nonlinear complex diffusion profile g(x) = 1 / (1 + x^2) and the weights of
// d1..d4 relative to it.
double ncdf_profile(double x);
inline constexpr std::array<double, 4> kNcdfWeights = {0.99, -0.1, 0.1, 0.99};

// Interpolates d_l = kNcdfWeights[l] * g at the centers by solving the
// Gaussian kernel system. Throws NumericalError when that system is singular
// to working precision (nu too large for the center spacing).
InfluenceSet init_ncdf(const RbfBasis& basis);

}  // namespace xdiff
