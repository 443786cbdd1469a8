#include "xdiff/influence.hpp"

#include <cmath>
#include <string>

#include "xdiff/error.hpp"

namespace xdiff {

namespace {

void check_ell(int ell) {
  if (ell < 1 || ell > 4) throw InvalidArgument("influence function index must be in 1..4, got " + std::to_string(ell));
}

}  // namespace

RbfBasis RbfBasis::equidistant(double a_min, double a_max, int p, double nu) {
  if (p < 2) throw InvalidArgument("RBF basis needs at least two centers");
  if (!(a_max > a_min)) throw InvalidArgument("RBF range must satisfy a_min < a_max");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("RBF scale nu must be positive");
  RbfBasis b;
  b.a_min_ = a_min;
  b.a_max_ = a_max;
  b.nu_ = nu;
  b.centers_.resize(static_cast<std::size_t>(p));
  const double step = (a_max - a_min) / (p - 1);
  for (int i = 0; i < p; ++i) b.centers_[i] = a_min + step * i;
  b.centers_.back() = a_max;
  return b;
}

RbfBasis RbfBasis::standard() { return equidistant(-20.0, 20.0, 151, 0.2); }

double RbfBasis::phi(int i, double v) const {
  const double r = v - centers_[static_cast<std::size_t>(i)];
  return std::exp(-r * r * inv4nu2());
}

InfluenceSet::InfluenceSet(RbfBasis b) : basis(std::move(b)) {
  for (auto& d : deltas) d.assign(static_cast<std::size_t>(basis.p()), 0.0);
}

InfluenceSet::InfluenceSet(RbfBasis b, std::array<std::vector<double>, 4> d) : basis(std::move(b)), deltas(std::move(d)) {
  for (const auto& c : deltas) {
    if (c.size() != static_cast<std::size_t>(basis.p()))
      throw InvalidArgument("influence coefficients do not match the number of centers");
    for (double x : c)
      if (!std::isfinite(x)) throw InvalidArgument("influence coefficients must be finite");
  }
}

const std::vector<double>& InfluenceSet::coefficients(int ell) const {
  check_ell(ell);
  return deltas[static_cast<std::size_t>(ell - 1)];
}

std::vector<double>& InfluenceSet::coefficients(int ell) {
  check_ell(ell);
  return deltas[static_cast<std::size_t>(ell - 1)];
}

double eval(const InfluenceSet& set, int ell, double v) {
  const auto& c = set.coefficients(ell);
  double sum = 0.0;
  for (int i = 0; i < set.basis.p(); ++i) sum += c[static_cast<std::size_t>(i)] * set.basis.phi(i, v);
  return sum;
}

double derivative(const InfluenceSet& set, int ell, double v) {
  return (eval(set, ell, v + kDerivativeStep) - eval(set, ell, v - kDerivativeStep)) / (2.0 * kDerivativeStep);
}

double derivative_exact(const InfluenceSet& set, int ell, double v) {
  const auto& c = set.coefficients(ell);
  const double nu2 = set.basis.nu() * set.basis.nu();
  double sum = 0.0;
  for (int i = 0; i < set.basis.p(); ++i) {
    const double r = v - set.basis.centers()[static_cast<std::size_t>(i)];
    sum += c[static_cast<std::size_t>(i)] * (-r / (2.0 * nu2)) * set.basis.phi(i, v);
  }
  return sum;
}

BasisMatrix eval_basis_matrix(const RbfBasis& basis, std::span<const double> v) {
  BasisMatrix phi(static_cast<Eigen::Index>(v.size()), basis.p());
  kernels::active().rbf_basis_matrix(basis.shape(), v.data(), v.size(), phi.data());
  return phi;
}

namespace {

NodeCoefficients eval_shifted(const InfluenceSet& set, std::span<const double> v, double shift) {
  NodeCoefficients out;
  for (auto& d : out.d) d.resize(v.size());
  const double* coef[4] = {set.deltas[0].data(), set.deltas[1].data(), set.deltas[2].data(), set.deltas[3].data()};
  double* dst[4] = {out.d[0].data(), out.d[1].data(), out.d[2].data(), out.d[3].data()};
  kernels::active().rbf_eval4(set.basis.shape(), v.data(), v.size(), shift, coef, dst);
  return out;
}

}  // namespace

NodeCoefficients eval_all(const InfluenceSet& set, std::span<const double> v) { return eval_shifted(set, v, 0.0); }

NodeCoefficients derivative_all(const InfluenceSet& set, std::span<const double> v) {
  NodeCoefficients plus = eval_shifted(set, v, kDerivativeStep);
  const NodeCoefficients minus = eval_shifted(set, v, -kDerivativeStep);
  for (int l = 0; l < 4; ++l)
    for (std::size_t j = 0; j < v.size(); ++j)
      plus.d[l][j] = (plus.d[l][j] - minus.d[l][j]) / (2.0 * kDerivativeStep);
  return plus;
}

void accumulate_basis_transpose(const RbfBasis& basis, std::span<const double> v,
                                const std::array<std::vector<double>, 4>& weight,
                                std::array<std::vector<double>, 4>& accum) {
  for (int l = 0; l < 4; ++l) {
    if (weight[l].size() != v.size()) throw InvalidArgument("basis transpose: weight length mismatch");
    if (accum[l].size() != static_cast<std::size_t>(basis.p())) throw InvalidArgument("basis transpose: accumulator length mismatch");
  }
  const double* w[4] = {weight[0].data(), weight[1].data(), weight[2].data(), weight[3].data()};
  double* a[4] = {accum[0].data(), accum[1].data(), accum[2].data(), accum[3].data()};
  kernels::active().rbf_accumulate_transpose(basis.shape(), v.data(), v.size(), w, a);
}

double ncdf_profile(double x) { return 1.0 / (1.0 + x * x); }

InfluenceSet init_ncdf(const RbfBasis& basis) {
  const int p = basis.p();
  Eigen::MatrixXd kernel(p, p);
  Eigen::VectorXd target(p);
  for (int i = 0; i < p; ++i) {
    target(i) = ncdf_profile(basis.centers()[static_cast<std::size_t>(i)]);
    for (int k = 0; k < p; ++k) kernel(i, k) = basis.phi(k, basis.centers()[static_cast<std::size_t>(i)]);
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(kernel);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14))
    throw NumericalError("RBF interpolation system is singular; nu is too large for the center spacing");
  const Eigen::VectorXd coef = llt.solve(target);
  const double residual = (kernel * coef - target).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(residual) || residual > 1e-9)
    throw NumericalError("RBF interpolation residual " + std::to_string(residual) + " exceeds tolerance");

  // The targets are scalar multiples of g, so the four coefficient vectors are
  // scalar multiples of one solve. d2 and d3 come out exact negatives.
  InfluenceSet set(basis);
  for (int l = 0; l < 4; ++l)
    for (int i = 0; i < p; ++i) set.deltas[l][static_cast<std::size_t>(i)] = kNcdfWeights[l] * coef(i);
  return set;
}

}  // namespace xdiff
