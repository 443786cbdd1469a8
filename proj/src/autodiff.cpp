#include "xdiff/autodiff.hpp"

#include <cmath>
#include <string>

#include "xdiff/error.hpp"
#include "xdiff/kernels.hpp"

namespace xdiff {

ParameterVector ParameterVector::zeros(int p) {
  ParameterVector out;
  out.lam14.assign(2 * static_cast<std::size_t>(p), 0.0);
  out.lam23.assign(2 * static_cast<std::size_t>(p), 0.0);
  return out;
}

ParameterVector ParameterVector::from_set(const InfluenceSet& set, double lambda) {
  const int p = set.basis.p();
  ParameterVector out = zeros(p);
  out.lambda = lambda;
  for (int ell = 1; ell <= 4; ++ell)
    for (int i = 0; i < p; ++i) out.delta(ell, i) = set.coefficients(ell)[static_cast<std::size_t>(i)];
  return out;
}

ParameterVector ParameterVector::from_flat(std::span<const double> flat, int p) {
  const std::size_t two_p = 2 * static_cast<std::size_t>(p);
  if (flat.size() != 1 + 2 * two_p) throw InvalidArgument("parameter vector must have length 4P+1");
  ParameterVector out;
  out.lambda = flat[0];
  out.lam14.assign(flat.begin() + 1, flat.begin() + 1 + static_cast<std::ptrdiff_t>(two_p));
  out.lam23.assign(flat.begin() + 1 + static_cast<std::ptrdiff_t>(two_p), flat.end());
  return out;
}

InfluenceSet ParameterVector::to_set(const RbfBasis& basis) const {
  const int np = p();
  if (np != basis.p()) throw InvalidArgument("parameter vector does not match the basis size");
  std::array<std::vector<double>, 4> d;
  for (int ell = 1; ell <= 4; ++ell) {
    d[static_cast<std::size_t>(ell - 1)].resize(static_cast<std::size_t>(np));
    for (int i = 0; i < np; ++i) d[static_cast<std::size_t>(ell - 1)][static_cast<std::size_t>(i)] = delta(ell, i);
  }
  return InfluenceSet(basis, std::move(d));
}

std::vector<double> ParameterVector::flat() const {
  std::vector<double> out;
  out.reserve(size());
  out.push_back(lambda);
  out.insert(out.end(), lam14.begin(), lam14.end());
  out.insert(out.end(), lam23.begin(), lam23.end());
  return out;
}

double ParameterVector::delta(int ell, int i) const { return const_cast<ParameterVector*>(this)->delta(ell, i); }

double& ParameterVector::delta(int ell, int i) {
  const auto np = static_cast<std::size_t>(p());
  const auto k = static_cast<std::size_t>(i);
  switch (ell) {
    case 1: return lam14[k];
    case 4: return lam14[np + k];
    case 2: return lam23[k];
    case 3: return lam23[np + k];
    default: throw InvalidArgument("influence function index must be in 1..4");
  }
}

bool ParameterVector::all_finite() const {
  if (!std::isfinite(lambda)) return false;
  for (double x : lam14)
    if (!std::isfinite(x)) return false;
  for (double x : lam23)
    if (!std::isfinite(x)) return false;
  return true;
}

ParameterVector& ParameterVector::operator+=(const ParameterVector& other) {
  if (other.lam14.size() != lam14.size() || other.lam23.size() != lam23.size())
    throw InvalidArgument("parameter vectors differ in size");
  lambda += other.lambda;
  for (std::size_t i = 0; i < lam14.size(); ++i) lam14[i] += other.lam14[i];
  for (std::size_t i = 0; i < lam23.size(); ++i) lam23[i] += other.lam23[i];
  return *this;
}

double loss(const ScalarField& u_final, const ScalarField& u_clean) {
  if (!(u_final.grid() == u_clean.grid())) throw InvalidArgument("loss: grid mismatch");
  double sum = 0.0;
  for (std::size_t j = 0; j < u_final.size(); ++j) {
    const double r = u_final[j] - u_clean[j];
    sum += r * r;
  }
  return 0.5 * sum;
}

std::vector<double> loss_output_adjoint(const ScalarField& u_final, const ScalarField& u_clean) {
  if (!(u_final.grid() == u_clean.grid())) throw InvalidArgument("loss_output_adjoint: grid mismatch");
  const std::size_t n = u_final.size();
  std::vector<double> a(2 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) a[j] = u_final[j] - u_clean[j];
  return a;
}

namespace {

// Adjoint of the ghost-reflected divergence for the faces of one axis:
// bf[f] = scale * (w_a A[a] - w_b A[b]) / h with w = 2 on boundary nodes.
void divergence_adjoint(const Grid& g, int axis, const double* node_adj, double scale, double* bf) {
  const double s = scale / g.spacing(axis);
  if (axis == 1) {
    const std::size_t n2 = static_cast<std::size_t>(g.n2);
    for (int j1 = 0; j1 + 1 < g.n1; ++j1) {
      const double wa = j1 == 0 ? 2.0 : 1.0;
      const double wb = j1 + 1 == g.n1 - 1 ? 2.0 : 1.0;
      const double* a = node_adj + static_cast<std::size_t>(j1) * n2;
      const double* b = a + n2;
      double* out = bf + static_cast<std::size_t>(j1) * n2;
      for (std::size_t j2 = 0; j2 < n2; ++j2) out[j2] = s * (wa * a[j2] - wb * b[j2]);
    }
  } else {
    const int nf = g.n2 - 1;
    for (int j1 = 0; j1 < g.n1; ++j1) {
      const double* a = node_adj + static_cast<std::size_t>(j1) * g.n2;
      double* out = bf + static_cast<std::size_t>(j1) * nf;
      for (int j2 = 0; j2 < nf; ++j2) {
        const double wa = j2 == 0 ? 2.0 : 1.0;
        const double wb = j2 + 1 == nf ? 2.0 : 1.0;
        out[j2] = s * (wa * a[j2] - wb * a[j2 + 1]);
      }
    }
  }
}

}  // namespace

StepVjp step_vjp(std::span<const double> adjoint, const VectorField& w_m, const ScalarField& u0,
                 const InfluenceSet& set, const SchemeConfig& cfg) {
  if (cfg.theta != 0) throw InvalidArgument("gradients are only defined for the explicit scheme (theta = 0)");
  const Grid& g = w_m.grid();
  const std::size_t n = g.size();
  if (adjoint.size() != 2 * n) throw InvalidArgument("adjoint length must be 2 n1 n2");
  if (!(u0.grid() == g)) throw InvalidArgument("step_vjp: u0 grid mismatch");

  const double* aU = adjoint.data();
  const double* aV = adjoint.data() + n;
  const double* U = w_m.u.data();
  const double* V = w_m.v.data();

  StepVjp out;
  out.state.assign(adjoint.begin(), adjoint.end());
  out.params = GradientVector::zeros(set.basis.p());
  double* oU = out.state.data();
  double* oV = out.state.data() + n;

  double lambda_grad = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    oU[j] -= cfg.dt * cfg.lambda * aU[j];
    lambda_grad += aU[j] * (-cfg.dt * (U[j] - u0[j]));
  }
  out.params.lambda = lambda_grad;

  const NodeCoefficients d = eval_all(set, w_m.v.values());
  std::array<std::vector<double>, 4> node_bar;
  for (auto& x : node_bar) x.assign(n, 0.0);

  const kernels::KernelTable& k = kernels::active();
  for (int axis = 1; axis <= 2; ++axis) {
    const std::size_t nf = g.face_count(axis);
    std::vector<double> bfu(nf), bfv(nf), gu_bar(nf), gv_bar(nf);
    std::array<std::vector<double>, 4> cbar;
    for (auto& x : cbar) x.resize(nf);
    divergence_adjoint(g, axis, aU, cfg.dt, bfu.data());
    divergence_adjoint(g, axis, aV, cfg.dt, bfv.data());

    // Face f connects node `left(f)` to node `left(f) + stride`.
    const std::size_t stride = axis == 1 ? static_cast<std::size_t>(g.n2) : 1;
    const std::size_t rows = axis == 1 ? 1 : static_cast<std::size_t>(g.n1);
    const std::size_t per_row = axis == 1 ? nf : static_cast<std::size_t>(g.n2 - 1);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t node0 = axis == 1 ? 0 : r * static_cast<std::size_t>(g.n2);
      const std::size_t f0 = r * per_row;
      const double* dl[4] = {d.d[0].data() + node0, d.d[1].data() + node0, d.d[2].data() + node0,
                             d.d[3].data() + node0};
      const double* dr[4] = {dl[0] + stride, dl[1] + stride, dl[2] + stride, dl[3] + stride};
      double* cb[4] = {cbar[0].data() + f0, cbar[1].data() + f0, cbar[2].data() + f0, cbar[3].data() + f0};
      k.face_flux_vjp(per_row, dl, dr, U + node0, U + node0 + stride, V + node0, V + node0 + stride,
                      1.0 / g.spacing(axis), bfu.data() + f0, bfv.data() + f0, gu_bar.data() + f0,
                      gv_bar.data() + f0, cb);
      for (std::size_t f = 0; f < per_row; ++f) {
        const std::size_t a = node0 + f;
        const std::size_t b = a + stride;
        const std::size_t fi = f0 + f;
        oU[b] += gu_bar[fi];
        oU[a] -= gu_bar[fi];
        oV[b] += gv_bar[fi];
        oV[a] -= gv_bar[fi];
        for (int l = 0; l < 4; ++l) {
          node_bar[l][a] += cbar[l][fi];
          node_bar[l][b] += cbar[l][fi];
        }
      }
    }
  }

  const NodeCoefficients dprime = derivative_all(set, w_m.v.values());
  for (std::size_t j = 0; j < n; ++j)
    for (int l = 0; l < 4; ++l) oV[j] += node_bar[l][j] * dprime.d[l][j];

  std::array<std::vector<double>, 4> coef_grad;
  for (auto& x : coef_grad) x.assign(static_cast<std::size_t>(set.basis.p()), 0.0);
  accumulate_basis_transpose(set.basis, w_m.v.values(), node_bar, coef_grad);
  for (int ell = 1; ell <= 4; ++ell)
    for (int i = 0; i < set.basis.p(); ++i)
      out.params.delta(ell, i) = coef_grad[static_cast<std::size_t>(ell - 1)][static_cast<std::size_t>(i)];
  return out;
}

std::vector<double> step_jacobian_apply(std::span<const double> adjoint, const VectorField& w_m,
                                        const InfluenceSet& set, const SchemeConfig& cfg) {
  // The state product does not depend on u0; any field on the grid will do.
  return step_vjp(adjoint, w_m, w_m.u, set, cfg).state;
}

GradientVector step_param_partial(std::span<const double> adjoint, const VectorField& w_prev, const ScalarField& u0,
                                  const InfluenceSet& set, const SchemeConfig& cfg) {
  return step_vjp(adjoint, w_prev, u0, set, cfg).params;
}

LossGradient backprop(const StepTrace& trace, const ScalarField& u_clean, const InfluenceSet& set) {
  if (trace.states.empty()) throw InvalidArgument("backprop: trace has no recorded states");
  if (trace.config.theta != 0) throw InvalidArgument("backprop: trace must come from the explicit scheme");
  if (trace.states.size() != static_cast<std::size_t>(trace.config.steps) + 1)
    throw InvalidArgument("backprop: trace was not fully recorded");

  const ScalarField& u0 = trace.states.front().u;
  const VectorField& last = trace.states.back();
  LossGradient out;
  out.loss = loss(last.u, u_clean);
  out.grad = GradientVector::zeros(set.basis.p());
  std::vector<double> a = loss_output_adjoint(last.u, u_clean);
  for (int m = trace.config.steps - 1; m >= 0; --m) {
    StepVjp vjp = step_vjp(a, trace.states[static_cast<std::size_t>(m)], u0, set, trace.config);
    out.grad += vjp.params;
    a = std::move(vjp.state);
  }
  return out;
}

}  // namespace xdiff
