#include <cmath>

#include "kernels_impl.hpp"

namespace xdiff::kernels::scalar {

void rbf_eval4(const RbfShape& basis, const double* v, std::size_t n, double shift, const double* const* coef,
               double* const* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double x = v[j] + shift;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < basis.p; ++i) {
      const double r = x - basis.centers[i];
      const double phi = std::exp(-r * r * basis.inv4nu2);
      s0 += coef[0][i] * phi;
      s1 += coef[1][i] * phi;
      s2 += coef[2][i] * phi;
      s3 += coef[3][i] * phi;
    }
    out[0][j] = s0;
    out[1][j] = s1;
    out[2][j] = s2;
    out[3][j] = s3;
  }
}

void rbf_accumulate_transpose(const RbfShape& basis, const double* v, std::size_t n, const double* const* weight,
                              double* const* accum) {
  for (std::size_t j = 0; j < n; ++j) {
    const double w0 = weight[0][j], w1 = weight[1][j], w2 = weight[2][j], w3 = weight[3][j];
    if (w0 == 0.0 && w1 == 0.0 && w2 == 0.0 && w3 == 0.0) continue;
    for (std::size_t i = 0; i < basis.p; ++i) {
      const double r = v[j] - basis.centers[i];
      const double phi = std::exp(-r * r * basis.inv4nu2);
      accum[0][i] += w0 * phi;
      accum[1][i] += w1 * phi;
      accum[2][i] += w2 * phi;
      accum[3][i] += w3 * phi;
    }
  }
}

void rbf_basis_matrix(const RbfShape& basis, const double* v, std::size_t n, double* out) {
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < basis.p; ++i) {
      const double r = v[j] - basis.centers[i];
      out[j * basis.p + i] = std::exp(-r * r * basis.inv4nu2);
    }
}

void face_flux(std::size_t n, const double* const* dl, const double* const* dr, const double* ul, const double* ur,
               const double* vl, const double* vr, double inv_h, double* fu, double* fv) {
  for (std::size_t f = 0; f < n; ++f) {
    const double a0 = 0.5 * (dl[0][f] + dr[0][f]);
    const double a1 = 0.5 * (dl[1][f] + dr[1][f]);
    const double a2 = 0.5 * (dl[2][f] + dr[2][f]);
    const double a3 = 0.5 * (dl[3][f] + dr[3][f]);
    const double gu = (ur[f] - ul[f]) * inv_h;
    const double gv = (vr[f] - vl[f]) * inv_h;
    fu[f] = a0 * gu + a1 * gv;
    fv[f] = a2 * gu + a3 * gv;
  }
}

void face_flux_vjp(std::size_t n, const double* const* dl, const double* const* dr, const double* ul,
                   const double* ur, const double* vl, const double* vr, double inv_h, const double* bfu,
                   const double* bfv, double* gu_bar, double* gv_bar, double* const* coef_bar) {
  for (std::size_t f = 0; f < n; ++f) {
    const double a0 = 0.5 * (dl[0][f] + dr[0][f]);
    const double a1 = 0.5 * (dl[1][f] + dr[1][f]);
    const double a2 = 0.5 * (dl[2][f] + dr[2][f]);
    const double a3 = 0.5 * (dl[3][f] + dr[3][f]);
    const double gu = (ur[f] - ul[f]) * inv_h;
    const double gv = (vr[f] - vl[f]) * inv_h;
    gu_bar[f] = (a0 * bfu[f] + a2 * bfv[f]) * inv_h;
    gv_bar[f] = (a1 * bfu[f] + a3 * bfv[f]) * inv_h;
    coef_bar[0][f] = 0.5 * bfu[f] * gu;
    coef_bar[1][f] = 0.5 * bfu[f] * gv;
    coef_bar[2][f] = 0.5 * bfv[f] * gu;
    coef_bar[3][f] = 0.5 * bfv[f] * gv;
  }
}

}  // namespace xdiff::kernels::scalar
