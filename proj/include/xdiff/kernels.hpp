#pragma once

// Data-parallel inner loops of the filter. Every kernel has a portable scalar
// reference implementation; an AVX2/FMA variant is selected at runtime when
// the CPU supports it. Both variants are checked against each other in
// tests/test_kernels.cpp.
//
// The Gaussian basis used throughout is phi_i(v) = exp(-(v - c_i)^2 * inv4nu2)
// with inv4nu2 = 1 / (4 nu^2).

#include <cstddef>
#include <string_view>

namespace xdiff::kernels {

struct RbfShape {
  const double* centers;
  std::size_t p;
  double inv4nu2;
};

// out[l][j] = sum_i coef[l][i] * phi_i(v[j] + shift), l = 0..3.
using RbfEval4Fn = void (*)(const RbfShape& basis, const double* v, std::size_t n, double shift,
                            const double* const* coef, double* const* out);

// accum[l][i] += sum_j weight[l][j] * phi_i(v[j]), l = 0..3.
using RbfAccumulateTransposeFn = void (*)(const RbfShape& basis, const double* v, std::size_t n,
                                          const double* const* weight, double* const* accum);

// out is n x p row-major, out[j*p + i] = phi_i(v[j]).
using RbfBasisMatrixFn = void (*)(const RbfShape& basis, const double* v, std::size_t n, double* out);

// Cross-diffusion fluxes on n faces whose endpoints are the "left" and
// "right" pointers (the caller supplies the stride through pointer offsets):
//   a_l   = (dl[l] + dr[l]) / 2
//   g_u   = (ur - ul) * inv_h,  g_v = (vr - vl) * inv_h
//   fu    = a_0 g_u + a_1 g_v,  fv = a_2 g_u + a_3 g_v
using FaceFluxFn = void (*)(std::size_t n, const double* const* dl, const double* const* dr, const double* ul,
                            const double* ur, const double* vl, const double* vr, double inv_h, double* fu,
                            double* fv);

// Reverse of FaceFluxFn given flux adjoints bfu, bfv:
//   gu_bar = (a_0 bfu + a_2 bfv) * inv_h,  gv_bar = (a_1 bfu + a_3 bfv) * inv_h
//   coef_bar[0] = bfu g_u / 2, coef_bar[1] = bfu g_v / 2,
//   coef_bar[2] = bfv g_u / 2, coef_bar[3] = bfv g_v / 2
// coef_bar is the adjoint reaching each endpoint's node coefficient.
using FaceFluxVjpFn = void (*)(std::size_t n, const double* const* dl, const double* const* dr, const double* ul,
                               const double* ur, const double* vl, const double* vr, double inv_h,
                               const double* bfu, const double* bfv, double* gu_bar, double* gv_bar,
                               double* const* coef_bar);

struct KernelTable {
  std::string_view name;
  RbfEval4Fn rbf_eval4;
  RbfAccumulateTransposeFn rbf_accumulate_transpose;
  RbfBasisMatrixFn rbf_basis_matrix;
  FaceFluxFn face_flux;
  FaceFluxVjpFn face_flux_vjp;
};

const KernelTable& scalar_table();

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

// The table used by the library. Chosen once: AVX2 when available, unless the
// environment variable XDIFF_KERNELS=scalar forces the reference path.
const KernelTable& active();

// Overrides the active table (tests and benchmarks).
void set_active(const KernelTable& table);

}  // namespace xdiff::kernels
