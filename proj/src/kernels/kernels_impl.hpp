#pragma once

#include "xdiff/kernels.hpp"

namespace xdiff::kernels {

namespace scalar {
void rbf_eval4(const RbfShape& basis, const double* v, std::size_t n, double shift, const double* const* coef,
               double* const* out);
void rbf_accumulate_transpose(const RbfShape& basis, const double* v, std::size_t n, const double* const* weight,
                              double* const* accum);
void rbf_basis_matrix(const RbfShape& basis, const double* v, std::size_t n, double* out);
void face_flux(std::size_t n, const double* const* dl, const double* const* dr, const double* ul, const double* ur,
               const double* vl, const double* vr, double inv_h, double* fu, double* fv);
void face_flux_vjp(std::size_t n, const double* const* dl, const double* const* dr, const double* ul,
                   const double* ur, const double* vl, const double* vr, double inv_h, const double* bfu,
                   const double* bfv, double* gu_bar, double* gv_bar, double* const* coef_bar);
}  // namespace scalar

#if XDIFF_HAVE_AVX2
namespace avx2 {
void rbf_eval4(const RbfShape& basis, const double* v, std::size_t n, double shift, const double* const* coef,
               double* const* out);
void rbf_accumulate_transpose(const RbfShape& basis, const double* v, std::size_t n, const double* const* weight,
                              double* const* accum);
void rbf_basis_matrix(const RbfShape& basis, const double* v, std::size_t n, double* out);
void face_flux(std::size_t n, const double* const* dl, const double* const* dr, const double* ul, const double* ur,
               const double* vl, const double* vr, double inv_h, double* fu, double* fv);
void face_flux_vjp(std::size_t n, const double* const* dl, const double* const* dr, const double* ul,
                   const double* ur, const double* vl, const double* vr, double inv_h, const double* bfu,
                   const double* bfv, double* gu_bar, double* gv_bar, double* const* coef_bar);
}  // namespace avx2
#endif

}  // namespace xdiff::kernels
