// Compiled with -mavx2 -mfma. Only reached through the dispatch table after a
// runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace xdiff::kernels::avx2 {

namespace {

// exp(x) for four doubles. Cody-Waite reduction x = n ln2 + r, |r| <= ln2/2,
// then a degree-13 Taylor polynomial (truncation < 1e-17 relative).
// Inputs below -708 flush to zero; NaN propagates.
inline __m256d exp4(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(lo, x), hi);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n via the exponent field.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

inline __m256d phi4(__m256d x, __m256d center, __m256d neg_scale) {
  const __m256d r = _mm256_sub_pd(x, center);
  return exp4(_mm256_mul_pd(_mm256_mul_pd(r, r), neg_scale));
}

inline double phi1(double x, double center, double inv4nu2) {
  const double r = x - center;
  return std::exp(-r * r * inv4nu2);
}

}  // namespace

void rbf_eval4(const RbfShape& basis, const double* v, std::size_t n, double shift, const double* const* coef,
               double* const* out) {
  const __m256d neg_scale = _mm256_set1_pd(-basis.inv4nu2);
  const __m256d vshift = _mm256_set1_pd(shift);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d x = _mm256_add_pd(_mm256_loadu_pd(v + j), vshift);
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < basis.p; ++i) {
      const __m256d phi = phi4(x, _mm256_set1_pd(basis.centers[i]), neg_scale);
      s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_set1_pd(coef[0][i]), phi));
      s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_set1_pd(coef[1][i]), phi));
      s2 = _mm256_add_pd(s2, _mm256_mul_pd(_mm256_set1_pd(coef[2][i]), phi));
      s3 = _mm256_add_pd(s3, _mm256_mul_pd(_mm256_set1_pd(coef[3][i]), phi));
    }
    _mm256_storeu_pd(out[0] + j, s0);
    _mm256_storeu_pd(out[1] + j, s1);
    _mm256_storeu_pd(out[2] + j, s2);
    _mm256_storeu_pd(out[3] + j, s3);
  }
  for (; j < n; ++j) {
    const double x = v[j] + shift;
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < basis.p; ++i) {
      const double phi = phi1(x, basis.centers[i], basis.inv4nu2);
      for (int l = 0; l < 4; ++l) s[l] += coef[l][i] * phi;
    }
    for (int l = 0; l < 4; ++l) out[l][j] = s[l];
  }
}

void rbf_accumulate_transpose(const RbfShape& basis, const double* v, std::size_t n, const double* const* weight,
                              double* const* accum) {
  const __m256d neg_scale = _mm256_set1_pd(-basis.inv4nu2);
  for (std::size_t j = 0; j < n; ++j) {
    const double w[4] = {weight[0][j], weight[1][j], weight[2][j], weight[3][j]};
    if (w[0] == 0.0 && w[1] == 0.0 && w[2] == 0.0 && w[3] == 0.0) continue;
    const __m256d x = _mm256_set1_pd(v[j]);
    const __m256d w0 = _mm256_set1_pd(w[0]), w1 = _mm256_set1_pd(w[1]);
    const __m256d w2 = _mm256_set1_pd(w[2]), w3 = _mm256_set1_pd(w[3]);
    std::size_t i = 0;
    for (; i + 4 <= basis.p; i += 4) {
      const __m256d phi = phi4(x, _mm256_loadu_pd(basis.centers + i), neg_scale);
      _mm256_storeu_pd(accum[0] + i, _mm256_add_pd(_mm256_loadu_pd(accum[0] + i), _mm256_mul_pd(w0, phi)));
      _mm256_storeu_pd(accum[1] + i, _mm256_add_pd(_mm256_loadu_pd(accum[1] + i), _mm256_mul_pd(w1, phi)));
      _mm256_storeu_pd(accum[2] + i, _mm256_add_pd(_mm256_loadu_pd(accum[2] + i), _mm256_mul_pd(w2, phi)));
      _mm256_storeu_pd(accum[3] + i, _mm256_add_pd(_mm256_loadu_pd(accum[3] + i), _mm256_mul_pd(w3, phi)));
    }
    for (; i < basis.p; ++i) {
      const double phi = phi1(v[j], basis.centers[i], basis.inv4nu2);
      for (int l = 0; l < 4; ++l) accum[l][i] += w[l] * phi;
    }
  }
}

void rbf_basis_matrix(const RbfShape& basis, const double* v, std::size_t n, double* out) {
  const __m256d neg_scale = _mm256_set1_pd(-basis.inv4nu2);
  for (std::size_t j = 0; j < n; ++j) {
    const __m256d x = _mm256_set1_pd(v[j]);
    double* row = out + j * basis.p;
    std::size_t i = 0;
    for (; i + 4 <= basis.p; i += 4) _mm256_storeu_pd(row + i, phi4(x, _mm256_loadu_pd(basis.centers + i), neg_scale));
    for (; i < basis.p; ++i) row[i] = phi1(v[j], basis.centers[i], basis.inv4nu2);
  }
}

void face_flux(std::size_t n, const double* const* dl, const double* const* dr, const double* ul, const double* ur,
               const double* vl, const double* vr, double inv_h, double* fu, double* fv) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d ih = _mm256_set1_pd(inv_h);
  std::size_t f = 0;
  for (; f + 4 <= n; f += 4) {
    __m256d a[4];
    for (int l = 0; l < 4; ++l)
      a[l] = _mm256_mul_pd(half, _mm256_add_pd(_mm256_loadu_pd(dl[l] + f), _mm256_loadu_pd(dr[l] + f)));
    const __m256d gu = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(ur + f), _mm256_loadu_pd(ul + f)), ih);
    const __m256d gv = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(vr + f), _mm256_loadu_pd(vl + f)), ih);
    _mm256_storeu_pd(fu + f, _mm256_add_pd(_mm256_mul_pd(a[0], gu), _mm256_mul_pd(a[1], gv)));
    _mm256_storeu_pd(fv + f, _mm256_add_pd(_mm256_mul_pd(a[2], gu), _mm256_mul_pd(a[3], gv)));
  }
  if (f < n) {
    const double* dl_tail[4] = {dl[0] + f, dl[1] + f, dl[2] + f, dl[3] + f};
    const double* dr_tail[4] = {dr[0] + f, dr[1] + f, dr[2] + f, dr[3] + f};
    scalar::face_flux(n - f, dl_tail, dr_tail, ul + f, ur + f, vl + f, vr + f, inv_h, fu + f, fv + f);
  }
}

void face_flux_vjp(std::size_t n, const double* const* dl, const double* const* dr, const double* ul,
                   const double* ur, const double* vl, const double* vr, double inv_h, const double* bfu,
                   const double* bfv, double* gu_bar, double* gv_bar, double* const* coef_bar) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d ih = _mm256_set1_pd(inv_h);
  std::size_t f = 0;
  for (; f + 4 <= n; f += 4) {
    __m256d a[4];
    for (int l = 0; l < 4; ++l)
      a[l] = _mm256_mul_pd(half, _mm256_add_pd(_mm256_loadu_pd(dl[l] + f), _mm256_loadu_pd(dr[l] + f)));
    const __m256d gu = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(ur + f), _mm256_loadu_pd(ul + f)), ih);
    const __m256d gv = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(vr + f), _mm256_loadu_pd(vl + f)), ih);
    const __m256d bu = _mm256_loadu_pd(bfu + f);
    const __m256d bv = _mm256_loadu_pd(bfv + f);
    _mm256_storeu_pd(gu_bar + f, _mm256_mul_pd(_mm256_add_pd(_mm256_mul_pd(a[0], bu), _mm256_mul_pd(a[2], bv)), ih));
    _mm256_storeu_pd(gv_bar + f, _mm256_mul_pd(_mm256_add_pd(_mm256_mul_pd(a[1], bu), _mm256_mul_pd(a[3], bv)), ih));
    const __m256d hbu = _mm256_mul_pd(half, bu);
    const __m256d hbv = _mm256_mul_pd(half, bv);
    _mm256_storeu_pd(coef_bar[0] + f, _mm256_mul_pd(hbu, gu));
    _mm256_storeu_pd(coef_bar[1] + f, _mm256_mul_pd(hbu, gv));
    _mm256_storeu_pd(coef_bar[2] + f, _mm256_mul_pd(hbv, gu));
    _mm256_storeu_pd(coef_bar[3] + f, _mm256_mul_pd(hbv, gv));
  }
  if (f < n) {
    const double* dl_tail[4] = {dl[0] + f, dl[1] + f, dl[2] + f, dl[3] + f};
    const double* dr_tail[4] = {dr[0] + f, dr[1] + f, dr[2] + f, dr[3] + f};
    double* cb_tail[4] = {coef_bar[0] + f, coef_bar[1] + f, coef_bar[2] + f, coef_bar[3] + f};
    scalar::face_flux_vjp(n - f, dl_tail, dr_tail, ul + f, ur + f, vl + f, vr + f, inv_h, bfu + f, bfv + f,
                          gu_bar + f, gv_bar + f, cb_tail);
  }
}

}  // namespace xdiff::kernels::avx2
