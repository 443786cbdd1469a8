#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "xdiff/influence.hpp"
#include "xdiff/kernels.hpp"

using namespace xdiff;
using kernels::KernelTable;

namespace {

struct Inputs {
  std::vector<double> centers, v;
  std::array<std::vector<double>, 4> coef, weight, dl, dr;
  std::vector<double> ul, ur, vl, vr, bfu, bfv;
};

Inputs make_inputs(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1, 1);
  Inputs in;
  for (std::size_t i = 0; i < p; ++i) in.centers.push_back(-3.0 + 6.0 * static_cast<double>(i) / (p - 1));
  auto fill = [&](std::vector<double>& x, std::size_t m, double s) {
    x.resize(m);
    for (auto& e : x) e = s * dist(rng);
  };
  fill(in.v, n, 4.0);
  for (int l = 0; l < 4; ++l) {
    fill(in.coef[l], p, 1.0);
    fill(in.weight[l], n, 1.0);
    fill(in.dl[l], n, 1.0);
    fill(in.dr[l], n, 1.0);
  }
  for (auto* x : {&in.ul, &in.ur, &in.vl, &in.vr, &in.bfu, &in.bfv}) fill(*x, n, 2.0);
  return in;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol * (1.0 + std::abs(a[i])));
}

void compare_tables(const KernelTable& ref, const KernelTable& simd) {
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 101u}) {
    for (std::size_t p : {2u, 3u, 5u, 11u, 31u}) {
      const Inputs in = make_inputs(n, p, 1000 * n + p);
      const kernels::RbfShape shape{in.centers.data(), p, 1.0 / (4.0 * 0.3 * 0.3)};
      const double* coef[4] = {in.coef[0].data(), in.coef[1].data(), in.coef[2].data(), in.coef[3].data()};

      for (double shift : {0.0, 1e-4}) {
        std::array<std::vector<double>, 4> a, b;
        double* pa[4];
        double* pb[4];
        for (int l = 0; l < 4; ++l) {
          a[l].assign(n, 0.0);
          b[l].assign(n, 0.0);
          pa[l] = a[l].data();
          pb[l] = b[l].data();
        }
        ref.rbf_eval4(shape, in.v.data(), n, shift, coef, pa);
        simd.rbf_eval4(shape, in.v.data(), n, shift, coef, pb);
        for (int l = 0; l < 4; ++l) check_close(a[l], b[l], 1e-14);
      }

      {
        std::array<std::vector<double>, 4> a, b;
        double* pa[4];
        double* pb[4];
        const double* w[4] = {in.weight[0].data(), in.weight[1].data(), in.weight[2].data(), in.weight[3].data()};
        for (int l = 0; l < 4; ++l) {
          a[l].assign(p, 0.5);
          b[l].assign(p, 0.5);
          pa[l] = a[l].data();
          pb[l] = b[l].data();
        }
        ref.rbf_accumulate_transpose(shape, in.v.data(), n, w, pa);
        simd.rbf_accumulate_transpose(shape, in.v.data(), n, w, pb);
        for (int l = 0; l < 4; ++l) check_close(a[l], b[l], 1e-13);
      }

      {
        std::vector<double> a(n * p), b(n * p);
        ref.rbf_basis_matrix(shape, in.v.data(), n, a.data());
        simd.rbf_basis_matrix(shape, in.v.data(), n, b.data());
        check_close(a, b, 1e-15);
      }

      const double* dl[4] = {in.dl[0].data(), in.dl[1].data(), in.dl[2].data(), in.dl[3].data()};
      const double* dr[4] = {in.dr[0].data(), in.dr[1].data(), in.dr[2].data(), in.dr[3].data()};
      {
        std::vector<double> fu_a(n), fv_a(n), fu_b(n), fv_b(n);
        ref.face_flux(n, dl, dr, in.ul.data(), in.ur.data(), in.vl.data(), in.vr.data(), 1.7, fu_a.data(), fv_a.data());
        simd.face_flux(n, dl, dr, in.ul.data(), in.ur.data(), in.vl.data(), in.vr.data(), 1.7, fu_b.data(), fv_b.data());
        check_close(fu_a, fu_b, 1e-15);
        check_close(fv_a, fv_b, 1e-15);
      }
      {
        std::vector<double> gu_a(n), gv_a(n), gu_b(n), gv_b(n);
        std::array<std::vector<double>, 4> ca, cb;
        double* pa[4];
        double* pb[4];
        for (int l = 0; l < 4; ++l) {
          ca[l].assign(n, 0.0);
          cb[l].assign(n, 0.0);
          pa[l] = ca[l].data();
          pb[l] = cb[l].data();
        }
        ref.face_flux_vjp(n, dl, dr, in.ul.data(), in.ur.data(), in.vl.data(), in.vr.data(), 0.8, in.bfu.data(),
                          in.bfv.data(), gu_a.data(), gv_a.data(), pa);
        simd.face_flux_vjp(n, dl, dr, in.ul.data(), in.ur.data(), in.vl.data(), in.vr.data(), 0.8, in.bfu.data(),
                           in.bfv.data(), gu_b.data(), gv_b.data(), pb);
        check_close(gu_a, gu_b, 1e-15);
        check_close(gv_a, gv_b, 1e-15);
        for (int l = 0; l < 4; ++l) check_close(ca[l], cb[l], 1e-15);
      }
    }
  }
}

}  // namespace

TEST_CASE("scalar face flux matches its definition") {
  const Inputs in = make_inputs(9, 3, 7);
  const double* dl[4] = {in.dl[0].data(), in.dl[1].data(), in.dl[2].data(), in.dl[3].data()};
  const double* dr[4] = {in.dr[0].data(), in.dr[1].data(), in.dr[2].data(), in.dr[3].data()};
  std::vector<double> fu(9), fv(9);
  kernels::scalar_table().face_flux(9, dl, dr, in.ul.data(), in.ur.data(), in.vl.data(), in.vr.data(), 2.0, fu.data(),
                                    fv.data());
  for (std::size_t f = 0; f < 9; ++f) {
    double a[4];
    for (int l = 0; l < 4; ++l) a[l] = 0.5 * (in.dl[l][f] + in.dr[l][f]);
    const double gu = (in.ur[f] - in.ul[f]) * 2.0, gv = (in.vr[f] - in.vl[f]) * 2.0;
    CHECK(fu[f] == doctest::Approx(a[0] * gu + a[1] * gv).epsilon(1e-15));
    CHECK(fv[f] == doctest::Approx(a[2] * gu + a[3] * gv).epsilon(1e-15));
  }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  const KernelTable* simd = kernels::avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2 kernels unavailable on this machine; skipped");
    return;
  }
  compare_tables(kernels::scalar_table(), *simd);
}

TEST_CASE("AVX2 exp handles extreme and non-finite arguments") {
  const KernelTable* simd = kernels::avx2_table();
  if (simd == nullptr) return;
  const std::vector<double> centers{0.0, 1.0};
  const kernels::RbfShape shape{centers.data(), 2, 1.0};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> v{0.0, 30.0, -1e3, 1e200, nan, 0.5, 26.6, 27.0};
  std::vector<double> a(v.size() * 2), b(v.size() * 2);
  kernels::scalar_table().rbf_basis_matrix(shape, v.data(), v.size(), a.data());
  simd->rbf_basis_matrix(shape, v.data(), v.size(), b.data());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i])) {
      CHECK(std::isnan(b[i]));
    } else {
      CHECK(std::abs(a[i] - b[i]) <= 1e-15 * (std::abs(a[i]) + std::numeric_limits<double>::min()));
    }
  }
}

TEST_CASE("active table can be switched") {
  const KernelTable& before = kernels::active();
  kernels::set_active(kernels::scalar_table());
  CHECK(kernels::active().name == kernels::scalar_table().name);
  kernels::set_active(before);
  CHECK(kernels::active().name == before.name);
}
