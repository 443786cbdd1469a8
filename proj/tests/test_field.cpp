#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "xdiff/error.hpp"
#include "xdiff/field.hpp"

using namespace xdiff;
using xdiff::testing::random_field;

namespace {

// Face average of a node diffusivity.
HalfPointField averaged(const ScalarField& d, int axis) {
  const Grid& g = d.grid();
  HalfPointField out(g, axis);
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c)
      out(r, c) = axis == 1 ? 0.5 * (d(r, c) + d(r + 1, c)) : 0.5 * (d(r, c) + d(r, c + 1));
  return out;
}

// Five-point stencil with ghost nodes x_j -/+ e_k mirrored inside.
double ghost_stencil(const ScalarField& f, const ScalarField& d, int j1, int j2, int axis) {
  const Grid& g = f.grid();
  const int n = g.count(axis);
  const int j = axis == 1 ? j1 : j2;
  auto at = [&](const ScalarField& x, int k) {
    if (k < 0) k = 1;
    if (k > n - 1) k = n - 2;
    return axis == 1 ? x(k, j2) : x(j1, k);
  };
  const double h = g.spacing(axis);
  const double fp = 0.5 * (at(d, j) + at(d, j + 1)) * (at(f, j + 1) - at(f, j)) / h;
  const double fm = 0.5 * (at(d, j - 1) + at(d, j)) * (at(f, j) - at(f, j - 1)) / h;
  return (fp - fm) / h;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(1, 4), InvalidArgument);
  CHECK_THROWS_AS(Grid(4, 4, 0.0, 1.0), InvalidArgument);
  const Grid g(3, 5, 0.5, 2.0);
  CHECK(g.size() == 15);
  CHECK(g.face_count(1) == 10);
  CHECK(g.face_count(2) == 12);
}

TEST_CASE("forward_diff") {
  const Grid g(5, 4, 0.5, 0.25);
  SUBCASE("constant field gives zero") {
    const auto df = forward_diff(ScalarField(g, 3.7), 1);
    for (double x : df.values()) CHECK(x == 0.0);
  }
  SUBCASE("ramp along axis 1 gives ones") {
    ScalarField f(g);
    for (int j1 = 0; j1 < g.n1; ++j1)
      for (int j2 = 0; j2 < g.n2; ++j2) f(j1, j2) = j1 * g.h1;
    const auto df = forward_diff(f, 1);
    CHECK(df.size() == 16);
    for (double x : df.values()) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("loop oracle") {
    std::mt19937_64 rng(11);
    const ScalarField f = random_field(g, rng);
    for (int axis = 1; axis <= 2; ++axis) {
      const auto df = forward_diff(f, axis);
      for (int r = 0; r < df.rows(); ++r)
        for (int c = 0; c < df.cols(); ++c) {
          const double expect = axis == 1 ? (f(r + 1, c) - f(r, c)) / g.h1 : (f(r, c + 1) - f(r, c)) / g.h2;
          CHECK(std::abs(df(r, c) - expect) <= 1e-15);
        }
    }
  }
  CHECK_THROWS_AS(forward_diff(ScalarField(g), 3), InvalidArgument);
}

TEST_CASE("backward_div reproduces the ghost-point stencil") {
  std::mt19937_64 rng(12);
  const Grid g(6, 6, 1.0, 0.7);
  const ScalarField f = random_field(g, rng);
  const ScalarField d = random_field(g, rng, 0.1, 2.0);
  for (int axis = 1; axis <= 2; ++axis) {
    const ScalarField got = backward_div(averaged(d, axis) * forward_diff(f, axis));
    for (int j1 = 0; j1 < g.n1; ++j1)
      for (int j2 = 0; j2 < g.n2; ++j2) CHECK(std::abs(got(j1, j2) - ghost_stencil(f, d, j1, j2, axis)) <= 1e-15);
  }
}

TEST_CASE("backward_div trivial cases") {
  const Grid g(4, 5);
  const ScalarField zero = backward_div(HalfPointField(g, 2));
  for (double x : zero.values()) CHECK(x == 0.0);
  std::mt19937_64 rng(13);
  const ScalarField d = random_field(g, rng);
  for (int axis = 1; axis <= 2; ++axis) {
    const ScalarField out = backward_div(averaged(d, axis) * forward_diff(ScalarField(g, -2.5), axis));
    for (double x : out.values()) CHECK(x == 0.0);
  }
}

TEST_CASE("summation by parts") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g(2 + trial % 7, 2 + (trial * 3) % 7, 0.5 + 0.1 * trial, 1.3);
    const ScalarField f = random_field(g, rng);
    const ScalarField q = random_field(g, rng);
    const ScalarField d = random_field(g, rng, 0.0, 3.0);
    double lhs = 0.0, rhs = 0.0;
    for (int axis = 1; axis <= 2; ++axis) {
      const HalfPointField flux = averaged(d, axis) * forward_diff(f, axis);
      lhs += inner_h(backward_div(flux), q);
      rhs -= inner_h_star(flux, forward_diff(q, axis));
    }
    CHECK(std::abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("stencil operators are linear") {
  std::mt19937_64 rng(15);
  const Grid g(7, 5);
  const ScalarField a = random_field(g, rng), b = random_field(g, rng);
  ScalarField mix(g);
  for (std::size_t j = 0; j < g.size(); ++j) mix[j] = 2.0 * a[j] - 0.5 * b[j];
  const ScalarField d = random_field(g, rng, 0.0, 1.0);
  for (int axis = 1; axis <= 2; ++axis) {
    const auto fa = backward_div(averaged(d, axis) * forward_diff(a, axis));
    const auto fb = backward_div(averaged(d, axis) * forward_diff(b, axis));
    const auto fm = backward_div(averaged(d, axis) * forward_diff(mix, axis));
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(fm[j] - (2.0 * fa[j] - 0.5 * fb[j])) <= 1e-14);
  }
}

TEST_CASE("norm_h") {
  SUBCASE("unit square, U = 1") {
    const Grid g(5, 9, 0.25, 0.125);
    VectorField w(g);
    for (auto& x : w.u.values()) x = 1.0;
    CHECK(norm_h(w) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("U = V = c") {
    const Grid g(4, 6, 0.5, 0.3);
    const double c = 1.7;
    const VectorField w(ScalarField(g, c), ScalarField(g, c));
    const double area = (g.n1 - 1) * g.h1 * (g.n2 - 1) * g.h2;
    CHECK(norm_h(w) == doctest::Approx(c * std::sqrt(2.0) * std::sqrt(area)).epsilon(1e-14));
  }
  SUBCASE("cell-sum oracle") {
    std::mt19937_64 rng(16);
    const Grid g(4, 4, 0.7, 1.1);
    const VectorField w = xdiff::testing::random_state(g, rng);
    double sum = 0.0;
    for (int j1 = 0; j1 + 1 < g.n1; ++j1)
      for (int j2 = 0; j2 + 1 < g.n2; ++j2)
        for (const ScalarField* f : {&w.u, &w.v}) {
          const double corners = std::pow((*f)(j1, j2), 2) + std::pow((*f)(j1 + 1, j2), 2) +
                                 std::pow((*f)(j1, j2 + 1), 2) + std::pow((*f)(j1 + 1, j2 + 1), 2);
          sum += g.cell_area() / 4.0 * corners;
        }
    CHECK(std::abs(norm_h(w) - std::sqrt(sum)) <= 1e-14);
  }
}

TEST_CASE("norm_h_star") {
  const Grid g(3, 3, 0.5, 0.5);
  CHECK(norm_h_star(HalfPointField(g, 1), 1) == 0.0);
  CHECK(norm_h_star(HalfPointField(g, 1, 1.0), 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(norm_h_star(HalfPointField(g, 2, 1.0), 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(norm_h_star(HalfPointField(g, 2, 1.0), 1), InvalidArgument);

  std::mt19937_64 rng(17);
  const Grid r(5, 4, 0.3, 0.9);
  for (int axis = 1; axis <= 2; ++axis) {
    HalfPointField f(r, axis);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (auto& x : f.values()) x = dist(rng);
    // Each cell contributes |cell| / 2 times the squares of its two faces.
    double sum = 0.0;
    for (int j1 = 0; j1 + 1 < r.n1; ++j1)
      for (int j2 = 0; j2 + 1 < r.n2; ++j2) {
        const double a = axis == 1 ? f(j1, j2) : f(j1, j2);
        const double b = axis == 1 ? f(j1, j2 + 1) : f(j1 + 1, j2);
        sum += r.cell_area() / 2.0 * (a * a + b * b);
      }
    CHECK(std::abs(norm_h_star(f, axis) - std::sqrt(sum)) <= 1e-14);
  }
}

TEST_CASE("vector field concatenation round trip") {
  std::mt19937_64 rng(18);
  const Grid g(3, 4);
  const VectorField w = xdiff::testing::random_state(g, rng);
  const auto cat = w.concatenated();
  REQUIRE(cat.size() == 24);
  CHECK(cat[0] == w.u[0]);
  CHECK(cat[12] == w.v[0]);
  const VectorField back = VectorField::from_concatenated(g, cat);
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK(back.u[j] == w.u[j]);
    CHECK(back.v[j] == w.v[j]);
  }
}
