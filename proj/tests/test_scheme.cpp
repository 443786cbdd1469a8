#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "xdiff/error.hpp"
#include "xdiff/scheme.hpp"

using namespace xdiff;
using xdiff::testing::random_field;
using xdiff::testing::random_state;

namespace {

RbfBasis small_basis() { return RbfBasis::equidistant(-5, 5, 11, 0.75); }

SchemeConfig config(const Grid& g, int theta, double dt, double lambda = 0.0, int steps = 1) {
  SchemeConfig c;
  c.grid = g;
  c.theta = theta;
  c.dt = dt;
  c.lambda = lambda;
  c.steps = steps;
  return c;
}

// Only the center at 0 is active, so d_l(0) = coefficient exactly.
InfluenceSet point_set(double d1, double d2, double d3, double d4) {
  const RbfBasis b = RbfBasis::equidistant(0, 40, 2, 0.5);
  InfluenceSet s(b);
  s.deltas[0][0] = d1;
  s.deltas[1][0] = d2;
  s.deltas[2][0] = d3;
  s.deltas[3][0] = d4;
  return s;
}

// Variable-coefficient heat stencil with mirrored ghosts.
ScalarField heat_term(const ScalarField& f, const std::vector<double>& d) {
  const Grid& g = f.grid();
  ScalarField out(g);
  for (int j1 = 0; j1 < g.n1; ++j1)
    for (int j2 = 0; j2 < g.n2; ++j2) {
      double acc = 0.0;
      for (int axis = 1; axis <= 2; ++axis) {
        const int n = g.count(axis);
        const int j = axis == 1 ? j1 : j2;
        auto idx = [&](int k) {
          if (k < 0) k = 1;
          if (k > n - 1) k = n - 2;
          return axis == 1 ? g.index(k, j2) : g.index(j1, k);
        };
        const double h = g.spacing(axis);
        const double fp = 0.5 * (d[idx(j)] + d[idx(j + 1)]) * (f[idx(j + 1)] - f[idx(j)]) / h;
        const double fm = 0.5 * (d[idx(j - 1)] + d[idx(j)]) * (f[idx(j)] - f[idx(j - 1)]) / h;
        acc += (fp - fm) / h;
      }
      out(j1, j2) = acc;
    }
  return out;
}

double max_abs_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.u.size(); ++j) m = std::max({m, std::abs(a.u[j] - b.u[j]), std::abs(a.v[j] - b.v[j])});
  return m;
}

}  // namespace

TEST_CASE("config validation") {
  SchemeConfig c = config(Grid(3, 3), 0, 0.1);
  CHECK_NOTHROW(c.validate());
  c.theta = 2;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.theta = 1;
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.dt = 0.1;
  c.lambda = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("half_point_coefficients") {
  std::mt19937_64 rng(31);
  const InfluenceSet set = xdiff::testing::random_set(small_basis(), rng);
  SUBCASE("constant v") {
    const Grid g(4, 3);
    VectorField w(g);
    for (auto& x : w.v.values()) x = 0.8;
    for (int axis = 1; axis <= 2; ++axis) {
      const auto faces = half_point_coefficients(set, w, axis);
      for (int l = 0; l < 4; ++l)
        for (double x : faces[l].values()) CHECK(x == doctest::Approx(eval(set, l + 1, 0.8)).epsilon(1e-14));
    }
  }
  SUBCASE("face value is the mean of node values, not the value at the midpoint") {
    const Grid g(2, 2);
    VectorField w(g);
    w.v(0, 0) = 0.0;
    w.v(1, 0) = 2.0;
    const auto faces = half_point_coefficients(set, w, 1);
    const double mean = 0.5 * (eval(set, 1, 0.0) + eval(set, 1, 2.0));
    CHECK(faces[0](0, 0) == doctest::Approx(mean).epsilon(1e-14));
    CHECK(std::abs(faces[0](0, 0) - eval(set, 1, 1.0)) > 1e-6);
  }
  SUBCASE("loop oracle") {
    const Grid g(5, 5);
    const VectorField w = random_state(g, rng, 3.0);
    for (int axis = 1; axis <= 2; ++axis) {
      const auto faces = half_point_coefficients(set, w, axis);
      for (int l = 0; l < 4; ++l)
        for (int r = 0; r < faces[l].rows(); ++r)
          for (int c = 0; c < faces[l].cols(); ++c) {
            const double a = w.v(r, c);
            const double b = axis == 1 ? w.v(r + 1, c) : w.v(r, c + 1);
            CHECK(std::abs(faces[l](r, c) - 0.5 * (eval(set, l + 1, a) + eval(set, l + 1, b))) <= 1e-15);
          }
    }
  }
}

TEST_CASE("coefficient locality") {
  std::mt19937_64 rng(32);
  const InfluenceSet set = xdiff::testing::random_set(small_basis(), rng);
  const Grid g(5, 6);
  VectorField w = random_state(g, rng, 2.0);
  const auto before1 = half_point_coefficients(set, w, 1);
  const auto before2 = half_point_coefficients(set, w, 2);
  w.v(2, 3) += 0.5;
  const auto after1 = half_point_coefficients(set, w, 1);
  const auto after2 = half_point_coefficients(set, w, 2);
  for (int r = 0; r < before1[0].rows(); ++r)
    for (int c = 0; c < before1[0].cols(); ++c) {
      const bool incident = c == 3 && (r == 1 || r == 2);
      CHECK((before1[0](r, c) != after1[0](r, c)) == incident);
    }
  for (int r = 0; r < before2[0].rows(); ++r)
    for (int c = 0; c < before2[0].cols(); ++c) {
      const bool incident = r == 2 && (c == 2 || c == 3);
      CHECK((before2[0](r, c) != after2[0](r, c)) == incident);
    }
}

TEST_CASE("explicit_step") {
  std::mt19937_64 rng(33);
  const Grid g(6, 6);
  SUBCASE("constant state with U = u0 is a fixed point") {
    const InfluenceSet set = xdiff::testing::random_set(small_basis(), rng);
    const VectorField w(ScalarField(g, 4.2), ScalarField(g, -1.3));
    const VectorField out = explicit_step(w, w.u, set, config(g, 0, 0.1, 0.7));
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(out.u[j] == w.u[j]);
      CHECK(out.v[j] == w.v[j]);
    }
  }
  SUBCASE("decoupled heat steps") {
    InfluenceSet set = xdiff::testing::random_set(small_basis(), rng);
    for (auto& x : set.deltas[1]) x = 0.0;
    for (auto& x : set.deltas[2]) x = 0.0;
    const VectorField w = random_state(g, rng, 2.0);
    const VectorField out = explicit_step(w, w.u, set, config(g, 0, 0.05));
    std::vector<double> d1(g.size()), d4(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      d1[j] = eval(set, 1, w.v[j]);
      d4[j] = eval(set, 4, w.v[j]);
    }
    const ScalarField hu = heat_term(w.u, d1), hv = heat_term(w.v, d4);
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(std::abs(out.u[j] - (w.u[j] + 0.05 * hu[j])) <= 1e-14);
      CHECK(std::abs(out.v[j] - (w.v[j] + 0.05 * hv[j])) <= 1e-14);
    }
  }
  SUBCASE("pure reaction") {
    const InfluenceSet zero(small_basis());
    const ScalarField u0 = random_field(g, rng);
    ScalarField um(g);
    for (std::size_t j = 0; j < g.size(); ++j) um[j] = u0[j] + 1.0;
    const VectorField out = explicit_step(VectorField(um, ScalarField(g)), u0, zero, config(g, 0, 0.1, 1.0));
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(out.u[j] == doctest::Approx(um[j] - 0.1).epsilon(1e-15));
  }
  SUBCASE("rejects theta = 1 and non-finite input") {
    const InfluenceSet zero(small_basis());
    VectorField w(g);
    CHECK_THROWS_AS(explicit_step(w, w.u, zero, config(g, 1, 0.1)), InvalidArgument);
    w.u[3] = std::nan("");
    CHECK_THROWS_AS(explicit_step(w, w.u, zero, config(g, 0, 0.1)), NumericalError);
  }
}

TEST_CASE("matrix form equals the stencil") {
  std::mt19937_64 rng(34);
  const Grid g(6, 6, 1.0, 0.8);
  const InfluenceSet set = xdiff::testing::random_set(small_basis(), rng);
  SUBCASE("random state") {
    const VectorField w = random_state(g, rng, 3.0);
    const SparseMatrix op = assemble_matrix_form(set, w, g);
    const auto cat = w.concatenated();
    const Eigen::VectorXd applied = op * Eigen::Map<const Eigen::VectorXd>(cat.data(), cat.size());
    const VectorField stencil = diffusion_term(w, set);
    const auto n = static_cast<Eigen::Index>(g.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      CHECK(std::abs(applied(j) - stencil.u[j]) <= 1e-12);
      CHECK(std::abs(applied(n + j) - stencil.v[j]) <= 1e-12);
    }
    const SparseMatrix direct = assemble_stencil_operator(set, w, g);
    CHECK(Eigen::MatrixXd(op - direct).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("constant state maps to zero") {
    const VectorField w(ScalarField(g, 2.0), ScalarField(g, 0.3));
    const auto cat = w.concatenated();
    const Eigen::VectorXd applied =
        assemble_matrix_form(set, w, g) * Eigen::Map<const Eigen::VectorXd>(cat.data(), cat.size());
    CHECK(applied.cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("no cross coupling gives a block-diagonal operator") {
    InfluenceSet diag = set;
    for (auto& x : diag.deltas[1]) x = 0.0;
    for (auto& x : diag.deltas[2]) x = 0.0;
    const VectorField w = random_state(g, rng, 3.0);
    const Eigen::MatrixXd dense(assemble_matrix_form(diag, w, g));
    const auto n = static_cast<Eigen::Index>(g.size());
    CHECK(dense.topRightCorner(n, n).cwiseAbs().maxCoeff() == 0.0);
    CHECK(dense.bottomLeftCorner(n, n).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("semi_implicit_step") {
  std::mt19937_64 rng(35);
  SUBCASE("constant state with U = u0 is a fixed point") {
    const Grid g(5, 7);
    const InfluenceSet set = xdiff::testing::random_feasible_set(small_basis(), rng);
    const VectorField w(ScalarField(g, 3.0), ScalarField(g, 0.4));
    const VectorField out = semi_implicit_step(w, w.u, set, config(g, 1, 0.2, 0.5));
    CHECK(max_abs_diff(out, w) <= 1e-10);
  }
  SUBCASE("backward Euler heat step against a dense solve") {
    const Grid g(5, 5);
    const InfluenceSet set = point_set(1.0, 0.0, 0.0, 1.0);
    VectorField w(g);
    w.u = random_field(g, rng);
    const double dt = 0.3;
    const VectorField out = semi_implicit_step(w, w.u, set, config(g, 1, dt));
    // Dense Neumann Laplacian with mirrored ghosts.
    const int n = static_cast<int>(g.size());
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (int j1 = 0; j1 < 5; ++j1)
      for (int j2 = 0; j2 < 5; ++j2) {
        const int row = static_cast<int>(g.index(j1, j2));
        auto add = [&](int k1, int k2) {
          k1 = k1 < 0 ? 1 : (k1 > 4 ? 3 : k1);
          k2 = k2 < 0 ? 1 : (k2 > 4 ? 3 : k2);
          lap(row, static_cast<int>(g.index(k1, k2))) += 1.0;
          lap(row, row) -= 1.0;
        };
        add(j1 - 1, j2);
        add(j1 + 1, j2);
        add(j1, j2 - 1);
        add(j1, j2 + 1);
      }
    const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(w.u.data(), n);
    const Eigen::VectorXd expect = (Eigen::MatrixXd::Identity(n, n) - dt * lap).partialPivLu().solve(u);
    for (int j = 0; j < n; ++j) {
      CHECK(std::abs(out.u[j] - expect(j)) <= 1e-12);
      CHECK(out.v[j] == doctest::Approx(0.0));
    }
  }
  SUBCASE("first order agreement with the explicit step") {
    const Grid g(8, 8);
    const InfluenceSet set = init_ncdf(RbfBasis::standard());
    VectorField w(g);
    for (int j1 = 0; j1 < 8; ++j1)
      for (int j2 = 0; j2 < 8; ++j2) {
        w.u(j1, j2) = std::sin(0.4 * j1) * std::cos(0.3 * j2);
        w.v(j1, j2) = 0.2 * std::cos(0.5 * j1 + 0.2 * j2);
      }
    auto gap = [&](double dt) {
      return max_abs_diff(semi_implicit_step(w, w.u, set, config(g, 1, dt, 0.1)),
                          explicit_step(w, w.u, set, config(g, 0, dt, 0.1)));
    };
    const double ratio = gap(0.02) / gap(0.01);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("residual contract") {
    const Grid g(8, 8);
    const InfluenceSet set = xdiff::testing::random_feasible_set(small_basis(), rng);
    const VectorField w = random_state(g, rng, 2.0);
    const ScalarField u0 = random_field(g, rng);
    const SchemeConfig c = config(g, 1, 0.3, 0.2);
    const LinearSystem sys = semi_implicit_system(assemble_stencil_operator(set, w, g), w, u0, c);
    SemiImplicitSolver solver;
    const Eigen::VectorXd x = solver.solve(sys);
    CHECK(relative_residual(sys, x) <= SemiImplicitSolver::kResidualTolerance);
    const Eigen::VectorXd again = solver.solve(sys);
    CHECK((x - again).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("run") {
  std::mt19937_64 rng(36);
  const Grid g(6, 5);
  const InfluenceSet set = xdiff::testing::random_feasible_set(small_basis(), rng);
  const ScalarField u0 = random_field(g, rng, -2, 2);
  SUBCASE("zero steps returns the initial state") {
    const VectorField out = run(u0, set, config(g, 1, 0.1, 0.0, 0));
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(out.u[j] == u0[j]);
      CHECK(out.v[j] == 0.0);
    }
  }
  SUBCASE("three explicit steps compose") {
    const SchemeConfig c = config(g, 0, 0.05, 0.3, 3);
    const StepTrace trace = run_trace(u0, set, c);
    REQUIRE(trace.states.size() == 4);
    VectorField w = initial_state(u0);
    for (int m = 0; m < 3; ++m) w = explicit_step(w, u0, set, c);
    CHECK(max_abs_diff(w, trace.states.back()) == 0.0);
    CHECK(max_abs_diff(run(u0, set, c), w) == 0.0);
  }
  SUBCASE("blow-up is reported with the step index") {
    InfluenceSet wild(small_basis());
    for (auto& x : wild.deltas[0]) x = 1e3;
    for (auto& x : wild.deltas[3]) x = 1e3;
    const SchemeConfig c = config(g, 0, 10.0, 0.0, 400);
    try {
      (void)run(u0, wild, c);
      FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).rfind("step ", 0) == 0);
    }
  }
}

TEST_CASE("semi-implicit rollout on a noisy 64x64 image stays finite") {
  std::mt19937_64 rng(37);
  const Grid g(64, 64);
  ScalarField u0(g);
  std::normal_distribution<double> noise(0.0, 10.0);
  for (int j1 = 0; j1 < 64; ++j1)
    for (int j2 = 0; j2 < 64; ++j2) u0(j1, j2) = (j1 < 32 ? 60.0 : 190.0) + noise(rng);
  const InfluenceSet set = init_ncdf(RbfBasis::standard());
  const VectorField out = run(u0, set, config(g, 1, 0.1, 0.1, 10));
  CHECK(out.all_finite());
  CHECK(norm_h(out) <= norm_h(initial_state(u0)) * 1.01);
}
