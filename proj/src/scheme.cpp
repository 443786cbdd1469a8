#include "xdiff/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "xdiff/error.hpp"
#include "xdiff/kernels.hpp"

namespace xdiff {

void SchemeConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("scheme: dt must be positive");
  if (steps < 0) throw InvalidArgument("scheme: steps must be non-negative");
  if (theta != 0 && theta != 1) throw InvalidArgument("scheme: theta must be 0 or 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("scheme: lambda must be non-negative");
}

namespace {

using Triplet = Eigen::Triplet<double>;

// Adds the ghost-reflected divergence of a compact face array to node values.
void add_divergence(const Grid& g, int axis, const double* flux, double* node) {
  const double inv_h = 1.0 / g.spacing(axis);
  if (axis == 1) {
    const std::size_t s = static_cast<std::size_t>(g.n2);
    const int last = g.n1 - 1;
    for (int j1 = 0; j1 < g.n1; ++j1) {
      double* out = node + static_cast<std::size_t>(j1) * s;
      if (j1 == 0) {
        for (std::size_t j2 = 0; j2 < s; ++j2) out[j2] += 2.0 * flux[j2] * inv_h;
      } else if (j1 == last) {
        const double* prev = flux + static_cast<std::size_t>(j1 - 1) * s;
        for (std::size_t j2 = 0; j2 < s; ++j2) out[j2] -= 2.0 * prev[j2] * inv_h;
      } else {
        const double* next = flux + static_cast<std::size_t>(j1) * s;
        const double* prev = next - s;
        for (std::size_t j2 = 0; j2 < s; ++j2) out[j2] += (next[j2] - prev[j2]) * inv_h;
      }
    }
  } else {
    const int nf = g.n2 - 1;
    for (int j1 = 0; j1 < g.n1; ++j1) {
      const double* f = flux + static_cast<std::size_t>(j1) * nf;
      double* out = node + static_cast<std::size_t>(j1) * g.n2;
      out[0] += 2.0 * f[0] * inv_h;
      for (int j2 = 1; j2 < nf; ++j2) out[j2] += (f[j2] - f[j2 - 1]) * inv_h;
      out[nf] -= 2.0 * f[nf - 1] * inv_h;
    }
  }
}

void check_shapes(const VectorField& w, const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg) {
  if (!(w.grid() == u0.grid())) throw InvalidArgument("scheme: state and u0 live on different grids");
  if (!(w.grid() == cfg.grid)) throw InvalidArgument("scheme: state grid differs from the configured grid");
  if (set.basis.p() < 2) throw InvalidArgument("scheme: influence set has no basis");
}

}  // namespace

std::array<HalfPointField, 4> half_point_coefficients(const InfluenceSet& set, const VectorField& w, int axis) {
  const Grid& g = w.grid();
  const NodeCoefficients d = eval_all(set, w.v.values());
  std::array<HalfPointField, 4> out{HalfPointField(g, axis), HalfPointField(g, axis), HalfPointField(g, axis),
                                    HalfPointField(g, axis)};
  for (int l = 0; l < 4; ++l) {
    HalfPointField& face = out[static_cast<std::size_t>(l)];
    for (int j1 = 0; j1 < face.rows(); ++j1)
      for (int j2 = 0; j2 < face.cols(); ++j2) {
        const std::size_t a = g.index(j1, j2);
        const std::size_t b = axis == 1 ? g.index(j1 + 1, j2) : g.index(j1, j2 + 1);
        face(j1, j2) = 0.5 * (d.d[l][a] + d.d[l][b]);
      }
  }
  return out;
}

VectorField diffusion_term(const VectorField& w, const NodeCoefficients& d) {
  const Grid& g = w.grid();
  VectorField out(g);
  const kernels::KernelTable& k = kernels::active();
  const double* U = w.u.data();
  const double* V = w.v.data();

  {
    const std::size_t nf = g.face_count(1);
    const std::size_t s = static_cast<std::size_t>(g.n2);
    std::vector<double> fu(nf), fv(nf);
    const double* dl[4] = {d.d[0].data(), d.d[1].data(), d.d[2].data(), d.d[3].data()};
    const double* dr[4] = {dl[0] + s, dl[1] + s, dl[2] + s, dl[3] + s};
    k.face_flux(nf, dl, dr, U, U + s, V, V + s, 1.0 / g.h1, fu.data(), fv.data());
    add_divergence(g, 1, fu.data(), out.u.data());
    add_divergence(g, 1, fv.data(), out.v.data());
  }
  {
    const std::size_t nf = g.face_count(2);
    const std::size_t row = static_cast<std::size_t>(g.n2 - 1);
    std::vector<double> fu(nf), fv(nf);
    for (int j1 = 0; j1 < g.n1; ++j1) {
      const std::size_t base = static_cast<std::size_t>(j1) * g.n2;
      const double* dl[4] = {d.d[0].data() + base, d.d[1].data() + base, d.d[2].data() + base, d.d[3].data() + base};
      const double* dr[4] = {dl[0] + 1, dl[1] + 1, dl[2] + 1, dl[3] + 1};
      k.face_flux(row, dl, dr, U + base, U + base + 1, V + base, V + base + 1, 1.0 / g.h2, fu.data() + j1 * row,
                  fv.data() + j1 * row);
    }
    add_divergence(g, 2, fu.data(), out.u.data());
    add_divergence(g, 2, fv.data(), out.v.data());
  }
  return out;
}

VectorField diffusion_term(const VectorField& w, const InfluenceSet& set) {
  return diffusion_term(w, eval_all(set, w.v.values()));
}

VectorField explicit_step(const VectorField& w, const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg) {
  if (cfg.theta != 0) throw InvalidArgument("explicit_step requires theta = 0");
  check_shapes(w, u0, set, cfg);
  if (!w.all_finite()) throw NumericalError("explicit_step: non-finite input state");
  VectorField out = diffusion_term(w, set);
  const std::size_t n = w.grid().size();
  for (std::size_t j = 0; j < n; ++j) {
    out.u[j] = w.u[j] + cfg.dt * (out.u[j] - cfg.lambda * (w.u[j] - u0[j]));
    out.v[j] = w.v[j] + cfg.dt * out.v[j];
  }
  return out;
}

SparseMatrix face_gradient_matrix(const Grid& g, int axis) {
  const double inv_h = 1.0 / g.spacing(axis);
  const std::size_t n = g.size();
  std::vector<Triplet> t;
  t.reserve(2 * n);
  for (int j1 = 0; j1 < g.n1; ++j1)
    for (int j2 = 0; j2 < g.n2; ++j2) {
      if ((axis == 1 && j1 == g.n1 - 1) || (axis == 2 && j2 == g.n2 - 1)) continue;
      const auto row = static_cast<Eigen::Index>(g.index(j1, j2));
      const auto next = static_cast<Eigen::Index>(axis == 1 ? g.index(j1 + 1, j2) : g.index(j1, j2 + 1));
      t.emplace_back(row, row, -inv_h);
      t.emplace_back(row, next, inv_h);
    }
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix node_divergence_matrix(const Grid& g, int axis) {
  const double inv_h = 1.0 / g.spacing(axis);
  const int count = g.count(axis);
  const std::size_t n = g.size();
  std::vector<Triplet> t;
  t.reserve(2 * n);
  for (int j1 = 0; j1 < g.n1; ++j1)
    for (int j2 = 0; j2 < g.n2; ++j2) {
      const int j = axis == 1 ? j1 : j2;
      const auto row = static_cast<Eigen::Index>(g.index(j1, j2));
      const auto prev = [&] {
        return static_cast<Eigen::Index>(axis == 1 ? g.index(j1 - 1, j2) : g.index(j1, j2 - 1));
      };
      if (j == 0) {
        t.emplace_back(row, row, 2.0 * inv_h);
      } else if (j == count - 1) {
        t.emplace_back(row, prev(), -2.0 * inv_h);
      } else {
        t.emplace_back(row, row, inv_h);
        t.emplace_back(row, prev(), -inv_h);
      }
    }
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix face_averaging_matrix(const Grid& g, int axis) {
  const std::size_t n = g.size();
  std::vector<Triplet> t;
  t.reserve(2 * n);
  for (int j1 = 0; j1 < g.n1; ++j1)
    for (int j2 = 0; j2 < g.n2; ++j2) {
      if ((axis == 1 && j1 == g.n1 - 1) || (axis == 2 && j2 == g.n2 - 1)) continue;
      const auto row = static_cast<Eigen::Index>(g.index(j1, j2));
      const auto next = static_cast<Eigen::Index>(axis == 1 ? g.index(j1 + 1, j2) : g.index(j1, j2 + 1));
      t.emplace_back(row, row, 0.5);
      t.emplace_back(row, next, 0.5);
    }
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

namespace {

SparseMatrix block_diag(const SparseMatrix& a, const SparseMatrix& b) {
  const Eigen::Index n = a.rows();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() + b.nonZeros()));
  for (Eigen::Index c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index c = 0; c < b.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(b, c); it; ++it) t.emplace_back(it.row() + n, it.col() + n, it.value());
  SparseMatrix m(2 * n, 2 * n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// [[0, a], [b, 0]]
SparseMatrix block_antidiag(const SparseMatrix& a, const SparseMatrix& b) {
  const Eigen::Index n = a.rows();
  std::vector<Triplet> t;
  for (Eigen::Index c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) t.emplace_back(it.row(), it.col() + n, it.value());
  for (Eigen::Index c = 0; c < b.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(b, c); it; ++it) t.emplace_back(it.row() + n, it.col(), it.value());
  SparseMatrix m(2 * n, 2 * n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix diagonal(const Eigen::VectorXd& values) {
  SparseMatrix m(values.size(), values.size());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) t.emplace_back(i, i, values(i));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

SparseMatrix assemble_matrix_form(const InfluenceSet& set, const VectorField& w, const Grid& grid) {
  if (!(w.grid() == grid)) throw InvalidArgument("assemble_matrix_form: grid mismatch");
  const NodeCoefficients d = eval_all(set, w.v.values());
  const auto n = static_cast<Eigen::Index>(grid.size());
  auto node_vector = [&](int l) { return Eigen::Map<const Eigen::VectorXd>(d.d[l].data(), n); };

  SparseMatrix op(2 * n, 2 * n);
  for (int axis = 1; axis <= 2; ++axis) {
    const SparseMatrix kr = face_gradient_matrix(grid, axis);
    const SparseMatrix kl = node_divergence_matrix(grid, axis);
    const SparseMatrix avg = face_averaging_matrix(grid, axis);

    Eigen::VectorXd left(2 * n), right(2 * n);
    left << avg * node_vector(0), avg * node_vector(3);
    right << avg * node_vector(1), avg * node_vector(2);

    const SparseMatrix Kl = block_diag(kl, kl);
    const SparseMatrix KrL = block_diag(kr, kr);
    const SparseMatrix KrR = block_antidiag(kr, kr);
    const SparseMatrix DL = diagonal(left);
    const SparseMatrix DR = diagonal(right);
    op += SparseMatrix(Kl * (DL * KrL)) + SparseMatrix(Kl * (DR * KrR));
  }
  return op;
}

SparseMatrix assemble_stencil_operator(const InfluenceSet& set, const VectorField& w, const Grid& grid) {
  if (!(w.grid() == grid)) throw InvalidArgument("assemble_stencil_operator: grid mismatch");
  const NodeCoefficients d = eval_all(set, w.v.values());
  const auto n = static_cast<Eigen::Index>(grid.size());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n) * 20);

  for (int axis = 1; axis <= 2; ++axis) {
    const double inv_h2 = 1.0 / (grid.spacing(axis) * grid.spacing(axis));
    const int count = grid.count(axis);
    for (int j1 = 0; j1 < grid.n1; ++j1)
      for (int j2 = 0; j2 < grid.n2; ++j2) {
        const int j = axis == 1 ? j1 : j2;
        if (j == count - 1) continue;
        const auto a = static_cast<Eigen::Index>(grid.index(j1, j2));
        const auto b = static_cast<Eigen::Index>(axis == 1 ? grid.index(j1 + 1, j2) : grid.index(j1, j2 + 1));
        double face[4];
        for (int l = 0; l < 4; ++l) face[l] = 0.5 * (d.d[l][a] + d.d[l][b]);
        // Ghost reflection doubles the flux seen by boundary nodes.
        const double wa = (j == 0 ? 2.0 : 1.0) * inv_h2;
        const double wb = (j + 1 == count - 1 ? 2.0 : 1.0) * inv_h2;
        // Face flux (U row): face[0] (U_b - U_a) + face[1] (V_b - V_a);
        // (V row): face[2] (U_b - U_a) + face[3] (V_b - V_a).
        const std::array<std::pair<Eigen::Index, Eigen::Index>, 4> couplings{
            std::pair{0, 0}, std::pair{0, n}, std::pair{n, 0}, std::pair{n, n}};
        for (int l = 0; l < 4; ++l) {
          const auto [ro, co] = couplings[static_cast<std::size_t>(l)];
          t.emplace_back(ro + a, co + b, wa * face[l]);
          t.emplace_back(ro + a, co + a, -wa * face[l]);
          t.emplace_back(ro + b, co + b, -wb * face[l]);
          t.emplace_back(ro + b, co + a, wb * face[l]);
        }
      }
  }
  SparseMatrix op(2 * n, 2 * n);
  op.setFromTriplets(t.begin(), t.end());
  return op;
}

LinearSystem semi_implicit_system(const SparseMatrix& diffusion_operator, const VectorField& w, const ScalarField& u0,
                                  const SchemeConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(w.grid().size());
  if (diffusion_operator.rows() != 2 * n || diffusion_operator.cols() != 2 * n)
    throw InvalidArgument("semi_implicit_system: operator size mismatch");
  LinearSystem sys;
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(2 * n);
  diag.head(n).array() += cfg.dt * cfg.lambda;
  sys.matrix = diagonal(diag) - cfg.dt * diffusion_operator;
  sys.matrix.makeCompressed();
  sys.rhs.resize(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    sys.rhs(j) = w.u[static_cast<std::size_t>(j)] + cfg.dt * cfg.lambda * u0[static_cast<std::size_t>(j)];
    sys.rhs(n + j) = w.v[static_cast<std::size_t>(j)];
  }
  return sys;
}

double relative_residual(const LinearSystem& system, const Eigen::VectorXd& x) {
  const double rhs_norm = system.rhs.norm();
  const double res = (system.matrix * x - system.rhs).norm();
  return rhs_norm > 0.0 ? res / rhs_norm : res;
}

struct SemiImplicitSolver::Impl {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  std::vector<int> outer;
  std::vector<int> inner;

  bool same_pattern(const SparseMatrix& m) const {
    return analyzed && outer.size() == static_cast<std::size_t>(m.outerSize() + 1) &&
           inner.size() == static_cast<std::size_t>(m.nonZeros()) &&
           std::equal(outer.begin(), outer.end(), m.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), m.innerIndexPtr());
  }
};

SemiImplicitSolver::SemiImplicitSolver() : impl_(std::make_unique<Impl>()) {}
SemiImplicitSolver::~SemiImplicitSolver() = default;
SemiImplicitSolver::SemiImplicitSolver(SemiImplicitSolver&&) noexcept = default;
SemiImplicitSolver& SemiImplicitSolver::operator=(SemiImplicitSolver&&) noexcept = default;

Eigen::VectorXd SemiImplicitSolver::solve(const LinearSystem& system) {
  constexpr Eigen::Index kDirectLimit = 2 * 256 * 256;
  Eigen::VectorXd x;
  if (system.matrix.rows() <= kDirectLimit) {
    Impl& s = *impl_;
    if (!s.same_pattern(system.matrix)) {
      s.lu.analyzePattern(system.matrix);
      s.analyzed = true;
      const SparseMatrix& m = system.matrix;
      s.outer.assign(m.outerIndexPtr(), m.outerIndexPtr() + m.outerSize() + 1);
      s.inner.assign(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
    }
    s.lu.factorize(system.matrix);
    if (s.lu.info() != Eigen::Success) throw NumericalError("semi-implicit system: sparse LU factorization failed");
    x = s.lu.solve(system.rhs);
    // One step of iterative refinement when the direct solve is borderline.
    if (relative_residual(system, x) > kResidualTolerance) x += s.lu.solve(system.rhs - system.matrix * x);
  } else {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> krylov;
    krylov.setTolerance(1e-12);
    krylov.setMaxIterations(10000);
    krylov.compute(system.matrix);
    x = krylov.solve(system.rhs);
  }
  const double res = relative_residual(system, x);
  if (!(res <= kResidualTolerance))
    throw NumericalError("semi-implicit system: relative residual " + std::to_string(res) + " above tolerance");
  return x;
}

namespace {

VectorField semi_implicit_step_with(SemiImplicitSolver& solver, const VectorField& w, const ScalarField& u0,
                                    const InfluenceSet& set, const SchemeConfig& cfg) {
  if (cfg.theta != 1) throw InvalidArgument("semi_implicit_step requires theta = 1");
  check_shapes(w, u0, set, cfg);
  if (!w.all_finite()) throw NumericalError("semi_implicit_step: non-finite input state");
  const LinearSystem sys = semi_implicit_system(assemble_stencil_operator(set, w, cfg.grid), w, u0, cfg);
  const Eigen::VectorXd x = solver.solve(sys);
  return VectorField::from_concatenated(cfg.grid, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

}  // namespace

VectorField semi_implicit_step(const VectorField& w, const ScalarField& u0, const InfluenceSet& set,
                               const SchemeConfig& cfg) {
  SemiImplicitSolver solver;
  return semi_implicit_step_with(solver, w, u0, set, cfg);
}

VectorField step(const VectorField& w, const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg) {
  return cfg.theta == 0 ? explicit_step(w, u0, set, cfg) : semi_implicit_step(w, u0, set, cfg);
}

VectorField initial_state(const ScalarField& u0) { return VectorField(u0, ScalarField(u0.grid())); }

namespace {

template <typename Sink>
void rollout(const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg, Sink&& sink) {
  cfg.validate();
  if (!(u0.grid() == cfg.grid)) throw InvalidArgument("run: u0 grid differs from the configured grid");
  VectorField w = initial_state(u0);
  if (!w.all_finite()) throw NumericalError("run: initial image contains non-finite values");
  SemiImplicitSolver solver;
  sink(w);
  for (int m = 0; m < cfg.steps; ++m) {
    try {
      w = cfg.theta == 0 ? explicit_step(w, u0, set, cfg) : semi_implicit_step_with(solver, w, u0, set, cfg);
    } catch (const NumericalError& e) {
      throw NumericalError("step " + std::to_string(m + 1) + ": " + e.what());
    }
    if (!w.all_finite()) throw NumericalError("step " + std::to_string(m + 1) + ": state became non-finite");
    sink(w);
  }
}

}  // namespace

StepTrace run_trace(const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg) {
  StepTrace trace;
  trace.config = cfg;
  trace.states.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  rollout(u0, set, cfg, [&](const VectorField& w) { trace.states.push_back(w); });
  return trace;
}

VectorField run(const ScalarField& u0, const InfluenceSet& set, const SchemeConfig& cfg) {
  VectorField last;
  rollout(u0, set, cfg, [&](const VectorField& w) { last = w; });
  return last;
}

}  // namespace xdiff
