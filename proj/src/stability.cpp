#include "xdiff/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "xdiff/error.hpp"

namespace xdiff {

std::string to_string(StabilityCondition c) {
  switch (c) {
    case StabilityCondition::SemiImplicitPD: return "semi_implicit_pd";
    case StabilityCondition::ExplicitGershgorin: return "explicit_gershgorin";
    case StabilityCondition::LambdaBound: return "lambda_bound";
  }
  return "unknown";
}

std::string StabilityReport::render(const std::string& prefix) const {
  std::ostringstream out;
  out.precision(17);
  out << prefix << "condition=" << to_string(condition) << '\n';
  out << prefix << "satisfied=" << (satisfied ? "true" : "false") << '\n';
  out << prefix << "margin=" << margin << '\n';
  if (condition != StabilityCondition::LambdaBound) out << prefix << "worst_point=" << worst_point << '\n';
  if (condition == StabilityCondition::ExplicitGershgorin) {
    out << prefix << "worst_axis=" << worst_axis << '\n';
    out << prefix << "worst_inequality=" << worst_inequality << '\n';
  }
  if (condition == StabilityCondition::SemiImplicitPD) {
    out << prefix << "min_constraint=" << min_constraint << '\n';
    out << prefix << "worst_constraint=" << worst_constraint << '\n';
  }
  return out.str();
}

std::vector<double> coefficient_constraints(const std::vector<double>& delta1, const std::vector<double>& delta2,
                                            const std::vector<double>& delta3, const std::vector<double>& delta4) {
  const std::size_t p = delta1.size();
  if (delta2.size() != p || delta3.size() != p || delta4.size() != p)
    throw InvalidArgument("constraints: coefficient arrays differ in length");
  std::vector<double> c(4 * p);
  for (std::size_t i = 0; i < p; ++i) {
    const double s = 0.5 * (delta2[i] + delta3[i]);
    c[i] = delta1[i] - s;
    c[p + i] = delta1[i] + s;
    c[2 * p + i] = delta4[i] - s;
    c[3 * p + i] = delta4[i] + s;
  }
  return c;
}

std::vector<double> coefficient_constraints(const InfluenceSet& set) {
  return coefficient_constraints(set.deltas[0], set.deltas[1], set.deltas[2], set.deltas[3]);
}

namespace {

std::vector<double> samples(const RbfBasis& b) {
  std::vector<double> v(kStabilitySamples);
  const double step = (b.a_max() - b.a_min()) / (kStabilitySamples - 1);
  for (int k = 0; k < kStabilitySamples; ++k) v[static_cast<std::size_t>(k)] = b.a_min() + step * k;
  v.back() = b.a_max();
  return v;
}

}  // namespace

StabilityReport check_semi_implicit(const InfluenceSet& set) {
  StabilityReport r;
  r.condition = StabilityCondition::SemiImplicitPD;
  const std::vector<double> v = samples(set.basis);
  const NodeCoefficients d = eval_all(set, v);
  r.margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double cross = 0.5 * std::abs(d.d[1][k] + d.d[2][k]);
    const double slack = std::min(d.d[0][k] - cross, d.d[3][k] - cross);
    if (slack < r.margin || std::isnan(slack)) {
      r.margin = slack;
      r.worst_point = v[k];
      if (std::isnan(slack)) break;
    }
  }
  const std::vector<double> c = coefficient_constraints(set);
  const auto it = std::min_element(c.begin(), c.end());
  r.min_constraint = *it;
  r.worst_constraint = static_cast<int>(it - c.begin());
  r.satisfied = r.margin >= 0.0;
  return r;
}

StabilityReport check_explicit_gershgorin(const InfluenceSet& set, double dt, const Grid& grid, double eps) {
  if (!(dt > 0.0)) throw InvalidArgument("gershgorin check: dt must be positive");
  if (!(eps > 0.0)) throw InvalidArgument("gershgorin check: eps must be positive");
  StabilityReport r;
  r.condition = StabilityCondition::ExplicitGershgorin;
  const std::vector<double> v = samples(set.basis);
  const NodeCoefficients d = eval_all(set, v);
  r.margin = std::numeric_limits<double>::infinity();
  for (int axis = 1; axis <= 2; ++axis) {
    const double h = grid.spacing(axis);
    const double q = 4.0 * dt / (h * h);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double d1 = d.d[0][k], d2 = d.d[1][k], d3 = d.d[2][k], d4 = d.d[3][k];
      const double off = std::abs(0.5 * (d2 + d3) - q * ((1.0 + eps) * d1 * d2 + d3 * d4));
      const double slack[2] = {d1 - q * ((1.0 + eps) * d1 * d1 + d3 * d3) - off,
                               d4 - q * ((1.0 + eps) * d2 * d2 + d4 * d4) - off};
      for (int i = 0; i < 2; ++i)
        if (slack[i] < r.margin) {
          r.margin = slack[i];
          r.worst_point = v[k];
          r.worst_axis = axis;
          r.worst_inequality = i + 1;
        }
    }
  }
  r.satisfied = r.margin >= 0.0;
  return r;
}

StabilityReport check_lambda_bound(double lambda, double dt, double eps, double zeta) {
  if (!(lambda >= 0.0) || !(dt > 0.0) || !(eps > 0.0)) throw InvalidArgument("lambda bound: lambda, dt and eps must be positive");
  if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidArgument("lambda bound: zeta must lie in (0, 1)");
  StabilityReport r;
  r.condition = StabilityCondition::LambdaBound;
  r.worst_point = std::numeric_limits<double>::quiet_NaN();
  r.margin = (1.0 - 2.0 * dt * lambda - 2.0 * dt * eps) - zeta;
  r.satisfied = r.margin >= 0.0;
  return r;
}

double growth_factor(double t, double lambda_max, double eps, double zeta) {
  const double rate = 1.0 + 2.0 * (lambda_max + eps) / zeta;
  return std::exp(rate * t) * (1.0 + t * lambda_max * lambda_max / (2.0 * eps * zeta));
}

bool growth_bound(const StepTrace& trace, double lambda_max, double eps, double zeta) {
  if (trace.states.empty()) return true;
  const double w0 = norm_h(trace.states.front());
  const double w0_sq = w0 * w0;
  for (std::size_t m = 0; m < trace.states.size(); ++m) {
    const double t = trace.config.dt * static_cast<double>(m);
    const double wm = norm_h(trace.states[m]);
    if (!std::isfinite(wm)) return false;
    // Relative slack for the rounding in the two norm evaluations.
    const double bound = growth_factor(t, lambda_max, eps, zeta) * w0_sq * (1.0 + 1e-12);
    if (!(wm * wm <= bound)) return false;
  }
  return true;
}

}  // namespace xdiff
