#pragma once

// Runtime checks of the stability conditions for the two schemes.

#include <string>
#include <vector>

#include "xdiff/field.hpp"
#include "xdiff/influence.hpp"
#include "xdiff/scheme.hpp"

namespace xdiff {

enum class StabilityCondition { SemiImplicitPD, ExplicitGershgorin, LambdaBound };

std::string to_string(StabilityCondition c);

struct StabilityReport {
  StabilityCondition condition = StabilityCondition::SemiImplicitPD;
  bool satisfied = false;  // margin >= 0
  double margin = 0.0;
  // v sample attaining the margin; NaN for the lambda bound.
  double worst_point = 0.0;
  // Gershgorin: axis (1 or 2) and inequality (1 or 2) attaining the margin.
  int worst_axis = 0;
  int worst_inequality = 0;
  // Semi-implicit: minimum of the coefficient constraints and its index.
  double min_constraint = 0.0;
  int worst_constraint = -1;

  // key=value lines, one per field, prefixed by `prefix`.
  std::string render(const std::string& prefix) const;
};

inline constexpr int kStabilitySamples = 4001;
inline constexpr double kDefaultEps = 0.01;
inline constexpr double kDefaultZeta = 0.5;

// Coefficient constraints [c1; c2; c3; c4], each of length P:
//   c1 = d1 - (d2 + d3)/2, c2 = d1 + (d2 + d3)/2,
//   c3 = d4 - (d2 + d3)/2, c4 = d4 + (d2 + d3)/2  (on the delta coefficients).
std::vector<double> coefficient_constraints(const std::vector<double>& delta1, const std::vector<double>& delta2,
                                            const std::vector<double>& delta3, const std::vector<double>& delta4);
std::vector<double> coefficient_constraints(const InfluenceSet& set);

// min over sampled v in A of d1 - |d2 + d3|/2 and d4 - |d2 + d3|/2.
StabilityReport check_semi_implicit(const InfluenceSet& set);

// Row dominance conditions for the explicit scheme, per sample and axis.
StabilityReport check_explicit_gershgorin(const InfluenceSet& set, double dt, const Grid& grid, double eps);

// margin = 1 - 2 dt lambda - 2 dt eps - zeta.
StabilityReport check_lambda_bound(double lambda, double dt, double eps, double zeta);

// Right-hand factor of the a-priori bound ||W(t)||^2 <= factor * ||W^0||^2.
double growth_factor(double t, double lambda_max, double eps, double zeta);

// True iff every recorded state satisfies the bound.
bool growth_bound(const StepTrace& trace, double lambda_max, double eps, double zeta);

}  // namespace xdiff
