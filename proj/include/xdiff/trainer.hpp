#pragma once

// Constrained training of the influence functions and the reaction weight:
// Adam on the PHR augmented Lagrangian, with multiplier and penalty updates
// after every step. Rollouts use the explicit scheme.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "xdiff/autodiff.hpp"
#include "xdiff/field.hpp"
#include "xdiff/influence.hpp"
#include "xdiff/scheme.hpp"
#include "xdiff/stability.hpp"

namespace xdiff {

struct LagrangianState {
  std::vector<double> mu;  // 4P multipliers in [0, mu_bar], ordered like coefficient_constraints
  double mu_bar = 2.0;
  double rho = 6e5;
  double tau = 0.5;
  double gamma = 2.0;
  double infeasibility_prev = 0.0;

  static LagrangianState initial(int p);
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState initial(std::size_t n);
  // In-place update of x (flattened parameters) with gradient g.
  void step(std::vector<double>& x, const std::vector<double>& g);
};

struct TrainConfig {
  int batch_size = 50;
  int crop1 = 100;  // rows
  int crop2 = 100;  // columns
  double sigma = 10.0;
  SchemeConfig scheme;  // theta must be 0; scheme.grid is set to the crop
  int k_max = 2000;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int threads = 0;        // 0: hardware concurrency
  int heldout_size = 0;   // 0: no held-out monitoring
  int heldout_every = 1;

  void validate() const;
  Grid crop_grid() const { return Grid(crop1, crop2, scheme.grid.h1, scheme.grid.h2); }
};

struct TrainingPair {
  ScalarField noisy;
  ScalarField clean;
};

std::vector<double> constraints(const ParameterVector& theta);

struct PenaltyValue {
  double value = 0.0;  // loss + (rho/2) sum max(0, mu/rho - c)^2
  GradientVector penalty_grad;
};

PenaltyValue augmented_lagrangian(double loss, const ParameterVector& theta, const LagrangianState& lag);

// mu <- min(max(0, mu - rho c(theta)), mu_bar).
LagrangianState update_multipliers(const LagrangianState& lag, const ParameterVector& theta);

// Infinity norm of the negative part of min(c, mu/rho).
double infeasibility(const LagrangianState& lag, const ParameterVector& theta);

// rho / gamma if infeas_now <= tau I_prev, otherwise gamma rho; stores
// infeas_now as I_prev. rho never drops below the smallest normal double.
LagrangianState update_penalty(const LagrangianState& lag, double infeas_now);

// B random crops (item b comes from image b mod |corpus|) with i.i.d.
// Gaussian noise of s.d. sigma added, no clamping.
std::vector<TrainingPair> sample_batch(const std::vector<ScalarField>& corpus, const TrainConfig& cfg,
                                       std::mt19937_64& rng);

// Generator for iteration k (k >= 1) and for the fixed evaluation batches.
std::mt19937_64 iteration_rng(std::uint64_t seed, std::uint64_t iteration);
std::mt19937_64 heldout_rng(std::uint64_t seed);
std::mt19937_64 lambda_search_rng(std::uint64_t seed);

// Mean PSNR of rollouts over a batch; each item runs on its own grid with the
// spacing of scheme.grid.
double mean_psnr(const std::vector<TrainingPair>& batch, const InfluenceSet& set, const SchemeConfig& scheme);
// Mean per-item loss of explicit rollouts over a batch.
double mean_loss(const std::vector<TrainingPair>& batch, const InfluenceSet& set, const SchemeConfig& scheme);

inline constexpr int kLambdaCandidates = 41;
inline constexpr double kLambdaStep = 0.05;

// Best lambda in {0, 0.05, ..., 2} by mean PSNR on a fixed evaluation batch;
// ties go to the smallest lambda.
double init_lambda(const std::vector<ScalarField>& corpus, const TrainConfig& cfg, const InfluenceSet& set);
double init_lambda(const std::vector<TrainingPair>& batch, const SchemeConfig& scheme, const InfluenceSet& set);

struct HistoryRow {
  int iteration = 0;
  double loss = 0.0;  // mean per-item batch loss at Theta_k
  double infeasibility = 0.0;
  double rho = 0.0;  // penalty used in iteration k
  double min_constraint = 0.0;  // after the update
  double heldout_loss = 0.0;    // NaN when not evaluated
  double heldout_psnr = 0.0;
};

struct TrainResult {
  ParameterVector theta;
  LagrangianState lag;
  AdamState adam;
  std::vector<HistoryRow> history;
  double min_constraint = 0.0;
  StabilityReport feasibility;
  double heldout_loss_initial = 0.0;  // NaN without held-out monitoring
  double heldout_loss_final = 0.0;
};

// Called after every iteration with the updated parameters.
using IterationCallback = std::function<void(int iteration, const ParameterVector& theta)>;

TrainResult train(const std::vector<ScalarField>& corpus, const TrainConfig& cfg, const RbfBasis& basis,
                  const ParameterVector& init, const LagrangianState& lag0, const AdamState& adam0,
                  const IterationCallback& on_iteration = {});

}  // namespace xdiff
