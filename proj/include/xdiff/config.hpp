#pragma once

// Flat JSON run configuration shared by the CLI commands.

#include <cstdint>
#include <optional>
#include <string>

#include "xdiff/influence.hpp"
#include "xdiff/trainer.hpp"

namespace xdiff {

struct RunConfig {
  // Scheme
  double dt = 0.1;      // time step
  int steps = 10;       // M
  int theta = 1;        // deployment scheme (training rollouts are always explicit)
  double h = 1.0;       // grid spacing, pixels
  // Noise and sampling
  double sigma = 10.0;  // noise s.d., intensity units on the 0..255 scale
  std::uint64_t seed = 0;
  int batch_size = 50;
  int crop_rows = 100;
  int crop_cols = 100;
  int k_max = 2000;
  std::optional<double> lambda;  // empty: grid search at start
  // Basis
  double a_min = -20.0;
  double a_max = 20.0;
  int p = 151;
  double nu = 0.2;
  // Augmented Lagrangian
  double mu_bar = 2.0;
  double rho = 6e5;
  double tau = 0.5;
  double gamma = 2.0;
  // Adam
  double adam_alpha = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Stability checks
  double eps = 0.01;
  double zeta = 0.5;
  // Execution
  int threads = 0;
  bool deterministic = false;
  int heldout_size = 0;
  int heldout_every = 1;
  int checkpoint_every = 0;  // 0: no checkpoints
  // Data
  std::string corpus_dir;
  int synth_count = 0;  // > 0: train on synthetic images instead of corpus_dir
  int synth_width = 64;
  int synth_height = 64;
  std::uint64_t synth_seed = 0;
  std::string out_dir = ".";

  // Throws ConfigError naming the offending key. Unknown keys are rejected.
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string to_json() const;

  // Collects every violation into one ConfigError.
  void validate() const;

  RbfBasis basis() const { return RbfBasis::equidistant(a_min, a_max, p, nu); }
  SchemeConfig scheme() const;
  TrainConfig train_config() const;
  LagrangianState lagrangian() const;
  AdamState adam(std::size_t n) const;
};

}  // namespace xdiff
