#include "xdiff/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "xdiff/error.hpp"
#include "xdiff/metrics.hpp"

namespace xdiff {

LagrangianState LagrangianState::initial(int p) {
  LagrangianState s;
  s.mu.assign(4 * static_cast<std::size_t>(p), 0.0);
  return s;
}

AdamState AdamState::initial(std::size_t n) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void AdamState::step(std::vector<double>& x, const std::vector<double>& g) {
  if (x.size() != g.size() || m.size() != x.size() || v.size() != x.size())
    throw InvalidArgument("adam: parameter, gradient and moment sizes differ");
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    x[i] -= alpha * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (crop1 < 2 || crop2 < 2) throw ConfigError("crop must be at least 2 x 2");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be non-negative");
  if (k_max < 0) throw ConfigError("k_max must be non-negative");
  if (scheme.theta != 0) throw ConfigError("training rollouts require theta = 0");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (heldout_size < 0) throw ConfigError("heldout_size must be non-negative");
  if (heldout_every < 1) throw ConfigError("heldout_every must be at least 1");
  SchemeConfig s = scheme;
  s.grid = crop_grid();
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> constraints(const ParameterVector& theta) {
  const auto p = static_cast<std::size_t>(theta.p());
  const auto mid14 = theta.lam14.begin() + static_cast<std::ptrdiff_t>(p);
  const auto mid23 = theta.lam23.begin() + static_cast<std::ptrdiff_t>(p);
  return coefficient_constraints(std::vector<double>(theta.lam14.begin(), mid14),
                                 std::vector<double>(theta.lam23.begin(), mid23),
                                 std::vector<double>(mid23, theta.lam23.end()),
                                 std::vector<double>(mid14, theta.lam14.end()));
}

PenaltyValue augmented_lagrangian(double loss, const ParameterVector& theta, const LagrangianState& lag) {
  const std::vector<double> c = constraints(theta);
  if (lag.mu.size() != c.size()) throw InvalidArgument("augmented_lagrangian: multiplier count differs from 4P");
  const int p = theta.p();
  PenaltyValue out;
  out.value = loss;
  out.penalty_grad = GradientVector::zeros(p);
  for (int i = 0; i < p; ++i) {
    // t_l = max(0, mu/rho - c_l); dP/dc_l = -rho t_l.
    double t[4];
    for (int l = 0; l < 4; ++l) {
      const std::size_t k = static_cast<std::size_t>(l * p + i);
      t[l] = std::max(0.0, lag.mu[k] / lag.rho - c[k]);
      out.value += 0.5 * lag.rho * t[l] * t[l];
    }
    const double g1 = -lag.rho * t[0], g2 = -lag.rho * t[1], g3 = -lag.rho * t[2], g4 = -lag.rho * t[3];
    out.penalty_grad.delta(1, i) = g1 + g2;
    out.penalty_grad.delta(4, i) = g3 + g4;
    const double cross = 0.5 * (-g1 + g2 - g3 + g4);
    out.penalty_grad.delta(2, i) = cross;
    out.penalty_grad.delta(3, i) = cross;
  }
  return out;
}

LagrangianState update_multipliers(const LagrangianState& lag, const ParameterVector& theta) {
  const std::vector<double> c = constraints(theta);
  if (lag.mu.size() != c.size()) throw InvalidArgument("update_multipliers: multiplier count differs from 4P");
  LagrangianState out = lag;
  for (std::size_t i = 0; i < c.size(); ++i) out.mu[i] = std::min(std::max(0.0, lag.mu[i] - lag.rho * c[i]), lag.mu_bar);
  return out;
}

double infeasibility(const LagrangianState& lag, const ParameterVector& theta) {
  const std::vector<double> c = constraints(theta);
  if (lag.mu.size() != c.size()) throw InvalidArgument("infeasibility: multiplier count differs from 4P");
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, -std::min(c[i], lag.mu[i] / lag.rho));
  return worst;
}

LagrangianState update_penalty(const LagrangianState& lag, double infeas_now) {
  LagrangianState out = lag;
  out.rho = infeas_now <= lag.tau * lag.infeasibility_prev ? lag.rho / lag.gamma : lag.rho * lag.gamma;
  out.rho = std::max(out.rho, std::numeric_limits<double>::min());
  out.infeasibility_prev = infeas_now;
  return out;
}

std::mt19937_64 iteration_rng(std::uint64_t seed, std::uint64_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32), 0u};
  return std::mt19937_64(seq);
}

std::mt19937_64 heldout_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0u, 0u, 1u};
  return std::mt19937_64(seq);
}

std::mt19937_64 lambda_search_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0u, 0u, 2u};
  return std::mt19937_64(seq);
}

std::vector<TrainingPair> sample_batch(const std::vector<ScalarField>& corpus, const TrainConfig& cfg,
                                       std::mt19937_64& rng) {
  if (corpus.empty()) throw InvalidArgument("sample_batch: corpus is empty");
  const Grid crop = cfg.crop_grid();
  std::normal_distribution<double> noise(0.0, cfg.sigma > 0.0 ? cfg.sigma : 1.0);
  std::vector<TrainingPair> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int b = 0; b < cfg.batch_size; ++b) {
    const ScalarField& img = corpus[static_cast<std::size_t>(b) % corpus.size()];
    const Grid& g = img.grid();
    if (g.n1 < crop.n1 || g.n2 < crop.n2)
      throw InvalidArgument("sample_batch: image " + std::to_string(b % corpus.size()) + " is smaller than the crop");
    const int o1 = std::uniform_int_distribution<int>(0, g.n1 - crop.n1)(rng);
    const int o2 = std::uniform_int_distribution<int>(0, g.n2 - crop.n2)(rng);
    TrainingPair pair{ScalarField(crop), ScalarField(crop)};
    for (int j1 = 0; j1 < crop.n1; ++j1)
      for (int j2 = 0; j2 < crop.n2; ++j2) {
        const double x = img(o1 + j1, o2 + j2);
        pair.clean(j1, j2) = x;
        pair.noisy(j1, j2) = cfg.sigma > 0.0 ? x + noise(rng) : x;
      }
    batch.push_back(std::move(pair));
  }
  return batch;
}

namespace {

ScalarField rollout(const TrainingPair& p, const InfluenceSet& set, const SchemeConfig& scheme) {
  SchemeConfig s = scheme;
  const Grid& g = p.noisy.grid();
  s.grid = Grid(g.n1, g.n2, scheme.grid.h1, scheme.grid.h2);
  if (!(s.grid == g)) throw InvalidArgument("batch item spacing differs from the scheme spacing");
  return run(p.noisy, set, s).u;
}

}  // namespace

double mean_psnr(const std::vector<TrainingPair>& batch, const InfluenceSet& set, const SchemeConfig& scheme) {
  double sum = 0.0;
  for (const TrainingPair& p : batch) sum += psnr(rollout(p, set, scheme), p.clean);
  return sum / static_cast<double>(batch.size());
}

double mean_loss(const std::vector<TrainingPair>& batch, const InfluenceSet& set, const SchemeConfig& scheme) {
  double sum = 0.0;
  for (const TrainingPair& p : batch) sum += loss(rollout(p, set, scheme), p.clean);
  return sum / static_cast<double>(batch.size());
}

double init_lambda(const std::vector<TrainingPair>& batch, const SchemeConfig& scheme, const InfluenceSet& set) {
  if (batch.empty()) throw InvalidArgument("init_lambda: empty evaluation batch");
  SchemeConfig s = scheme;
  s.theta = 0;
  double best_lambda = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kLambdaCandidates; ++k) {
    s.lambda = k * kLambdaStep;
    double score = -std::numeric_limits<double>::infinity();
    try {
      score = mean_psnr(batch, set, s);
    } catch (const NumericalError&) {
      continue;
    }
    if (score > best) {
      best = score;
      best_lambda = s.lambda;
    }
  }
  return best_lambda;
}

double init_lambda(const std::vector<ScalarField>& corpus, const TrainConfig& cfg, const InfluenceSet& set) {
  std::mt19937_64 rng = lambda_search_rng(cfg.seed);
  return init_lambda(sample_batch(corpus, cfg, rng), cfg.scheme, set);
}

namespace {

struct ItemResult {
  LossGradient lg;
  std::exception_ptr error;
};

// Rollout and backprop of every batch item; results stay in batch order.
std::vector<ItemResult> batch_gradients(const std::vector<TrainingPair>& batch, const InfluenceSet& set,
                                        const SchemeConfig& scheme, int threads) {
  std::vector<ItemResult> out(batch.size());
  auto work = [&](std::size_t i) {
    try {
      out[i].lg = backprop(run_trace(batch[i].noisy, set, scheme), batch[i].clean, set);
    } catch (...) {
      out[i].error = std::current_exception();
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), batch.size());
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) work(i);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < batch.size(); i += n_threads) work(i);
    });
  for (auto& th : pool) th.join();
  return out;
}

double min_of(const std::vector<double>& c) { return c.empty() ? 0.0 : *std::min_element(c.begin(), c.end()); }

}  // namespace

TrainResult train(const std::vector<ScalarField>& corpus, const TrainConfig& cfg, const RbfBasis& basis,
                  const ParameterVector& init, const LagrangianState& lag0, const AdamState& adam0,
                  const IterationCallback& on_iteration) {
  cfg.validate();
  if (corpus.empty()) throw InvalidArgument("train: corpus is empty");
  if (init.p() != basis.p()) throw InvalidArgument("train: parameters do not match the basis");
  if (lag0.mu.size() != 4 * static_cast<std::size_t>(basis.p())) throw InvalidArgument("train: need 4P multipliers");
  if (adam0.m.size() != init.size() || adam0.v.size() != init.size())
    throw InvalidArgument("train: Adam moments do not match the parameter count");

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (cfg.deterministic) threads = 1;

  SchemeConfig scheme = cfg.scheme;
  scheme.grid = cfg.crop_grid();

  TrainResult r;
  r.theta = init;
  r.lag = lag0;
  r.adam = adam0;
  // The first comparison is against the infeasibility of the starting point.
  r.lag.infeasibility_prev = infeasibility(lag0, init);

  std::vector<TrainingPair> heldout;
  if (cfg.heldout_size > 0) {
    TrainConfig hc = cfg;
    hc.batch_size = cfg.heldout_size;
    std::mt19937_64 rng = heldout_rng(cfg.seed);
    heldout = sample_batch(corpus, hc, rng);
  }
  auto heldout_eval = [&](const ParameterVector& theta, double& loss_out, double& psnr_out) {
    SchemeConfig s = scheme;
    s.lambda = theta.lambda;
    const InfluenceSet set = theta.to_set(basis);
    double l = 0.0, p = 0.0;
    for (const TrainingPair& pair : heldout) {
      const ScalarField u = run(pair.noisy, set, s).u;
      l += loss(u, pair.clean);
      p += psnr(u, pair.clean);
    }
    loss_out = l / static_cast<double>(heldout.size());
    psnr_out = p / static_cast<double>(heldout.size());
  };

  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.heldout_loss_initial = nan;
  r.heldout_loss_final = nan;
  if (!heldout.empty()) {
    double ps = 0.0;
    heldout_eval(init, r.heldout_loss_initial, ps);
  }

  for (int k = 1; k <= cfg.k_max; ++k) {
    HistoryRow row;
    row.iteration = k;
    row.rho = r.lag.rho;
    row.heldout_loss = nan;
    row.heldout_psnr = nan;

    std::mt19937_64 rng = iteration_rng(cfg.seed, static_cast<std::uint64_t>(k));
    const std::vector<TrainingPair> batch = sample_batch(corpus, cfg, rng);
    const InfluenceSet set = r.theta.to_set(basis);
    SchemeConfig s = scheme;
    s.lambda = r.theta.lambda;

    std::vector<ItemResult> items = batch_gradients(batch, set, s, threads);
    double loss_sum = 0.0;
    GradientVector grad = GradientVector::zeros(basis.p());
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].error) {
        try {
          std::rethrow_exception(items[i].error);
        } catch (const std::exception& e) {
          throw NumericalError("iteration " + std::to_string(k) + ", batch item " + std::to_string(i) + ": " + e.what());
        }
      }
      loss_sum += items[i].lg.loss;
      grad += items[i].lg.grad;
    }
    const PenaltyValue pen = augmented_lagrangian(loss_sum, r.theta, r.lag);
    grad += pen.penalty_grad;
    if (!std::isfinite(pen.value) || !grad.all_finite())
      throw NumericalError("iteration " + std::to_string(k) + ": non-finite loss or gradient");
    row.loss = loss_sum / static_cast<double>(batch.size());

    if (!heldout.empty() && ((k - 1) % cfg.heldout_every == 0 || k == cfg.k_max))
      heldout_eval(r.theta, row.heldout_loss, row.heldout_psnr);

    std::vector<double> x = r.theta.flat();
    r.adam.step(x, grad.flat());
    r.theta = ParameterVector::from_flat(x, basis.p());
    r.theta.lambda = std::max(r.theta.lambda, 0.0);

    row.infeasibility = infeasibility(r.lag, r.theta);
    r.lag = update_penalty(update_multipliers(r.lag, r.theta), row.infeasibility);
    row.min_constraint = min_of(constraints(r.theta));
    r.history.push_back(row);
    if (on_iteration) on_iteration(k, r.theta);
  }

  if (!heldout.empty()) {
    double ps = 0.0;
    heldout_eval(r.theta, r.heldout_loss_final, ps);
  }
  r.min_constraint = min_of(constraints(r.theta));
  r.feasibility = check_semi_implicit(r.theta.to_set(basis));
  return r;
}

}  // namespace xdiff
