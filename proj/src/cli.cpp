#include "xdiff/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xdiff/config.hpp"
#include "xdiff/error.hpp"
#include "xdiff/imageio.hpp"
#include "xdiff/metrics.hpp"
#include "xdiff/params_io.hpp"
#include "xdiff/stability.hpp"
#include "xdiff/trainer.hpp"

namespace fs = std::filesystem;

namespace xdiff::cli {
namespace {

class StabilityRefusal : public Error {
 public:
  using Error::Error;
};

struct Overrides {
  std::string config;
  std::optional<double> dt;
  std::optional<int> steps;
  std::optional<int> theta;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

void add_scheme_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Flat JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--dt", o.dt, "Time step");
  cmd->add_option("--steps", o.steps, "Number of time steps M");
  cmd->add_option("--theta", o.theta, "0 explicit, 1 semi-implicit")->check(CLI::IsMember({0, 1}));
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  if (o.dt) c.dt = *o.dt;
  if (o.steps) c.steps = *o.steps;
  if (o.theta) c.theta = *o.theta;
  if (o.sigma) c.sigma = *o.sigma;
  if (o.seed) c.seed = *o.seed;
  if (o.deterministic) c.deterministic = true;
  c.validate();
  return c;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".pgm" || ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0u, 0u, tag};
  return std::mt19937_64(seq);
}

ScalarField add_noise(const ScalarField& clean, double sigma, std::mt19937_64& rng) {
  ScalarField noisy = clean;
  if (sigma <= 0.0) return noisy;
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t j = 0; j < noisy.size(); ++j) noisy[j] += noise(rng);
  return noisy;
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string s = "iteration,loss,infeasibility,rho,min_constraint,heldout_loss,heldout_psnr\n";
  for (const HistoryRow& r : rows)
    s += std::to_string(r.iteration) + "," + fmt(r.loss) + "," + fmt(r.infeasibility) + "," + fmt(r.rho) + "," +
         fmt(r.min_constraint) + "," + fmt(r.heldout_loss) + "," + fmt(r.heldout_psnr) + "\n";
  return s;
}

int cmd_train(const Overrides& o, const std::string& params_path, const std::optional<std::string>& out_dir,
              std::ostream& out, std::ostream& err) {
  RunConfig cfg = resolve(o);
  if (out_dir) cfg.out_dir = *out_dir;
  const TrainConfig tc = cfg.train_config();
  tc.validate();

  std::vector<ScalarField> corpus;
  if (cfg.synth_count > 0) {
    for (const GrayImage& g : synth_corpus(cfg.synth_count, cfg.synth_width, cfg.synth_height, cfg.synth_seed))
      corpus.push_back(g.to_field(cfg.h));
  } else {
    if (cfg.corpus_dir.empty()) throw ConfigError("set corpus_dir or synth_count");
    for (const fs::path& p : list_images(cfg.corpus_dir)) corpus.push_back(load_image(p).to_field(cfg.h));
    if (corpus.empty()) throw ConfigError("no .pgm or .png images in corpus_dir " + cfg.corpus_dir);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].grid().n1 < cfg.crop_rows || corpus[i].grid().n2 < cfg.crop_cols)
      throw ConfigError("corpus image " + std::to_string(i) + " is smaller than the crop");

  RbfBasis basis;
  ParameterVector theta;
  if (!params_path.empty()) {
    const ParamsFile f = load_params(params_path);
    basis = f.set.basis;
    theta = f.theta();
  } else {
    basis = cfg.basis();
    theta = ParameterVector::from_set(init_ncdf(basis), 0.0);
  }
  if (cfg.lambda)
    theta.lambda = *cfg.lambda;
  else if (params_path.empty())
    theta.lambda = init_lambda(corpus, tc, theta.to_set(basis));

  LagrangianState lag = cfg.lagrangian();
  lag.mu.assign(4 * static_cast<std::size_t>(basis.p()), 0.0);
  const AdamState adam = cfg.adam(theta.size());

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  const std::string config_text = cfg.to_json();
  write_text(dir / "config.json", config_text);
  RunConfig hashed = cfg;
  hashed.out_dir.clear();
  const std::string hash = fnv1a_hex(hashed.to_json());

  IterationCallback on_iteration;
  if (cfg.checkpoint_every > 0) {
    fs::create_directories(dir / "checkpoints");
    on_iteration = [&](int k, const ParameterVector& t) {
      if (k % cfg.checkpoint_every != 0) return;
      char name[32];
      std::snprintf(name, sizeof name, "params_%06d.json", k);
      save_params(ParamsFile::from_theta(t, basis, {cfg.seed, hash, k}), dir / "checkpoints" / name);
    };
  }

  out << "initial lambda " << fmt(theta.lambda) << "\n";
  const TrainResult r = train(corpus, tc, basis, theta, lag, adam, on_iteration);

  save_params(ParamsFile::from_theta(r.theta, basis, {cfg.seed, hash, cfg.k_max}), dir / "params.json");
  write_text(dir / "history.csv", history_csv(r.history));
  const StabilityReport lb = check_lambda_bound(r.theta.lambda, cfg.dt, cfg.eps, cfg.zeta);
  write_text(dir / "stability.txt", r.feasibility.render("semi_implicit.") + lb.render("lambda_bound.") +
                                        "min_constraint=" + fmt(r.min_constraint) + "\n");

  out << "final lambda " << fmt(r.theta.lambda) << "\n";
  out << "min constraint " << fmt(r.min_constraint) << "\n";
  if (!r.history.empty()) out << "final batch loss " << fmt(r.history.back().loss) << "\n";
  if (!std::isnan(r.heldout_loss_initial))
    out << "held-out loss " << fmt(r.heldout_loss_initial) << " -> " << fmt(r.heldout_loss_final) << "\n";
  out << "wrote " << (dir / "params.json").string() << "\n";

  if (r.min_constraint < -kFeasibilityTolerance || !lb.satisfied) {
    err << "error: final parameters are infeasible (min constraint " << fmt(r.min_constraint) << ", lambda bound "
        << (lb.satisfied ? "ok" : "violated") << ")\n";
    return kExitStability;
  }
  return kExitOk;
}

struct Model {
  InfluenceSet set;
  double lambda = 0.0;
};

Model load_model(const std::string& params_path, const RunConfig& cfg) {
  if (params_path.empty()) return {init_ncdf(cfg.basis()), cfg.lambda.value_or(0.0)};
  const ParamsFile f = load_params(params_path);
  return {f.set, f.lambda};
}

int cmd_denoise(const Overrides& o, const std::string& input, const std::string& output,
                const std::string& params_path, bool force, std::ostream& out) {
  RunConfig cfg = resolve(o);
  const Model m = load_model(params_path, cfg);
  if (cfg.theta == 1) {
    const StabilityReport rep = check_semi_implicit(m.set);
    if (!rep.satisfied && !force)
      throw StabilityRefusal("parameters fail the semi-implicit stability check (margin " + fmt(rep.margin) +
                             "); pass --force to run anyway");
  }
  ScalarField u0 = load_image(input).to_field(cfg.h);
  if (o.sigma) {
    std::mt19937_64 rng = stream(cfg.seed, 4);
    u0 = add_noise(u0, *o.sigma, rng);
  }
  SchemeConfig s = cfg.scheme();
  s.grid = u0.grid();
  s.lambda = m.lambda;
  const ScalarField u = run(u0, m.set, s).u;
  save_image(GrayImage::from_field(u), output);
  out << "wrote " << output << "\n";
  return kExitOk;
}

int cmd_eval(const Overrides& o, const std::string& test_dir, const std::string& params_path,
             const std::optional<std::string>& out_path, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const std::vector<fs::path> paths = list_images(test_dir);
  if (paths.empty()) throw ConfigError("no .pgm or .png images in " + test_dir);
  const ParamsFile params = load_params(params_path);

  std::mt19937_64 rng = stream(cfg.seed, 3);
  std::vector<TrainingPair> pairs;
  for (const fs::path& p : paths) {
    const ScalarField clean = load_image(p).to_field(cfg.h);
    pairs.push_back({add_noise(clean, cfg.sigma, rng), clean});
  }

  SchemeConfig s = cfg.scheme();
  const InfluenceSet baseline = init_ncdf(params.set.basis);
  const double baseline_lambda = init_lambda(pairs, s, baseline);

  std::string csv = "image_id,noisy_psnr_db,trained_psnr_db,trained_blur,baseline_psnr_db,baseline_blur\n";
  double sums[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const TrainingPair& p = pairs[i];
    s.grid = p.noisy.grid();
    s.lambda = params.lambda;
    const ScalarField ut = run(p.noisy, params.set, s).u;
    s.lambda = baseline_lambda;
    const ScalarField ub = run(p.noisy, baseline, s).u;
    const double row[5] = {psnr(p.noisy, p.clean), psnr(ut, p.clean), blur(ut), psnr(ub, p.clean), blur(ub)};
    csv += paths[i].filename().string();
    for (int k = 0; k < 5; ++k) {
      csv += "," + fmt(row[k]);
      sums[k] += row[k];
    }
    csv += "\n";
  }
  csv += "mean";
  for (double x : sums) csv += "," + fmt(x / static_cast<double>(pairs.size()));
  csv += "\n";

  const fs::path target = out_path ? fs::path(*out_path) : fs::path(cfg.out_dir) / "eval.csv";
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_text(target, csv);
  out << "baseline lambda " << fmt(baseline_lambda) << "\n";
  out << "mean psnr trained " << fmt(sums[1] / pairs.size()) << " baseline " << fmt(sums[3] / pairs.size()) << "\n";
  out << "wrote " << target.string() << "\n";
  return kExitOk;
}

int cmd_check(const Overrides& o, const std::string& params_path, std::optional<double> h,
              std::optional<double> eps, std::optional<double> zeta, std::ostream& out) {
  RunConfig cfg = resolve(o);
  if (h) cfg.h = *h;
  if (eps) cfg.eps = *eps;
  if (zeta) cfg.zeta = *zeta;
  cfg.validate();
  const Model m = load_model(params_path, cfg);
  const StabilityReport si = check_semi_implicit(m.set);
  const StabilityReport ge = check_explicit_gershgorin(m.set, cfg.dt, Grid(2, 2, cfg.h, cfg.h), cfg.eps);
  const StabilityReport lb = check_lambda_bound(m.lambda, cfg.dt, cfg.eps, cfg.zeta);
  out << si.render("semi_implicit.") << ge.render("gershgorin.") << lb.render("lambda_bound.");
  return si.satisfied ? kExitOk : kExitStability;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned cross-diffusion filters for grayscale image denoising", "xdiff"};
  app.require_subcommand(1);

  Overrides train_o, denoise_o, eval_o, check_o;
  std::string train_params, denoise_params, eval_params, check_params;
  std::optional<std::string> train_out, eval_out;
  std::string denoise_in, denoise_out, eval_dir;
  bool force = false;
  std::optional<double> check_h, check_eps, check_zeta;

  CLI::App* train_cmd = app.add_subcommand("train", "Train influence functions and reaction weight");
  add_scheme_flags(train_cmd, train_o);
  train_cmd->add_option("--params", train_params, "Initial parameters (default: NCDF initialization)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--sigma", train_o.sigma, "Training noise s.d. (0..255 scale)");
  train_cmd->add_option("--seed", train_o.seed, "RNG seed");
  train_cmd->add_option("--out", train_out, "Output directory");
  train_cmd->add_flag("--deterministic", train_o.deterministic, "Serial execution, bit-reproducible");

  CLI::App* denoise_cmd = app.add_subcommand("denoise", "Denoise one image");
  add_scheme_flags(denoise_cmd, denoise_o);
  denoise_cmd->add_option("input", denoise_in, "Input PGM or PNG")->required()->check(CLI::ExistingFile);
  denoise_cmd->add_option("--out", denoise_out, "Output PGM or PNG")->required();
  denoise_cmd->add_option("--params", denoise_params, "Parameters (default: NCDF initialization)")
      ->check(CLI::ExistingFile);
  denoise_cmd->add_option("--sigma", denoise_o.sigma, "Add seeded Gaussian noise before denoising");
  denoise_cmd->add_option("--seed", denoise_o.seed, "Seed for --sigma");
  denoise_cmd->add_flag("--force", force, "Run semi-implicit even if the stability check fails");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate parameters against the NCDF baseline");
  add_scheme_flags(eval_cmd, eval_o);
  eval_cmd->add_option("test_dir", eval_dir, "Directory of clean test images")->required();
  eval_cmd->add_option("--params", eval_params, "Parameters to evaluate")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--sigma", eval_o.sigma, "Noise s.d. (0..255 scale)");
  eval_cmd->add_option("--seed", eval_o.seed, "Noise seed");
  eval_cmd->add_option("--out", eval_out, "CSV path (default: out_dir/eval.csv)");

  CLI::App* check_cmd = app.add_subcommand("check-stability", "Report the stability conditions of a parameter set");
  check_cmd->add_option("--config", check_o.config, "Flat JSON run configuration")->check(CLI::ExistingFile);
  check_cmd->add_option("--dt", check_o.dt, "Time step for the explicit and lambda conditions");
  check_cmd->add_option("--params", check_params, "Parameters (default: NCDF initialization)")
      ->check(CLI::ExistingFile);
  check_cmd->add_option("--spacing", check_h, "Grid spacing h");
  check_cmd->add_option("--eps", check_eps, "Epsilon of the explicit and lambda conditions");
  check_cmd->add_option("--zeta", check_zeta, "Zeta of the lambda condition, in (0, 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_o, train_params, train_out, out, err);
    if (*denoise_cmd) return cmd_denoise(denoise_o, denoise_in, denoise_out, denoise_params, force, out);
    if (*eval_cmd) return cmd_eval(eval_o, eval_dir, eval_params, eval_out, out);
    return cmd_check(check_o, check_params, check_h, check_eps, check_zeta, out);
  } catch (const StabilityRefusal& e) {
    err << "error: " << e.what() << "\n";
    return kExitStability;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace xdiff::cli
