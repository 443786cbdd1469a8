#include "xdiff/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "xdiff/error.hpp"

namespace xdiff {

using nlohmann::json;

namespace {

using Reader = std::function<void(RunConfig&, const json&)>;

template <class T>
T as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if (std::is_unsigned_v<T> && !v.is_number_unsigned()) throw ConfigError("");
    } else {
      if (!v.is_number()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    const char* kind = std::is_same_v<T, bool>          ? "a boolean"
                       : std::is_same_v<T, std::string> ? "a string"
                       : std::is_unsigned_v<T>          ? "a non-negative integer"
                       : std::is_integral_v<T>          ? "an integer"
                                                        : "a number";
    throw ConfigError("config key '" + key + "' must be " + kind);
  }
}

#define XDIFF_KEY(name, member, type) \
  {name, [](RunConfig& c, const json& v) { c.member = as<type>(v, name); }}

const std::map<std::string, Reader>& readers() {
  static const std::map<std::string, Reader> r = {
      XDIFF_KEY("dt", dt, double),
      XDIFF_KEY("steps", steps, int),
      {"theta",
       [](RunConfig& c, const json& v) {
         if (!v.is_number()) throw ConfigError("config key 'theta' must be 0 or 1");
         const double t = v.get<double>();
         if (t != 0.0 && t != 1.0) throw ConfigError("config key 'theta' must be 0 or 1, got " + v.dump());
         c.theta = static_cast<int>(t);
       }},
      XDIFF_KEY("h", h, double),
      XDIFF_KEY("sigma", sigma, double),
      XDIFF_KEY("seed", seed, std::uint64_t),
      XDIFF_KEY("batch_size", batch_size, int),
      XDIFF_KEY("crop_rows", crop_rows, int),
      XDIFF_KEY("crop_cols", crop_cols, int),
      XDIFF_KEY("k_max", k_max, int),
      {"lambda",
       [](RunConfig& c, const json& v) {
         if (v.is_null())
           c.lambda.reset();
         else
           c.lambda = as<double>(v, "lambda");
       }},
      XDIFF_KEY("a_min", a_min, double),
      XDIFF_KEY("a_max", a_max, double),
      XDIFF_KEY("P", p, int),
      XDIFF_KEY("nu", nu, double),
      XDIFF_KEY("mu_bar", mu_bar, double),
      XDIFF_KEY("rho", rho, double),
      XDIFF_KEY("tau", tau, double),
      XDIFF_KEY("gamma", gamma, double),
      XDIFF_KEY("adam_alpha", adam_alpha, double),
      XDIFF_KEY("adam_beta1", adam_beta1, double),
      XDIFF_KEY("adam_beta2", adam_beta2, double),
      XDIFF_KEY("adam_eps", adam_eps, double),
      XDIFF_KEY("eps", eps, double),
      XDIFF_KEY("zeta", zeta, double),
      XDIFF_KEY("threads", threads, int),
      XDIFF_KEY("deterministic", deterministic, bool),
      XDIFF_KEY("heldout_size", heldout_size, int),
      XDIFF_KEY("heldout_every", heldout_every, int),
      XDIFF_KEY("checkpoint_every", checkpoint_every, int),
      XDIFF_KEY("corpus_dir", corpus_dir, std::string),
      XDIFF_KEY("synth_count", synth_count, int),
      XDIFF_KEY("synth_width", synth_width, int),
      XDIFF_KEY("synth_height", synth_height, int),
      XDIFF_KEY("synth_seed", synth_seed, std::uint64_t),
      XDIFF_KEY("out_dir", out_dir, std::string),
  };
  return r;
}

#undef XDIFF_KEY

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  RunConfig c;
  const auto& r = readers();
  for (const auto& [key, value] : j.items()) {
    const auto it = r.find(key);
    if (it == r.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(c, value);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string RunConfig::to_json() const {
  json j = {
      {"dt", dt},
      {"steps", steps},
      {"theta", theta},
      {"h", h},
      {"sigma", sigma},
      {"seed", seed},
      {"batch_size", batch_size},
      {"crop_rows", crop_rows},
      {"crop_cols", crop_cols},
      {"k_max", k_max},
      {"lambda", lambda ? json(*lambda) : json(nullptr)},
      {"a_min", a_min},
      {"a_max", a_max},
      {"P", p},
      {"nu", nu},
      {"mu_bar", mu_bar},
      {"rho", rho},
      {"tau", tau},
      {"gamma", gamma},
      {"adam_alpha", adam_alpha},
      {"adam_beta1", adam_beta1},
      {"adam_beta2", adam_beta2},
      {"adam_eps", adam_eps},
      {"eps", eps},
      {"zeta", zeta},
      {"threads", threads},
      {"deterministic", deterministic},
      {"heldout_size", heldout_size},
      {"heldout_every", heldout_every},
      {"checkpoint_every", checkpoint_every},
      {"corpus_dir", corpus_dir},
      {"synth_count", synth_count},
      {"synth_width", synth_width},
      {"synth_height", synth_height},
      {"synth_seed", synth_seed},
      {"out_dir", out_dir},
  };
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  std::vector<std::string> bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad.emplace_back(msg);
  };
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  need(positive(dt), "dt must be positive");
  need(steps >= 0, "steps must be non-negative");
  need(theta == 0 || theta == 1, "theta must be 0 or 1");
  need(positive(h), "h must be positive");
  need(sigma >= 0.0 && std::isfinite(sigma), "sigma must be non-negative");
  need(batch_size >= 1, "batch_size must be at least 1");
  need(crop_rows >= 2 && crop_cols >= 2, "crop_rows and crop_cols must be at least 2");
  need(k_max >= 0, "k_max must be non-negative");
  need(!lambda || (*lambda >= 0.0 && std::isfinite(*lambda)), "lambda must be non-negative");
  need(std::isfinite(a_min) && std::isfinite(a_max) && a_max > a_min, "a_min must be below a_max");
  need(p >= 2, "P must be at least 2");
  need(positive(nu), "nu must be positive");
  need(positive(mu_bar), "mu_bar must be positive");
  need(positive(rho), "rho must be positive");
  need(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  need(gamma > 1.0 && std::isfinite(gamma), "gamma must exceed 1");
  need(adam_alpha >= 0.0 && std::isfinite(adam_alpha), "adam_alpha must be non-negative");
  need(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  need(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  need(positive(adam_eps), "adam_eps must be positive");
  need(positive(eps), "eps must be positive");
  need(zeta > 0.0 && zeta < 1.0, "zeta must lie in (0, 1)");
  need(threads >= 0, "threads must be non-negative");
  need(heldout_size >= 0, "heldout_size must be non-negative");
  need(heldout_every >= 1, "heldout_every must be at least 1");
  need(checkpoint_every >= 0, "checkpoint_every must be non-negative");
  need(synth_count >= 0, "synth_count must be non-negative");
  need(synth_width >= 1 && synth_height >= 1, "synth_width and synth_height must be positive");
  if (bad.empty()) return;
  std::string msg = "invalid config: " + bad.front();
  for (std::size_t i = 1; i < bad.size(); ++i) msg += "; " + bad[i];
  throw ConfigError(msg);
}

SchemeConfig RunConfig::scheme() const {
  SchemeConfig s;
  s.dt = dt;
  s.steps = steps;
  s.theta = theta;
  s.lambda = lambda.value_or(0.0);
  s.grid = Grid(crop_rows, crop_cols, h, h);
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = batch_size;
  t.crop1 = crop_rows;
  t.crop2 = crop_cols;
  t.sigma = sigma;
  t.scheme = scheme();
  t.scheme.theta = 0;
  t.k_max = k_max;
  t.seed = seed;
  t.deterministic = deterministic;
  t.threads = threads;
  t.heldout_size = heldout_size;
  t.heldout_every = heldout_every;
  return t;
}

LagrangianState RunConfig::lagrangian() const {
  LagrangianState l = LagrangianState::initial(p);
  l.mu_bar = mu_bar;
  l.rho = rho;
  l.tau = tau;
  l.gamma = gamma;
  return l;
}

AdamState RunConfig::adam(std::size_t n) const {
  AdamState a = AdamState::initial(n);
  a.alpha = adam_alpha;
  a.beta1 = adam_beta1;
  a.beta2 = adam_beta2;
  a.eps = adam_eps;
  return a;
}

}  // namespace xdiff
