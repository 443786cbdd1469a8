#include "xdiff/params_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xdiff/error.hpp"

namespace xdiff {

using nlohmann::json;

ParamsFile ParamsFile::from_theta(const ParameterVector& theta, const RbfBasis& basis, Provenance prov) {
  ParamsFile f;
  f.lambda = theta.lambda;
  f.set = theta.to_set(basis);
  f.provenance = std::move(prov);
  return f;
}

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError("params: missing key '" + where + key + "'");
  return obj.at(key);
}

double number(const json& obj, const char* key, const std::string& where = "") {
  const json& v = field(obj, key, where);
  if (!v.is_number()) throw FormatError("params: '" + where + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw FormatError("params: '" + where + key + "' must be finite");
  return x;
}

}  // namespace

ParamsFile params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("params: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("params: top level must be an object");
  const json& ver = field(j, "schema_version", "");
  if (!ver.is_number_integer() || ver.get<int>() != kParamsSchemaVersion)
    throw FormatError("params: unsupported schema_version (expected " + std::to_string(kParamsSchemaVersion) + ")");

  ParamsFile f;
  f.lambda = number(j, "lambda");
  const json& b = field(j, "basis", "");
  const json& pj = field(b, "P", "basis.");
  if (!pj.is_number_integer() || pj.get<long long>() < 2) throw FormatError("params: 'basis.P' must be an integer >= 2");
  const int p = pj.get<int>();
  RbfBasis basis;
  try {
    basis = RbfBasis::equidistant(number(b, "a_min", "basis."), number(b, "a_max", "basis."), p,
                                  number(b, "nu", "basis."));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("params: invalid basis: ") + e.what());
  }

  const json& d = field(j, "deltas", "");
  if (!d.is_array() || d.size() != 4) throw FormatError("params: 'deltas' must hold 4 arrays");
  std::array<std::vector<double>, 4> deltas;
  for (std::size_t l = 0; l < 4; ++l) {
    if (!d[l].is_array() || d[l].size() != static_cast<std::size_t>(p))
      throw FormatError("params: deltas[" + std::to_string(l) + "] must have P = " + std::to_string(p) + " entries");
    for (const json& x : d[l]) {
      if (!x.is_number() || !std::isfinite(x.get<double>()))
        throw FormatError("params: deltas[" + std::to_string(l) + "] entries must be finite numbers");
      deltas[l].push_back(x.get<double>());
    }
  }
  f.set = InfluenceSet(basis, std::move(deltas));

  if (j.contains("provenance")) {
    const json& pr = j.at("provenance");
    if (!pr.is_object()) throw FormatError("params: 'provenance' must be an object");
    try {
      if (pr.contains("seed")) f.provenance.seed = pr.at("seed").get<std::uint64_t>();
      if (pr.contains("config_hash")) f.provenance.config_hash = pr.at("config_hash").get<std::string>();
      if (pr.contains("iterations")) f.provenance.iterations = pr.at("iterations").get<int>();
    } catch (const json::exception& e) {
      throw FormatError(std::string("params: invalid provenance: ") + e.what());
    }
  }
  return f;
}

std::string params_to_json(const ParamsFile& f) {
  json j;
  j["schema_version"] = f.schema_version;
  j["lambda"] = f.lambda;
  j["basis"] = {{"a_min", f.set.basis.a_min()}, {"a_max", f.set.basis.a_max()}, {"P", f.set.basis.p()},
                {"nu", f.set.basis.nu()}};
  j["deltas"] = json::array();
  for (const auto& d : f.set.deltas) j["deltas"].push_back(d);
  j["provenance"] = {{"seed", f.provenance.seed},
                     {"config_hash", f.provenance.config_hash},
                     {"iterations", f.provenance.iterations}};
  return j.dump(2) + "\n";
}

ParamsFile load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return params_from_json(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_params(const ParamsFile& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << params_to_json(params);
  if (!out) throw IoError("write failed: " + path.string());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace xdiff
