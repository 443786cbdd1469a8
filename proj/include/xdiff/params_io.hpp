#pragma once

// Versioned JSON serialization of trained parameters.

#include <cstdint>
#include <filesystem>
#include <string>

#include "xdiff/autodiff.hpp"
#include "xdiff/influence.hpp"

namespace xdiff {

inline constexpr int kParamsSchemaVersion = 1;

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  int iterations = 0;
};

struct ParamsFile {
  int schema_version = kParamsSchemaVersion;
  double lambda = 0.0;
  InfluenceSet set;
  Provenance provenance;

  ParameterVector theta() const { return ParameterVector::from_set(set, lambda); }
  static ParamsFile from_theta(const ParameterVector& theta, const RbfBasis& basis, Provenance prov = {});
};

// Throws FormatError for malformed JSON, a wrong schema version, missing
// keys or array lengths that do not match P.
ParamsFile params_from_json(const std::string& text);
std::string params_to_json(const ParamsFile& params);

ParamsFile load_params(const std::filesystem::path& path);
void save_params(const ParamsFile& params, const std::filesystem::path& path);

// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace xdiff
