#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "cvgp/dataset.hpp"
#include "cvgp/liknet.hpp"
#include "cvgp/pod.hpp"
#include "cvgp/recognition.hpp"

namespace cvgp {

inline constexpr const char* kVersion = "0.1.0";

struct Provenance {
  std::string version = kVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  double noise = 0.0;
};

/// Everything a trained pipeline needs to predict.
struct ModelBundle {
  PhysicalGrid grid;  // training grid
  PodBasis pod;
  LatentRecognition recog;
  LikelihoodNet net;
  std::optional<LikelihoodNet> discrete;
  Provenance provenance;

  /// Checks that k, d, m and M agree across components.
  void validate() const;
};

// Text format: a few `key value` header lines, then tagged matrices
// `name rows cols` followed by `rows` lines of values. GPR models are stored
// as hyperparameters plus training data and refactorized on load.
std::string serialize_bundle(const ModelBundle& b);
ModelBundle parse_bundle(const std::string& text);
void save_bundle(const ModelBundle& b, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace cvgp
