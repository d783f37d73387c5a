#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>

#include "json.hpp"
#include "trajex/registration.hpp"

namespace trajex {

struct CurationConfig {
  double min_detection_confidence = 0.3;
  /// Pairs whose final ICP fitness falls below this reject the clip.
  double min_registration_fitness = 0.0;
  /// Pairs whose final ICP inlier RMSE exceeds this reject the clip.
  double max_registration_rmse = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct PipelineConfig {
  registration::PairwiseConfig registration;
  CurationConfig curation;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json &j);
nlohmann::json config_to_json(const PipelineConfig &config);
PipelineConfig load_config(const std::filesystem::path &path);

}  // namespace trajex
