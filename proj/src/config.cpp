#include "trajex/config.hpp"

#include <cmath>
#include <initializer_list>
#include <string>

#include "trajex/error.hpp"
#include "trajex/io.hpp"

namespace trajex {

void CurationConfig::validate() const {
  if (!(min_detection_confidence >= 0.0 && min_detection_confidence <= 1.0))
    throw InputError("config: curation.min_detection_confidence must lie in [0, 1]");
  if (!(min_registration_fitness >= 0.0 && min_registration_fitness <= 1.0))
    throw InputError("config: curation.min_registration_fitness must lie in [0, 1]");
  if (!(max_registration_rmse > 0.0))
    throw InputError("config: curation.max_registration_rmse must be > 0");
}

void PipelineConfig::validate() const {
  registration.validate();
  curation.validate();
  if (jobs < 1) throw InputError("config: jobs must be >= 1");
}

namespace {

using nlohmann::json;

void check_keys(const json &j, const std::string &where, std::initializer_list<const char *> keys) {
  if (!j.is_object()) throw InputError("config: " + where + " must be an object");
  for (const auto &[k, v] : j.items()) {
    bool known = false;
    for (const char *name : keys) known = known || k == name;
    if (!known) throw InputError("config: unknown key '" + where + k + "'");
  }
}

template <typename T>
void read(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw InputError("config: '" + where + key + "' has the wrong type");
  }
}

}  // namespace

PipelineConfig config_from_json(const json &j) {
  PipelineConfig c;
  auto &r = c.registration;
  check_keys(j, "",
             {"voxel_size", "fpfh_radius", "fpfh_max_neighbors", "normal_neighbors",
              "min_valid_points", "ransac", "icp", "curation", "seed", "jobs"});
  read(j, "voxel_size", r.voxel_size, "");
  read(j, "fpfh_radius", r.fpfh_radius, "");
  read(j, "fpfh_max_neighbors", r.fpfh_max_neighbors, "");
  read(j, "normal_neighbors", r.normal_neighbors, "");
  read(j, "min_valid_points", r.min_valid_points, "");
  read(j, "seed", c.seed, "");
  read(j, "jobs", c.jobs, "");
  if (j.contains("ransac")) {
    const json &s = j["ransac"];
    check_keys(s, "ransac.",
               {"distance_threshold", "max_iterations", "confidence", "edge_length_ratio"});
    read(s, "distance_threshold", r.ransac.distance_threshold, "ransac.");
    read(s, "max_iterations", r.ransac.max_iterations, "ransac.");
    read(s, "confidence", r.ransac.confidence, "ransac.");
    read(s, "edge_length_ratio", r.ransac.edge_length_ratio, "ransac.");
  }
  if (j.contains("icp")) {
    const json &s = j["icp"];
    check_keys(s, "icp.",
               {"distance_threshold", "max_iterations", "relative_fitness", "relative_rmse",
                "color_weight"});
    read(s, "distance_threshold", r.icp.distance_threshold, "icp.");
    read(s, "max_iterations", r.icp.max_iterations, "icp.");
    read(s, "relative_fitness", r.icp.relative_fitness, "icp.");
    read(s, "relative_rmse", r.icp.relative_rmse, "icp.");
    read(s, "color_weight", r.icp.color_weight, "icp.");
  }
  if (j.contains("curation")) {
    const json &s = j["curation"];
    check_keys(s, "curation.",
               {"min_detection_confidence", "min_registration_fitness", "max_registration_rmse"});
    read(s, "min_detection_confidence", c.curation.min_detection_confidence, "curation.");
    read(s, "min_registration_fitness", c.curation.min_registration_fitness, "curation.");
    // null means unbounded
    if (s.contains("max_registration_rmse") && !s["max_registration_rmse"].is_null())
      read(s, "max_registration_rmse", c.curation.max_registration_rmse, "curation.");
  }
  c.validate();
  return c;
}

json config_to_json(const PipelineConfig &c) {
  const auto &r = c.registration;
  json j;
  j["voxel_size"] = r.voxel_size;
  j["fpfh_radius"] = r.fpfh_radius;
  j["fpfh_max_neighbors"] = r.fpfh_max_neighbors;
  j["normal_neighbors"] = r.normal_neighbors;
  j["min_valid_points"] = r.min_valid_points;
  j["ransac"] = {{"distance_threshold", r.ransac.distance_threshold},
                 {"max_iterations", r.ransac.max_iterations},
                 {"confidence", r.ransac.confidence},
                 {"edge_length_ratio", r.ransac.edge_length_ratio}};
  j["icp"] = {{"distance_threshold", r.icp.distance_threshold},
              {"max_iterations", r.icp.max_iterations},
              {"relative_fitness", r.icp.relative_fitness},
              {"relative_rmse", r.icp.relative_rmse},
              {"color_weight", r.icp.color_weight}};
  j["curation"] = {{"min_detection_confidence", c.curation.min_detection_confidence},
                   {"min_registration_fitness", c.curation.min_registration_fitness}};
  if (std::isfinite(c.curation.max_registration_rmse))
    j["curation"]["max_registration_rmse"] = c.curation.max_registration_rmse;
  else
    j["curation"]["max_registration_rmse"] = nullptr;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  return j;
}

PipelineConfig load_config(const std::filesystem::path &path) {
  return config_from_json(io::read_json_file(path));
}

}  // namespace trajex
