#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "bnuk/bench.hpp"
#include "bnuk/io.hpp"
#include "bnuk/mapgen.hpp"
#include "bnuk/planner.hpp"

namespace bnuk {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QueryConfig {
  Vec3 start{10.0, 10.0, 2.0};
  Vec3 start_vel = Vec3::Zero();
  Vec3 start_acc = Vec3::Zero();
  Vec3 start_jerk = Vec3::Zero();
  Vec3 goal{19.0, 10.0, 2.0};
  Vec3 goal_vel = Vec3::Zero();

  FlatState start_state() const { return {start, start_vel, start_acc, start_jerk}; }
};

struct BenchConfig {
  int maps = 50;
  std::uint64_t first_seed = 1;
};

struct ReplanRunConfig {
  /// planner is taken from RunConfig::planner.
  ReplanConfig sim{};
  int worlds = 10;
  std::uint64_t first_seed = 1;
  /// Generator settings for each world; seed and keep_free are filled per run.
  MapSpec world = replan_world_spec(1);
};

/// Everything a CLI run needs. Every key is optional; unknown keys are errors.
struct RunConfig {
  PlannerConfig planner{};
  MapSpec map{};
  /// Map file to load instead of generating one: RLE JSON (`.json`) or a
  /// point cloud of `x y z` lines voxelized with the `map` geometry.
  std::optional<std::filesystem::path> map_file;
  QueryConfig query{};
  BenchConfig bench{};
  ReplanRunConfig replan{};
  std::filesystem::path output_dir = "out";

  void validate() const;
  /// Applies --seed to every seeded section.
  void set_seed(std::uint64_t seed);
};

/// Parses on top of the defaults and validates. Relative map_file paths are
/// resolved against base_dir.
RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved configuration, parseable by parse_run_config.
json run_config_to_json(const RunConfig& cfg);

}  // namespace bnuk
