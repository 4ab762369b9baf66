#include "bnuk/config.hpp"

#include <functional>
#include <map>

namespace bnuk {
namespace {

using Setter = std::function<void(const json&)>;

// Already carries its full key path.
class KeyError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Applies each key of obj through its setter; unknown keys and type errors
// become ConfigError with the dotted key path.
void apply(const json& obj, const std::string& where, const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) throw ConfigError("expected an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) throw KeyError("unknown key '" + path + "'");
    try {
      it->second(value);
    } catch (const KeyError&) {
      throw;
    } catch (const json::exception& e) {
      throw KeyError(path + ": " + e.what());
    } catch (const ConfigError& e) {
      throw KeyError(path + ": " + e.what());
    }
  }
}

Vec3 to_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json from_vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
Setter set(T& field) {
  return [&field](const json& j) {
    if constexpr (std::is_same_v<T, Vec3>) {
      field = to_vec3(j);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError("expected a boolean");
      field = j.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError("expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError("expected a nonnegative integer");
      }
      field = j.get<T>();
    } else {
      if (!j.is_number()) throw ConfigError("expected a number");
      field = j.get<T>();
    }
  };
}

std::map<std::string, Setter> map_setters(MapSpec& m) {
  return {{"seed", set(m.seed)},
          {"origin", set(m.origin)},
          {"size", set(m.size)},
          {"resolution", set(m.resolution)},
          {"obstacle_count", set(m.obstacle_count)},
          {"cylinder_fraction", set(m.cylinder_fraction)},
          {"radius_min", set(m.radius_min)},
          {"radius_max", set(m.radius_max)},
          {"height_min", set(m.height_min)},
          {"height_max", set(m.height_max)},
          {"keep_free_radius", set(m.keep_free_radius)},
          {"max_attempts", set(m.max_attempts)},
          {"keep_free", [&m](const json& j) {
             if (!j.is_array()) throw ConfigError("expected a list of points");
             m.keep_free.clear();
             for (const auto& p : j) m.keep_free.push_back(to_vec3(p));
           }}};
}

json map_json(const MapSpec& m) {
  json free = json::array();
  for (const auto& p : m.keep_free) free.push_back(from_vec3(p));
  return {{"seed", m.seed},
          {"origin", from_vec3(m.origin)},
          {"size", from_vec3(m.size)},
          {"resolution", m.resolution},
          {"obstacle_count", m.obstacle_count},
          {"cylinder_fraction", m.cylinder_fraction},
          {"radius_min", m.radius_min},
          {"radius_max", m.radius_max},
          {"height_min", m.height_min},
          {"height_max", m.height_max},
          {"keep_free", free},
          {"keep_free_radius", m.keep_free_radius},
          {"max_attempts", m.max_attempts}};
}

}  // namespace

void RunConfig::validate() const {
  planner.validate();
  map.validate();
  if (bench.maps < 1) throw ConfigError("bench.maps must be at least 1");
  if (replan.worlds < 1) throw ConfigError("replan.worlds must be at least 1");
  replan.world.validate();
  const ReplanConfig& r = replan.sim;
  if (!((r.window.array() > 0.0).all())) throw ConfigError("replan.window must be positive");
  if (!(r.sim_step > 0.0)) throw ConfigError("replan.sim_step must be positive");
  if (!(r.goal_margin >= 0.0) || !(r.goal_clearance > 0.0) || !(r.trigger_distance >= 0.0) ||
      !(r.arrive_tolerance > 0.0)) {
    throw ConfigError("replan distances must be nonnegative");
  }
  if (r.max_plans < 1) throw ConfigError("replan.max_plans must be at least 1");
  if (!query.start.allFinite() || !query.goal.allFinite() || !query.start_vel.allFinite() ||
      !query.start_acc.allFinite() || !query.start_jerk.allFinite() || !query.goal_vel.allFinite()) {
    throw ConfigError("query values must be finite");
  }
}

void RunConfig::set_seed(std::uint64_t seed) {
  map.seed = seed;
  bench.first_seed = seed;
  replan.first_seed = seed;
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  SearchConfig& s = c.planner.search;
  apply(j, "",
        {{"planner",
          [&](const json& p) {
            apply(p, "planner",
                  {{"dt", set(s.dt)},
                   {"v_max", set(s.limits.v_max)},
                   {"a_max", set(s.limits.a_max)},
                   {"per_axis_limits", set(s.limits.per_axis)},
                   {"tau", set(s.tau)},
                   {"lambda", set(s.lambda)},
                   {"weights",
                    [&](const json& w) {
                      if (!w.is_array() || w.size() != 4) throw ConfigError("expected 4 weights");
                      for (std::size_t i = 0; i < 4; ++i) s.weights[i] = w[i].get<double>();
                    }},
                   {"goal_tolerance", set(s.goal_tolerance)},
                   {"max_expansions", set(s.max_expansions)},
                   {"use_heuristic", set(s.use_heuristic)},
                   {"taper", set(s.taper)},
                   {"sample_period", set(c.planner.sample_period)}});
          }},
         {"map",
          [&](const json& m) {
            auto setters = map_setters(c.map);
            setters["file"] = [&](const json& f) {
              const std::filesystem::path p = f.get<std::string>();
              c.map_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            };
            apply(m, "map", setters);
          }},
         {"query",
          [&](const json& q) {
            apply(q, "query",
                  {{"start", set(c.query.start)},
                   {"start_vel", set(c.query.start_vel)},
                   {"start_acc", set(c.query.start_acc)},
                   {"start_jerk", set(c.query.start_jerk)},
                   {"goal", set(c.query.goal)},
                   {"goal_vel", set(c.query.goal_vel)}});
          }},
         {"bench",
          [&](const json& b) {
            apply(b, "bench", {{"maps", set(c.bench.maps)}, {"first_seed", set(c.bench.first_seed)}});
          }},
         {"replan",
          [&](const json& r) {
            ReplanConfig& sim = c.replan.sim;
            apply(r, "replan",
                  {{"window", set(sim.window)},
                   {"goal_margin", set(sim.goal_margin)},
                   {"goal_clearance", set(sim.goal_clearance)},
                   {"trigger_distance", set(sim.trigger_distance)},
                   {"sim_step", set(sim.sim_step)},
                   {"max_plans", set(sim.max_plans)},
                   {"arrive_tolerance", set(sim.arrive_tolerance)},
                   {"worlds", set(c.replan.worlds)},
                   {"first_seed", set(c.replan.first_seed)},
                   {"world", [&](const json& w) { apply(w, "replan.world", map_setters(c.replan.world)); }}});
          }},
         {"output",
          [&](const json& o) {
            apply(o, "output", {{"dir", [&](const json& d) { c.output_dir = d.get<std::string>(); }}});
          }}});
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  const SearchConfig& s = c.planner.search;
  json map = map_json(c.map);
  if (c.map_file) map["file"] = c.map_file->string();
  json world = map_json(c.replan.world);
  const ReplanConfig& r = c.replan.sim;
  return {{"planner",
           {{"dt", s.dt},
            {"v_max", s.limits.v_max},
            {"a_max", s.limits.a_max},
            {"per_axis_limits", s.limits.per_axis},
            {"tau", s.tau},
            {"lambda", s.lambda},
            {"weights", s.weights},
            {"goal_tolerance", s.goal_tolerance},
            {"max_expansions", s.max_expansions},
            {"use_heuristic", s.use_heuristic},
            {"taper", s.taper},
            {"sample_period", c.planner.sample_period}}},
          {"map", map},
          {"query",
           {{"start", from_vec3(c.query.start)},
            {"start_vel", from_vec3(c.query.start_vel)},
            {"start_acc", from_vec3(c.query.start_acc)},
            {"start_jerk", from_vec3(c.query.start_jerk)},
            {"goal", from_vec3(c.query.goal)},
            {"goal_vel", from_vec3(c.query.goal_vel)}}},
          {"bench", {{"maps", c.bench.maps}, {"first_seed", c.bench.first_seed}}},
          {"replan",
           {{"window", from_vec3(r.window)},
            {"goal_margin", r.goal_margin},
            {"goal_clearance", r.goal_clearance},
            {"trigger_distance", r.trigger_distance},
            {"sim_step", r.sim_step},
            {"max_plans", r.max_plans},
            {"arrive_tolerance", r.arrive_tolerance},
            {"worlds", c.replan.worlds},
            {"first_seed", c.replan.first_seed},
            {"world", world}}},
          {"output", {{"dir", c.output_dir.string()}}}};
}

}  // namespace bnuk
