#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

#include "bnuk/field.hpp"
#include "bnuk/spline.hpp"

namespace bnuk {

using json = nlohmann::json;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// {order, dt, t0, control_points: [[x,y,z], ...]}
json spline_to_json(const UniformBSpline& s);
UniformBSpline spline_from_json(const json& j);

/// CSV `t,x,y,z,vx,vy,vz,ax,ay,az` sampled every period seconds, last row at t_end.
std::string samples_csv(const UniformBSpline& s, double period);

/// {origin, resolution, dims, encoding: "rle", runs: [...]} where runs
/// alternate free and occupied cell counts in x-fastest order, free first.
json map_to_json(const OccupancyGrid& grid);
OccupancyGrid map_from_json(const json& j);

/// Voxelizes whitespace-separated `x y z` lines (meters) into a grid with the
/// given geometry. Blank lines and lines starting with '#' are skipped;
/// points outside the grid are ignored.
OccupancyGrid load_point_cloud(std::istream& in, const GridGeometry& geometry);

/// CSV `ix,iy,iz,dist_m`, one row per cell in x-fastest order.
std::string esdf_csv(const DistanceField& field);
DistanceField esdf_from_csv(std::istream& in, const GridGeometry& geometry);

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace bnuk
