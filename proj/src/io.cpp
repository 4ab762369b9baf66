#include "bnuk/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace bnuk {
namespace {

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(what) + " must be a 3-element array");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw std::invalid_argument(std::string(what) + " must be numeric");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

void require_keys(const json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
  for (const char* k : keys) {
    if (!j.contains(k)) throw std::invalid_argument(std::string(what) + " is missing \"" + k + "\"");
  }
}

void append_row(std::string& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_double(v);
    first = false;
  }
  out += '\n';
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json spline_to_json(const UniformBSpline& s) {
  json cps = json::array();
  for (const auto& p : s.control_points()) cps.push_back(vec_json(p));
  return json{{"order", s.order()}, {"dt", s.dt()}, {"t0", s.t0()}, {"control_points", cps}};
}

UniformBSpline spline_from_json(const json& j) {
  require_keys(j, {"order", "dt", "t0", "control_points"}, "spline");
  std::vector<Vec3> cps;
  for (const auto& p : j.at("control_points")) cps.push_back(vec_from(p, "control point"));
  return UniformBSpline(j.at("order").get<int>(), j.at("dt").get<double>(), j.at("t0").get<double>(), std::move(cps));
}

std::string samples_csv(const UniformBSpline& s, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("sample period must be positive");
  std::string out = "t,x,y,z,vx,vy,vz,ax,ay,az\n";
  const auto n = static_cast<std::size_t>(std::ceil(s.duration() / period - 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = i == n ? s.t_end() : s.t0() + static_cast<double>(i) * period;
    const Vec3 p = s.evaluate(t, 0);
    const Vec3 v = s.evaluate(t, 1);
    const Vec3 a = s.evaluate(t, 2);
    append_row(out, {t, p.x(), p.y(), p.z(), v.x(), v.y(), v.z(), a.x(), a.y(), a.z()});
  }
  return out;
}

json map_to_json(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  json runs = json::array();
  std::uint8_t current = 0;
  std::size_t count = 0;
  for (auto c : grid.cells()) {
    const std::uint8_t bit = c ? 1 : 0;
    if (bit != current) {
      runs.push_back(count);
      current = bit;
      count = 0;
    }
    ++count;
  }
  runs.push_back(count);
  return json{{"origin", vec_json(g.origin)},
              {"resolution", g.resolution},
              {"dims", json::array({g.dims.x(), g.dims.y(), g.dims.z()})},
              {"encoding", "rle"},
              {"runs", runs}};
}

OccupancyGrid map_from_json(const json& j) {
  require_keys(j, {"origin", "resolution", "dims", "encoding", "runs"}, "map");
  if (j.at("encoding") != "rle") throw std::invalid_argument("unsupported map encoding");
  GridGeometry g;
  g.origin = vec_from(j.at("origin"), "origin");
  g.resolution = j.at("resolution").get<double>();
  const auto& dims = j.at("dims");
  if (!dims.is_array() || dims.size() != 3) throw std::invalid_argument("dims must be a 3-element array");
  for (int a = 0; a < 3; ++a) g.dims[a] = dims[static_cast<std::size_t>(a)].get<int>();
  OccupancyGrid grid(g);
  auto& cells = grid.cells();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (const auto& r : j.at("runs")) {
    const auto n = r.get<std::size_t>();
    if (n > cells.size() - pos) throw std::invalid_argument("map runs exceed the grid size");
    std::fill_n(cells.begin() + static_cast<std::ptrdiff_t>(pos), n, value);
    pos += n;
    value ^= 1;
  }
  if (pos != cells.size()) throw std::invalid_argument("map runs do not cover the grid");
  return grid;
}

OccupancyGrid load_point_cloud(std::istream& in, const GridGeometry& geometry) {
  OccupancyGrid grid(geometry);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    Eigen::Vector3d p;
    if (!(ss >> p.x() >> p.y() >> p.z())) {
      throw std::invalid_argument("point cloud line " + std::to_string(line_no) + " is not `x y z`");
    }
    grid.mark_point(p);
  }
  return grid;
}

std::string esdf_csv(const DistanceField& field) {
  const GridGeometry& g = field.geometry();
  std::string out = "ix,iy,iz,dist_m\n";
  out.reserve(out.size() + g.cell_count() * 24);
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const Index3 idx = g.unlinear(i);
    out += std::to_string(idx.x());
    out += ',';
    out += std::to_string(idx.y());
    out += ',';
    out += std::to_string(idx.z());
    out += ',';
    out += format_double(field.values()[i]);
    out += '\n';
  }
  return out;
}

DistanceField esdf_from_csv(std::istream& in, const GridGeometry& geometry) {
  geometry.validate();
  std::vector<double> dist(geometry.cell_count(), 0.0);
  std::vector<std::uint8_t> seen(geometry.cell_count(), 0);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ix,iy,iz,dist_m", 0) != 0) {
    throw std::invalid_argument("ESDF CSV header must be ix,iy,iz,dist_m");
  }
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    Index3 idx;
    double d = 0.0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int a = 0; a < 4; ++a) {
      std::from_chars_result r{};
      if (a < 3) {
        r = std::from_chars(p, end, idx[a]);
      } else {
        r = std::from_chars(p, end, d);
      }
      if (r.ec != std::errc()) throw std::invalid_argument("malformed ESDF row: " + line);
      p = r.ptr;
      if (a < 3) {
        if (p == end || *p != ',') throw std::invalid_argument("malformed ESDF row: " + line);
        ++p;
      }
    }
    if (!geometry.in_bounds(idx)) throw std::invalid_argument("ESDF row outside the grid: " + line);
    const std::size_t k = geometry.linear(idx);
    dist[k] = d;
    seen[k] = 1;
  }
  for (auto s : seen) {
    if (!s) throw std::invalid_argument("ESDF CSV does not cover every cell");
  }
  return DistanceField(geometry, std::move(dist));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  fs::create_directories(dir);
  fs::path tmp = dir / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace bnuk
