#include "fsep/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace fsep {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

Index3 to_partitions(const std::string& key, const std::string& v) {
  Index3 p;
  char x1 = 0, x2 = 0;
  std::istringstream s(v);
  if (!(s >> p.x() >> x1 >> p.y() >> x2 >> p.z()) || x1 != 'x' || x2 != 'x' || !s.eof())
    throw ConfigError("'" + key + "' expects AxBxC, got '" + v + "'");
  return p;
}

}  // namespace

void PipelineConfig::validate() const {
  if (dataset.empty()) throw ConfigError("'dataset' is required");
  if (output.empty()) throw ConfigError("'output' is required");
  if (t0_index < 0 || tf_index < 0) throw ConfigError("step indices must be >= 0");
  try {
    advection.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const bool backward = tf_index < t0_index;
  if (backward != (advection.direction == TimeDirection::Backward) && tf_index != t0_index)
    throw ConfigError("'direction' disagrees with the order of t0_index and tf_index");
  if ((partitions.array() < 1).any()) throw ConfigError("partition counts must be >= 1");
  if (ghost_width < 2) throw ConfigError("'ghost_width' must be >= 2");
  if (!(export_options.smooth_lambda > 0.0 && export_options.smooth_lambda <= 1.0))
    throw ConfigError("'smooth_lambda' must be in (0, 1]");
  if (export_options.smooth_iterations < 0) throw ConfigError("'smooth_iterations' must be >= 0");
}

PipelineConfig parse_config(std::istream& in, const fs::path& base_dir) {
  PipelineConfig c;
  bool direction_given = false;
  auto path_of = [&](const std::string& v) {
    const fs::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters = {
      {"dataset", [&](auto&, auto& v) { c.dataset = path_of(v); }},
      {"output", [&](auto&, auto& v) { c.output = path_of(v); }},
      {"t0_index", [&](auto& k, auto& v) { c.t0_index = to_int(k, v); }},
      {"tf_index", [&](auto& k, auto& v) { c.tf_index = to_int(k, v); }},
      {"tau", [&](auto& k, auto& v) { c.tau = to_double(k, v); }},
      {"refinement", [&](auto& k, auto& v) { c.advection.refinement = to_int(k, v); }},
      {"substeps", [&](auto& k, auto& v) { c.advection.substeps = to_int(k, v); }},
      {"trail_stride", [&](auto& k, auto& v) { c.advection.trail_stride = to_int(k, v); }},
      {"corrector",
       [&](auto&, auto& v) {
         try {
           c.advection.corrector = parse_corrector_mode(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"direction",
       [&](auto&, auto& v) {
         direction_given = true;
         if (v == "forward")
           c.advection.direction = TimeDirection::Forward;
         else if (v == "backward")
           c.advection.direction = TimeDirection::Backward;
         else
           throw ConfigError("'direction' expects forward or backward, got '" + v + "'");
       }},
      {"partitions", [&](auto& k, auto& v) { c.partitions = to_partitions(k, v); }},
      {"ghost_width", [&](auto& k, auto& v) { c.ghost_width = to_int(k, v); }},
      {"smooth_iterations",
       [&](auto& k, auto& v) { c.export_options.smooth_iterations = to_int(k, v); }},
      {"smooth_lambda", [&](auto& k, auto& v) { c.export_options.smooth_lambda = to_double(k, v); }},
      {"min_component_triangles",
       [&](auto& k, auto& v) {
         const int n = to_int(k, v);
         if (n < 0) throw ConfigError("'min_component_triangles' must be >= 0");
         c.export_options.min_component_triangles = static_cast<std::size_t>(n);
       }},
  };

  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    it->second(key, value);
  }
  if (!direction_given)
    c.advection.direction =
        c.tf_index < c.t0_index ? TimeDirection::Backward : TimeDirection::Forward;
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

void write_config(const PipelineConfig& c, std::ostream& out) {
  char num[64];
  std::snprintf(num, sizeof num, "%.17g", c.tau);
  out << "dataset = " << c.dataset.string() << '\n'
      << "output = " << c.output.string() << '\n'
      << "t0_index = " << c.t0_index << '\n'
      << "tf_index = " << c.tf_index << '\n'
      << "tau = " << num << '\n'
      << "refinement = " << c.advection.refinement << '\n'
      << "substeps = " << c.advection.substeps << '\n'
      << "corrector = " << to_string(c.advection.corrector) << '\n'
      << "trail_stride = " << c.advection.trail_stride << '\n'
      << "direction = "
      << (c.advection.direction == TimeDirection::Forward ? "forward" : "backward") << '\n'
      << "partitions = " << c.partitions.x() << 'x' << c.partitions.y() << 'x' << c.partitions.z()
      << '\n'
      << "ghost_width = " << c.ghost_width << '\n'
      << "smooth_iterations = " << c.export_options.smooth_iterations << '\n';
  std::snprintf(num, sizeof num, "%.17g", c.export_options.smooth_lambda);
  out << "smooth_lambda = " << num << '\n'
      << "min_component_triangles = " << c.export_options.min_component_triangles << '\n';
}

}  // namespace fsep
