#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "fsep/advect.hpp"

namespace fsep {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExportOptions {
  int smooth_iterations = 10;
  double smooth_lambda = 0.5;
  std::size_t min_component_triangles = 0;  // 0 keeps every component
};

struct PipelineConfig {
  std::filesystem::path dataset;  // manifest
  int t0_index = 0;
  int tf_index = 0;
  double tau = 0.0;
  AdvectionConfig advection;
  Index3 partitions = Index3::Ones();  // 1x1x1 runs serially
  int ghost_width = 2;
  std::filesystem::path output;
  ExportOptions export_options;

  bool partitioned() const { return partitions.prod() > 1; }
  void validate() const;
};

// Line-oriented "key = value" text; '#' starts a comment. Unknown keys,
// malformed values and duplicates raise ConfigError. Relative paths resolve
// against base_dir.
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
void write_config(const PipelineConfig& config, std::ostream& out);

}  // namespace fsep
