#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cylattract/skew_map.hpp"

namespace cylattract {

// Map family plus run parameters, read from / written to a line-based
// `key = value` file with [section] headers and `#` comments.  Unspecified
// keys keep their defaults, so a config written by emit_config parses back
// to the identical state (doubles are emitted with 17 significant digits).
struct RunConfig {
  SkewParams map;
  std::vector<TrigTerm> pert_u, pert_v;

  std::uint64_t seed = 42;
  int samples = 1000;
  long burn_in = 1000;
  long iters = 100000;
  int grid_theta = 512;
  int grid_y = 128;
  int threads = 0;  // 0 = library default
  double collar = 0.1;
  double pullback_extent = 1e-3;
  int pullback_count = 1;
  std::string out_dir = ".";

  Perturbation perturbation() const { return {pert_u, pert_v}; }
};

RunConfig default_config();

std::string emit_config(const RunConfig& c);
// ConfigError with the offending line number
RunConfig parse_config(const std::string& text);

// file variants; ConfigError on IO failure
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& c, const std::string& path);

}  // namespace cylattract
