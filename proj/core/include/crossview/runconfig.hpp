#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossview/model.hpp"

namespace crossview {

// Flat key=value run configuration. Unknown keys are rejected; every run
// writes its fully-resolved snapshot next to its outputs.
struct RunConfig {
  std::string manifest;
  std::string out_dir;
  std::string checkpoint;

  std::vector<int> schedule = {64, 128, 256, 512, 512, 512, 512};
  Scheme scheme = Scheme::kSchemeI;
  int pano_width = 128;
  int pano_height = 64;
  int sat_width = 112;
  int sat_height = 112;

  int batch_size = 12;
  double lr = 1e-5;
  double alpha = 10.0;
  double gem_p = 3.0;
  int64_t steps = 2000;
  int64_t epochs = 0;  // when nonzero and steps == 0, steps = epochs * batches/epoch
  uint64_t seed = 1;
  bool augment = false;
  int64_t checkpoint_every = 0;  // 0 = final checkpoint only
  int64_t log_every = 1;
  int embed_batch = 24;
  std::vector<double> sweep_levels = {0, 5, 10, 15, 20};

  ModelConfig model_config() const;
  void validate() const;
};

RunConfig parse_run_config(const std::string& path);

// Applies one `key=value` override (the CLI's --key value flags funnel here).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical snapshot; parsing it back yields the same configuration.
std::string render_run_config(const RunConfig& cfg);

std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace crossview
