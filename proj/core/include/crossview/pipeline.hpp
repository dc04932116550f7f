#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crossview/checkpoint.hpp"
#include "crossview/dataset.hpp"
#include "crossview/evaluation.hpp"
#include "crossview/runconfig.hpp"

namespace crossview {

// Long-running drivers shared by the CLI and the acceptance suite. Every
// driver is deterministic given its config and seed.

struct TrainResult {
  std::string checkpoint_path;
  std::string loss_log_path;
  std::vector<double> losses;  // one per step
};

// Train from the manifest's train split: embed -> exhaustive triplets ->
// batch loss -> Adam. Writes checkpoint.bin, loss_log.csv (step,loss),
// timing.csv, resolved.cfg, and model.txt under cfg.out_dir.
TrainResult run_training(const RunConfig& cfg);

// Embeds one side of a manifest with a trained model into an index file.
// Positions are attached when every selected record carries lat/lon.
std::string run_embed(const RunConfig& cfg, const std::string& checkpoint_path,
                      const std::string& manifest_path, View side,
                      std::optional<Split> split, const std::string& out_index_path);

struct EvalResult {
  RecallReport recall;
  std::optional<double> localization;  // fraction localized within the radius
  int localization_n_top = 1;
  double localization_radius_m = 5.0;
};

// Ground index rows are the queries; ids match satellite rows pairwise.
EvalResult run_eval(const std::string& ground_index_path, const std::string& satellite_index_path,
                    int localization_n_top = 1, double localization_radius_m = 5.0);

void write_eval_reports(const EvalResult& result, const std::string& out_dir);

// North-noise robustness sweep over the manifest's chosen split.
NoiseSweepReport run_sweep(const RunConfig& cfg, const std::string& checkpoint_path,
                           const std::string& manifest_path,
                           const std::string& satellite_index_path, std::optional<Split> split,
                           uint64_t seed);

void write_sweep_reports(const NoiseSweepReport& report, const std::string& out_dir);

// Loads the records' images of one side, resized per the run config.
std::vector<ImageBuffer> load_side_images(const std::vector<PairRecord>& records,
                                          const std::string& manifest_path, View side,
                                          int height, int width);

bool verbose_logging();

}  // namespace crossview
