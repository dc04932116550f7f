#pragma once

#include <optional>
#include <string>

#include "crossview/model.hpp"
#include "crossview/optim.hpp"

namespace crossview {

// Checkpoint layout (all little-endian): magic "CVCK", u32 version, model
// config (scheme, schedule, gem_p, seed), optional Adam hyperparameters and
// step, then a named-tensor table of 32-bit floats covering parameters, BN
// running stats, and Adam moments. Identical runs produce identical bytes on
// any platform.
struct Checkpoint {
  SiameseModel model;
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::string& path, SiameseModel& model, const AdamState* adam = nullptr);

Checkpoint load_checkpoint(const std::string& path);

// Human-readable companion: schedule, scheme, input channels, gem_p, seed.
void write_model_manifest(const std::string& path, const SiameseModel& model);

}  // namespace crossview
