#pragma once

#include <map>
#include <string>

#include "protojoint/trainer.hpp"

namespace protojoint {

// Flat key=value config file ('#' comments, blank lines allowed).
// Unknown keys are rejected. Returns raw string pairs in file order.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Defaults, overridden by file values, overridden by flag values.
// Explicitly setting a weight that the chosen mode disables is an error;
// unset disabled weights are silently forced to zero.
TrainConfig parse_train_config(
    const std::string& file_path,
    const std::map<std::string, std::string>& flag_overrides = {});

// Resolved config as key=value pairs (for manifests).
std::map<std::string, std::string> config_to_map(const TrainConfig& cfg);

}  // namespace protojoint
