#pragma once

#include <string>

#include "atransn/trainer.hpp"

namespace atransn {

// A training run as described by a config file: hyperparameters plus
// the dataset paths. Paths may be relative to the config file's
// directory; load_run_config resolves them.
struct RunConfig {
    TrainingConfig train;
    std::string train_path;
    std::string valid_path;
    std::string test_path;
    std::string teacher_triplets_path;  // joint mode only
};

// Parses a flat JSON object. Unknown keys and type mismatches are
// ConfigErrors naming the key. Absent keys keep their defaults; "norm"
// defaults per model kind (l2 for rotate, l1 otherwise).
RunConfig parse_run_config(const std::string& text, const std::string& origin = "config");

RunConfig load_run_config(const std::string& path);

// Serializes every key in a fixed order; parse_run_config(config_to_json(c))
// round-trips exactly.
std::string config_to_json(const RunConfig& cfg);

}  // namespace atransn
