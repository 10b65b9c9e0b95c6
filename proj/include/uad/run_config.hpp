#pragma once

#include <string>

#include "uad/config.hpp"
#include "uad/wigan.hpp"

namespace uad {

// Everything a training-plus-detection run needs: Algorithm hyperparameters
// and the downstream test parameters (quantization levels, batch size, false
// positive level). One flat key-value file round-trips the whole struct.
struct RunConfig {
    wigan::TrainConfig train;
    int levels_m = 200;
    int sample_n = 50;
    double fp_level = 0.05;
    double epsilon = 0.0;
};

// Parses the known keys; any unrecognized key is a config error (typos fail
// loudly instead of silently running with defaults). Unless set explicitly,
// the validation-time test parameters mirror levels_m and sample_n.
RunConfig run_config_from(const KeyValueConfig& kv);

// Fully resolved form with every default filled in; serializing this beside
// the outputs is what makes a run reproducible.
KeyValueConfig to_key_value(const RunConfig& rc);

std::string resolved_hash(const RunConfig& rc);

}  // namespace uad
