#pragma once

#include <string>
#include <vector>

#include "sdgg/graph_data.hpp"
#include "sdgg/training.hpp"

namespace sdgg {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value experiment configuration. Every field is validated before
// any computation starts; unknown keys are rejected.
struct RunConfig {
    std::string dataset_dir;
    std::string dataset_name;
    std::vector<int> normal_classes{0};
    TrainConfig train;
    bool optimizer_explicit = false;  // else picked by method
    std::size_t trials = 3;
    std::string out_dir = "out";
    FeatureSpec features;
    double train_fraction = 0.8;
    bool eval_every_epoch = false;
    std::string checkpoint;  // eval subcommand input

    // simulate-2d knobs
    double sim_a = 0.1;
    std::size_t sim_samples = 1000;
    std::size_t sim_resolution = 200;
    std::size_t sim_epochs = 500;
    double sim_lr = 1e-2;
};

// Loads `file` (may be empty for pure defaults), overlays key=value
// overrides, applies the standard defaults for absent keys and the
// SDGG_SEED environment override.
RunConfig parse_config(const std::string& file,
                       const std::vector<std::string>& overrides);

}  // namespace sdgg
