#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jsd/data.hpp"
#include "jsd/trainer.hpp"

namespace jsd {

// Where the rows come from: the synthetic generator or CIFAR-10 batch files.
struct DatasetConfig {
    std::string generator = "blobs";  // "blobs" | "cifar10"
    std::size_t classes = 4;
    std::size_t per_class = 500;
    std::size_t dim = 16;
    double spread = 1.0;
    std::vector<std::string> cifar_paths;
    double val_fraction = 0.2;
};

// One declarative experiment: dataset, label noise, loss, optimizer, output.
// Every field has a default except the loss kind (or a dissection block in
// its place). The master seed fans out to all stochastic consumers through
// labeled streams, so the config alone pins the whole run.
struct ExperimentConfig {
    DatasetConfig dataset;
    NoiseSpec noise;  // eta = 0 means clean labels
    TrainConfig train;
    std::string output_dir = "runs/out";
    std::uint64_t master_seed = 0;
};

// Labels used when fanning the master seed out to the components.
inline constexpr const char* kSeedDataset = "dataset";
inline constexpr const char* kSeedSplit = "split";
inline constexpr const char* kSeedNoise = "noise";
inline constexpr const char* kSeedTrain = "train";

// Throws ConfigError naming the offending field; unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Inverse of parsing with every default materialized, so manifests are
// canonical and re-parse to an identical config.
std::string experiment_config_to_json(const ExperimentConfig& cfg);

void validate(const ExperimentConfig& cfg);

struct BuiltExperiment {
    Dataset dataset;   // split tagged, labels noised
    NoiseReport noise;
    ExperimentConfig config;  // seeds materialized into the sub-configs
};

// Generates (or loads), splits, and noises the data exactly as a run would.
BuiltExperiment build_experiment(const ExperimentConfig& cfg);

// Everything needed to reproduce the run bit-exactly in reference mode.
std::string manifest_json(const BuiltExperiment& built);

}  // namespace jsd
