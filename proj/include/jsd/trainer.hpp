#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jsd/data.hpp"
#include "jsd/loss.hpp"
#include "jsd/rng.hpp"

namespace jsd {

// Fully-connected net: rectifier hidden layers, identity head whose outputs
// feed the softmax inside the loss code.
struct MlpModel {
    std::vector<std::size_t> widths;          // [input, hidden..., K]
    std::vector<std::vector<double>> weights; // per layer, row-major [out][in]
    std::vector<std::vector<double>> biases;  // per layer, [out]

    std::size_t num_layers() const { return weights.size(); }
};

std::size_t param_count(const MlpModel& model);
void check_model(const MlpModel& model);

// Scaled-uniform fan-in rule: U(-sqrt(1/fan_in), sqrt(1/fan_in)) for weights
// and biases alike.
MlpModel init_model(const std::vector<std::size_t>& widths, std::uint64_t seed);

LogitVec forward_logits(const MlpModel& model, std::span<const double> x);
std::size_t predict_class(const MlpModel& model, std::span<const double> x);

struct TrainConfig {
    LossSpec loss;
    std::optional<DissectionSpec> dissection;  // when set, overrides `loss`
    std::vector<std::size_t> hidden{32};
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double lr = 0.1;
    double momentum = 0.9;
    std::vector<std::pair<std::size_t, double>> lr_drops;  // (epoch, factor)
    double weight_decay = 0.0;
    ViewSpec views;  // num_views is ignored; the loss dictates the view count
    std::size_t workers = 1;
    std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// One training sample: the per-loss number of views plus its (noisy) label.
struct Sample {
    std::vector<std::vector<double>> views;
    std::size_t y = 0;
};

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

// Mean batch loss and mean parameter gradients. With workers > 1 the batch is
// sharded contiguously and shard sums are combined in shard order, so results
// are deterministic for a fixed worker count. JSD_MAX_WORKERS caps the count.
std::pair<double, Gradients> batch_gradient(const MlpModel& model,
                                            const std::vector<Sample>& batch,
                                            const TrainLoss& loss,
                                            std::size_t workers = 1);

struct SgdState {
    std::vector<std::vector<double>> vel_weights;
    std::vector<std::vector<double>> vel_biases;
    double lr = 0.0;
};

SgdState make_sgd_state(const MlpModel& model, double lr);

// Nesterov update: g = grad + wd*w; v = mu*v + g; w -= lr*(g + mu*v).
// Returns the mean batch loss. Throws NonFiniteLoss naming the batch index.
double train_step(MlpModel& model, SgdState& state,
                  const std::vector<Sample>& batch, const TrainLoss& loss,
                  const TrainConfig& cfg);

struct MetricsRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc_noisy = 0.0;  // against the (possibly noisy) labels
    double train_acc_clean = 0.0;  // against clean_labels
    double val_acc = 0.0;
    double consistency = 0.0;
    double seconds = 0.0;
};

extern const char* const kMetricsCsvHeader;
std::string metrics_csv_row(const MetricsRecord& m);
std::string metrics_jsonl_row(const MetricsRecord& m);

double evaluate(const MlpModel& model, const Dataset& ds,
                const std::vector<std::size_t>& rows,
                const std::vector<std::size_t>& labels);

// Fraction of rows whose predicted class survives one fresh augmentation.
// Identity view specs give exactly 1.
double consistency_rate(const MlpModel& model, const Dataset& ds,
                        const std::vector<std::size_t>& rows, const ViewSpec& vs,
                        Rng& rng);

struct TrainResult {
    MlpModel model;
    std::vector<MetricsRecord> metrics;
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

// Deterministic under (dataset, config): shuffling, views, and consistency
// draws all derive from cfg.seed with fixed labels.
TrainResult train_loop(const Dataset& ds, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = {});

}  // namespace jsd
