#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jsd/rng.hpp"
#include "jsd/simplex.hpp"

namespace jsd {

enum class Split { Train, Val, Test };

// Immutable after construction; rows are flat row-major.
struct Dataset {
    std::size_t num_rows = 0;
    std::size_t dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;           // num_rows x dim
    std::vector<std::size_t> labels;        // training targets, possibly noisy
    std::vector<std::size_t> clean_labels;  // kept for diagnostics
    std::vector<Split> splits;              // all Train until split() tags rows

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }
    std::size_t count(Split s) const;
};

// Throws ValidationError when sizes, labels, or tags are inconsistent.
void check_dataset(const Dataset& ds);

// symmetric-resample : with prob eta, redraw uniformly over ALL K labels
//                      (changed fraction concentrates at eta (K-1)/K)
// symmetric-exclusive: stay with prob 1-eta, each OTHER label eta/(K-1)
// asymmetric-pairmap : mapped classes move to pair_map[y] with prob eta
// asymmetric-cycle   : within each group, move to the next member with prob eta
enum class NoiseKind {
    SymmetricResample,
    SymmetricExclusive,
    AsymmetricPairmap,
    AsymmetricCycle,
};

const std::string& noise_kind_name(NoiseKind kind);
NoiseKind noise_kind_from_name(const std::string& name);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::SymmetricResample;
    double eta = 0.0;
    std::map<std::size_t, std::size_t> pair_map;   // AsymmetricPairmap only
    std::vector<std::vector<std::size_t>> groups;  // AsymmetricCycle only
    std::uint64_t seed = 0;
};

void validate(const NoiseSpec& spec, std::size_t k);

struct NoiseReport {
    std::size_t eligible = 0;  // train rows considered
    std::size_t changed = 0;
    double realized_fraction = 0.0;
    std::vector<std::vector<std::size_t>> transitions;  // K x K clean -> noisy
};

struct NoisyDataset {
    Dataset dataset;
    NoiseReport report;
};

// Stochastic view pipeline feeding the multi-prediction losses.
struct ViewSpec {
    std::size_t num_views = 1;
    double jitter_sigma = 0.0;  // additive Gaussian feature noise
    double mask_prob = 0.0;     // random feature zeroing
    bool first_view_unaugmented = false;
};

void validate(const ViewSpec& spec);

// K Gaussian clusters, centers on a circle in the first two coordinates,
// per-coordinate standard deviation `spread`. Rows are class-blocked;
// clean_labels = labels; all rows tagged Train.
Dataset gen_blobs(std::size_t k, std::size_t n_per_class, std::size_t dim,
                  double spread, std::uint64_t seed);

// 3073-byte records: 1 label byte (0-9) then 3072 pixel bytes (R, G, B planes
// of 32x32, row-major). Pixels scaled to [0,1]; when normalize is set, each
// channel is centered and scaled by its mean/stddev over the loaded rows.
Dataset load_cifar10_binary(const std::vector<std::string>& paths,
                            bool normalize = true);

// Perturbs labels of Train rows only; Val/Test and clean_labels untouched.
NoisyDataset inject_noise(const Dataset& ds, const NoiseSpec& spec);

// Class-stratified validation tagging; remaining rows stay Train.
void split_validation(Dataset& ds, double val_fraction, std::uint64_t seed);

// num_views perturbed copies of x. Identity views (sigma 0, mask 0, or the
// unaugmented first view) copy x without consuming the stream, so a run with
// identity views draws exactly what a single-view run draws.
std::vector<std::vector<double>> make_views(std::span<const double> x,
                                            const ViewSpec& vs, Rng& rng);

struct Provenance {
    std::string generator;  // "blobs", "cifar10", "json"
    std::uint64_t seed = 0;
    std::optional<NoiseSpec> noise;
    double realized_noise = 0.0;
};

struct SavedDataset {
    Dataset dataset;
    Provenance provenance;
};

void save_dataset_json(const SavedDataset& saved, const std::string& path);
SavedDataset load_dataset_json(const std::string& path);

}  // namespace jsd
