#include "jsd/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace jsd {

namespace {

constexpr std::size_t kCifarRecordBytes = 3073;
constexpr std::size_t kCifarPixels = 3072;
constexpr std::size_t kCifarChannelPixels = 1024;
constexpr double kBlobCircleRadius = 3.0;

constexpr std::array<const char*, 4> kNoiseNames{
    "symmetric-resample", "symmetric-exclusive", "asymmetric-pairmap",
    "asymmetric-cycle"};

}  // namespace

std::size_t Dataset::count(Split s) const {
    std::size_t n = 0;
    for (Split t : splits)
        if (t == s) ++n;
    return n;
}

void check_dataset(const Dataset& ds) {
    if (ds.num_rows == 0) throw ValidationError("dataset: no rows");
    if (ds.dim == 0) throw ValidationError("dataset: zero feature dimension");
    if (ds.num_classes < 2) throw ValidationError("dataset: need at least 2 classes");
    if (ds.features.size() != ds.num_rows * ds.dim)
        throw ValidationError("dataset: feature buffer size mismatch");
    if (ds.labels.size() != ds.num_rows || ds.clean_labels.size() != ds.num_rows ||
        ds.splits.size() != ds.num_rows)
        throw ValidationError("dataset: per-row array size mismatch");
    for (double v : ds.features)
        if (!std::isfinite(v)) throw ValidationError("dataset: non-finite feature");
    for (std::size_t i = 0; i < ds.num_rows; ++i)
        if (ds.labels[i] >= ds.num_classes || ds.clean_labels[i] >= ds.num_classes)
            throw InvalidLabel("dataset: label out of range");
}

const std::string& noise_kind_name(NoiseKind kind) {
    static const std::array<std::string, 4> names = [] {
        std::array<std::string, 4> n;
        for (std::size_t i = 0; i < kNoiseNames.size(); ++i) n[i] = kNoiseNames[i];
        return n;
    }();
    return names[static_cast<std::size_t>(kind)];
}

NoiseKind noise_kind_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kNoiseNames.size(); ++i)
        if (name == kNoiseNames[i]) return static_cast<NoiseKind>(i);
    throw ValidationError("unknown noise kind: " + name);
}

void validate(const NoiseSpec& spec, std::size_t k) {
    if (!(spec.eta >= 0.0 && spec.eta < 1.0))
        throw ValidationError("noise: eta must lie in [0,1)");
    if (spec.kind == NoiseKind::AsymmetricPairmap) {
        if (spec.pair_map.empty()) throw ValidationError("noise: pair_map required");
        for (const auto& [from, to] : spec.pair_map)
            if (from >= k || to >= k)
                throw ValidationError("noise: pair_map class out of range");
    } else if (!spec.pair_map.empty()) {
        throw ValidationError("noise: pair_map only valid for asymmetric-pairmap");
    }
    if (spec.kind == NoiseKind::AsymmetricCycle) {
        if (spec.groups.empty()) throw ValidationError("noise: groups required");
        std::vector<bool> seen(k, false);
        for (const auto& g : spec.groups) {
            if (g.empty()) throw ValidationError("noise: empty group");
            for (std::size_t c : g) {
                if (c >= k) throw ValidationError("noise: group class out of range");
                if (seen[c]) throw ValidationError("noise: class in two groups");
                seen[c] = true;
            }
        }
    } else if (!spec.groups.empty()) {
        throw ValidationError("noise: groups only valid for asymmetric-cycle");
    }
}

void validate(const ViewSpec& spec) {
    if (spec.num_views < 1) throw ValidationError("views: num_views must be >= 1");
    if (!(spec.jitter_sigma >= 0.0)) throw ValidationError("views: negative sigma");
    if (!(spec.mask_prob >= 0.0 && spec.mask_prob < 1.0))
        throw ValidationError("views: mask_prob must lie in [0,1)");
}

Dataset gen_blobs(std::size_t k, std::size_t n_per_class, std::size_t dim,
                  double spread, std::uint64_t seed) {
    if (k < 2) throw ValidationError("gen_blobs: need at least 2 classes");
    if (n_per_class == 0 || dim == 0) throw ValidationError("gen_blobs: empty shape");
    if (!(spread >= 0.0)) throw ValidationError("gen_blobs: negative spread");

    std::vector<std::vector<double>> centers(k, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < k; ++c) {
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
        centers[c][0] = kBlobCircleRadius * std::cos(angle);
        if (dim > 1) centers[c][1] = kBlobCircleRadius * std::sin(angle);
    }

    Dataset ds;
    ds.num_rows = k * n_per_class;
    ds.dim = dim;
    ds.num_classes = k;
    ds.features.resize(ds.num_rows * dim);
    ds.labels.resize(ds.num_rows);
    ds.clean_labels.resize(ds.num_rows);
    ds.splits.assign(ds.num_rows, Split::Train);

    Rng rng = make_rng(seed, "blobs");
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t r = 0; r < ds.num_rows; ++r) {
        const std::size_t c = r / n_per_class;
        ds.labels[r] = c;
        ds.clean_labels[r] = c;
        for (std::size_t d = 0; d < dim; ++d)
            ds.features[r * dim + d] =
                centers[c][d] + (spread > 0.0 ? spread * noise(rng) : 0.0);
    }
    return ds;
}

Dataset load_cifar10_binary(const std::vector<std::string>& paths, bool normalize) {
    if (paths.empty()) throw DataFormatError("cifar10: no input files");

    std::vector<unsigned char> bytes;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataFormatError("cifar10: cannot open " + path);
        std::vector<unsigned char> chunk((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
        if (chunk.empty() || chunk.size() % kCifarRecordBytes != 0)
            throw DataFormatError("cifar10: " + path + " is not a multiple of 3073 bytes");
        bytes.insert(bytes.end(), chunk.begin(), chunk.end());
    }

    Dataset ds;
    ds.num_rows = bytes.size() / kCifarRecordBytes;
    ds.dim = kCifarPixels;
    ds.num_classes = 10;
    ds.features.resize(ds.num_rows * kCifarPixels);
    ds.labels.resize(ds.num_rows);
    ds.clean_labels.resize(ds.num_rows);
    ds.splits.assign(ds.num_rows, Split::Train);

    for (std::size_t r = 0; r < ds.num_rows; ++r) {
        const unsigned char* rec = bytes.data() + r * kCifarRecordBytes;
        if (rec[0] > 9) throw InvalidLabel("cifar10: label byte out of range");
        ds.labels[r] = rec[0];
        ds.clean_labels[r] = rec[0];
        for (std::size_t p = 0; p < kCifarPixels; ++p)
            ds.features[r * kCifarPixels + p] = static_cast<double>(rec[1 + p]) / 255.0;
    }

    if (normalize) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
            double mean = 0.0;
            const std::size_t per_channel = ds.num_rows * kCifarChannelPixels;
            for (std::size_t r = 0; r < ds.num_rows; ++r)
                for (std::size_t p = 0; p < kCifarChannelPixels; ++p)
                    mean += ds.features[r * kCifarPixels + ch * kCifarChannelPixels + p];
            mean /= static_cast<double>(per_channel);
            double var = 0.0;
            for (std::size_t r = 0; r < ds.num_rows; ++r)
                for (std::size_t p = 0; p < kCifarChannelPixels; ++p) {
                    const double d =
                        ds.features[r * kCifarPixels + ch * kCifarChannelPixels + p] - mean;
                    var += d * d;
                }
            const double sd = std::sqrt(var / static_cast<double>(per_channel));
            const double scale = sd > 1e-8 ? 1.0 / sd : 1.0;
            for (std::size_t r = 0; r < ds.num_rows; ++r)
                for (std::size_t p = 0; p < kCifarChannelPixels; ++p) {
                    double& v =
                        ds.features[r * kCifarPixels + ch * kCifarChannelPixels + p];
                    v = (v - mean) * scale;
                }
        }
    }
    return ds;
}

NoisyDataset inject_noise(const Dataset& ds, const NoiseSpec& spec) {
    check_dataset(ds);
    validate(spec, ds.num_classes);

    NoisyDataset out{ds, {}};
    const std::size_t k = ds.num_classes;
    out.report.transitions.assign(k, std::vector<std::size_t>(k, 0));

    // group_of[c] = index into spec.groups, or npos when c is not cycled
    std::vector<std::size_t> group_of(k, static_cast<std::size_t>(-1));
    std::vector<std::size_t> pos_in_group(k, 0);
    for (std::size_t g = 0; g < spec.groups.size(); ++g)
        for (std::size_t j = 0; j < spec.groups[g].size(); ++j) {
            group_of[spec.groups[g][j]] = g;
            pos_in_group[spec.groups[g][j]] = j;
        }

    Rng rng = make_rng(spec.seed, "noise");
    std::bernoulli_distribution flip(spec.eta);
    for (std::size_t i = 0; i < ds.num_rows; ++i) {
        if (ds.splits[i] != Split::Train) continue;
        const std::size_t y = ds.labels[i];
        std::size_t ny = y;
        switch (spec.kind) {
            case NoiseKind::SymmetricResample:
                if (spec.eta > 0.0 && flip(rng))
                    ny = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
                break;
            case NoiseKind::SymmetricExclusive:
                if (spec.eta > 0.0 && flip(rng)) {
                    const std::size_t j =
                        std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
                    ny = j >= y ? j + 1 : j;
                }
                break;
            case NoiseKind::AsymmetricPairmap:
                if (auto it = spec.pair_map.find(y); it != spec.pair_map.end())
                    if (spec.eta > 0.0 && flip(rng)) ny = it->second;
                break;
            case NoiseKind::AsymmetricCycle:
                if (group_of[y] != static_cast<std::size_t>(-1))
                    if (spec.eta > 0.0 && flip(rng)) {
                        const auto& g = spec.groups[group_of[y]];
                        ny = g[(pos_in_group[y] + 1) % g.size()];
                    }
                break;
        }
        out.dataset.labels[i] = ny;
        out.report.transitions[y][ny] += 1;
        out.report.eligible += 1;
        if (ny != y) out.report.changed += 1;
    }
    out.report.realized_fraction =
        out.report.eligible == 0
            ? 0.0
            : static_cast<double>(out.report.changed) /
                  static_cast<double>(out.report.eligible);
    return out;
}

void split_validation(Dataset& ds, double val_fraction, std::uint64_t seed) {
    check_dataset(ds);
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ValidationError("split: val_fraction must lie in (0,1)");

    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < ds.num_rows; ++i)
            if (ds.splits[i] == Split::Train && ds.labels[i] == c) rows.push_back(i);
        Rng rng = make_rng(seed, "split", c);
        std::shuffle(rows.begin(), rows.end(), rng);
        const std::size_t take = static_cast<std::size_t>(
            std::llround(val_fraction * static_cast<double>(rows.size())));
        for (std::size_t j = 0; j < take && j < rows.size(); ++j)
            ds.splits[rows[j]] = Split::Val;
    }
}

std::vector<std::vector<double>> make_views(std::span<const double> x,
                                            const ViewSpec& vs, Rng& rng) {
    validate(vs);
    std::vector<std::vector<double>> views;
    views.reserve(vs.num_views);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::bernoulli_distribution drop(vs.mask_prob);
    for (std::size_t v = 0; v < vs.num_views; ++v) {
        std::vector<double> out(x.begin(), x.end());
        const bool identity = (vs.first_view_unaugmented && v == 0) ||
                              (vs.jitter_sigma == 0.0 && vs.mask_prob == 0.0);
        if (!identity) {
            if (vs.jitter_sigma > 0.0)
                for (double& f : out) f += vs.jitter_sigma * jitter(rng);
            if (vs.mask_prob > 0.0)
                for (double& f : out)
                    if (drop(rng)) f = 0.0;
        }
        views.push_back(std::move(out));
    }
    return views;
}

namespace {

nlohmann::json noise_to_json(const NoiseSpec& spec) {
    nlohmann::json j;
    j["kind"] = noise_kind_name(spec.kind);
    j["eta"] = spec.eta;
    j["seed"] = spec.seed;
    if (!spec.pair_map.empty()) {
        nlohmann::json pm = nlohmann::json::object();
        for (const auto& [from, to] : spec.pair_map) pm[std::to_string(from)] = to;
        j["pair_map"] = pm;
    }
    if (!spec.groups.empty()) j["groups"] = spec.groups;
    return j;
}

NoiseSpec noise_from_json(const nlohmann::json& j) {
    NoiseSpec spec;
    spec.kind = noise_kind_from_name(j.at("kind").get<std::string>());
    spec.eta = j.at("eta").get<double>();
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("pair_map"))
        for (const auto& [from, to] : j.at("pair_map").items())
            spec.pair_map[std::stoul(from)] = to.get<std::size_t>();
    if (j.contains("groups"))
        spec.groups = j.at("groups").get<std::vector<std::vector<std::size_t>>>();
    return spec;
}

}  // namespace

void save_dataset_json(const SavedDataset& saved, const std::string& path) {
    check_dataset(saved.dataset);
    const Dataset& ds = saved.dataset;
    nlohmann::json j;
    j["num_rows"] = ds.num_rows;
    j["dim"] = ds.dim;
    j["num_classes"] = ds.num_classes;
    j["features"] = ds.features;
    j["labels"] = ds.labels;
    j["clean_labels"] = ds.clean_labels;
    std::vector<int> tags(ds.num_rows);
    for (std::size_t i = 0; i < ds.num_rows; ++i) tags[i] = static_cast<int>(ds.splits[i]);
    j["splits"] = tags;
    j["provenance"]["generator"] = saved.provenance.generator;
    j["provenance"]["seed"] = saved.provenance.seed;
    j["provenance"]["realized_noise"] = saved.provenance.realized_noise;
    if (saved.provenance.noise)
        j["provenance"]["noise"] = noise_to_json(*saved.provenance.noise);

    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot write " + path);
    out << j.dump();
}

SavedDataset load_dataset_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataFormatError(std::string("dataset json parse: ") + e.what());
    }

    SavedDataset saved;
    Dataset& ds = saved.dataset;
    try {
        ds.num_rows = j.at("num_rows").get<std::size_t>();
        ds.dim = j.at("dim").get<std::size_t>();
        ds.num_classes = j.at("num_classes").get<std::size_t>();
        ds.features = j.at("features").get<std::vector<double>>();
        ds.labels = j.at("labels").get<std::vector<std::size_t>>();
        ds.clean_labels = j.at("clean_labels").get<std::vector<std::size_t>>();
        for (int t : j.at("splits").get<std::vector<int>>()) {
            if (t < 0 || t > 2) throw DataFormatError("dataset json: bad split tag");
            ds.splits.push_back(static_cast<Split>(t));
        }
        const auto& prov = j.at("provenance");
        saved.provenance.generator = prov.at("generator").get<std::string>();
        saved.provenance.seed = prov.value("seed", std::uint64_t{0});
        saved.provenance.realized_noise = prov.value("realized_noise", 0.0);
        if (prov.contains("noise"))
            saved.provenance.noise = noise_from_json(prov.at("noise"));
    } catch (const nlohmann::json::exception& e) {
        throw DataFormatError(std::string("dataset json fields: ") + e.what());
    }
    check_dataset(ds);
    return saved;
}

}  // namespace jsd
