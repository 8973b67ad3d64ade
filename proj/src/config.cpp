#include "jsd/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "jsd/rng.hpp"

namespace jsd {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
    if (!obj.is_object())
        throw ConfigError("config: '" + path + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("config: unknown field '" + join(path, it.key()) + "'");
    }
}

template <typename T>
T field_or(const json& obj, const char* key, T dflt, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return dflt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + join(path, key) + "' has the wrong type");
    }
}

DatasetConfig parse_dataset(const json& obj) {
    check_keys(obj,
               {"generator", "classes", "per_class", "dim", "spread",
                "cifar_paths", "val_fraction"},
               "dataset");
    DatasetConfig d;
    d.generator = field_or<std::string>(obj, "generator", d.generator, "dataset");
    d.classes = field_or<std::size_t>(obj, "classes", d.classes, "dataset");
    d.per_class = field_or<std::size_t>(obj, "per_class", d.per_class, "dataset");
    d.dim = field_or<std::size_t>(obj, "dim", d.dim, "dataset");
    d.spread = field_or<double>(obj, "spread", d.spread, "dataset");
    d.cifar_paths = field_or<std::vector<std::string>>(obj, "cifar_paths",
                                                       d.cifar_paths, "dataset");
    d.val_fraction =
        field_or<double>(obj, "val_fraction", d.val_fraction, "dataset");
    return d;
}

NoiseSpec parse_noise(const json& obj) {
    check_keys(obj, {"kind", "eta", "pair_map", "groups"}, "noise");
    NoiseSpec n;
    if (obj.contains("kind")) {
        const auto name = field_or<std::string>(obj, "kind", "", "noise");
        try {
            n.kind = noise_kind_from_name(name);
        } catch (const ValidationError& e) {
            throw ConfigError(std::string("config: field 'noise.kind': ") + e.what());
        }
    }
    n.eta = field_or<double>(obj, "eta", n.eta, "noise");
    if (const auto it = obj.find("pair_map"); it != obj.end()) {
        if (!it->is_object())
            throw ConfigError("config: field 'noise.pair_map' must be an object");
        for (auto entry = it->begin(); entry != it->end(); ++entry) {
            std::size_t from = 0;
            try {
                std::size_t pos = 0;
                from = std::stoul(entry.key(), &pos);
                if (pos != entry.key().size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ConfigError("config: field 'noise.pair_map': key '" +
                                  entry.key() + "' is not a class index");
            }
            try {
                n.pair_map[from] = entry->get<std::size_t>();
            } catch (const json::exception&) {
                throw ConfigError("config: field 'noise.pair_map." + entry.key() +
                                  "' has the wrong type");
            }
        }
    }
    n.groups = field_or<std::vector<std::vector<std::size_t>>>(obj, "groups",
                                                               n.groups, "noise");
    return n;
}

LossSpec parse_loss(const json& obj, bool kind_required) {
    check_keys(obj,
               {"kind", "pi1", "num_dists", "z_mode", "gce_q", "ls_epsilon",
                "bs_beta"},
               "loss");
    LossSpec spec;
    if (obj.contains("kind")) {
        const auto name = field_or<std::string>(obj, "kind", "", "loss");
        try {
            spec.kind = loss_kind_from_name(name);
        } catch (const ValidationError& e) {
            throw ConfigError(std::string("config: field 'loss.kind': ") + e.what());
        }
    } else if (kind_required) {
        throw ConfigError("config: field 'loss.kind' is required");
    }
    spec.pi1 = field_or<double>(obj, "pi1", spec.pi1, "loss");
    spec.num_dists = field_or<int>(obj, "num_dists", spec.num_dists, "loss");
    if (obj.contains("z_mode")) {
        const auto mode = field_or<std::string>(obj, "z_mode", "", "loss");
        if (mode == "normalized")
            spec.z_mode = ZMode::Normalized;
        else if (mode == "unit")
            spec.z_mode = ZMode::Unit;
        else
            throw ConfigError("config: field 'loss.z_mode': expected "
                              "'normalized' or 'unit', got '" + mode + "'");
    }
    spec.gce_q = field_or<double>(obj, "gce_q", spec.gce_q, "loss");
    spec.ls_epsilon = field_or<double>(obj, "ls_epsilon", spec.ls_epsilon, "loss");
    spec.bs_beta = field_or<double>(obj, "bs_beta", spec.bs_beta, "loss");
    return spec;
}

DissectionSpec parse_dissection(const json& obj) {
    check_keys(obj, {"kind", "label_floor"}, "dissection");
    DissectionSpec spec;
    if (obj.contains("kind")) {
        const auto name = field_or<std::string>(obj, "kind", "", "dissection");
        try {
            spec.kind = divergence_from_name(name);
        } catch (const ValidationError& e) {
            throw ConfigError(std::string("config: field 'dissection.kind': ") +
                              e.what());
        }
    }
    spec.label_floor =
        field_or<double>(obj, "label_floor", spec.label_floor, "dissection");
    return spec;
}

void parse_train(const json& obj, TrainConfig& t) {
    check_keys(obj,
               {"hidden", "epochs", "batch_size", "lr", "momentum", "lr_drops",
                "weight_decay", "jitter_sigma", "mask_prob",
                "first_view_unaugmented", "workers"},
               "train");
    t.hidden = field_or<std::vector<std::size_t>>(obj, "hidden", t.hidden, "train");
    t.epochs = field_or<std::size_t>(obj, "epochs", t.epochs, "train");
    t.batch_size = field_or<std::size_t>(obj, "batch_size", t.batch_size, "train");
    t.lr = field_or<double>(obj, "lr", t.lr, "train");
    t.momentum = field_or<double>(obj, "momentum", t.momentum, "train");
    if (const auto it = obj.find("lr_drops"); it != obj.end()) {
        if (!it->is_array())
            throw ConfigError("config: field 'train.lr_drops' must be an array "
                              "of [epoch, factor] pairs");
        t.lr_drops.clear();
        for (const auto& el : *it) {
            if (!el.is_array() || el.size() != 2)
                throw ConfigError("config: field 'train.lr_drops' must be an "
                                  "array of [epoch, factor] pairs");
            try {
                t.lr_drops.emplace_back(el[0].get<std::size_t>(),
                                        el[1].get<double>());
            } catch (const json::exception&) {
                throw ConfigError("config: field 'train.lr_drops': entries must "
                                  "be [integer epoch, number factor]");
            }
        }
    }
    t.weight_decay = field_or<double>(obj, "weight_decay", t.weight_decay, "train");
    t.views.jitter_sigma =
        field_or<double>(obj, "jitter_sigma", t.views.jitter_sigma, "train");
    t.views.mask_prob =
        field_or<double>(obj, "mask_prob", t.views.mask_prob, "train");
    t.views.first_view_unaugmented =
        field_or<bool>(obj, "first_view_unaugmented",
                       t.views.first_view_unaugmented, "train");
    t.workers = field_or<std::size_t>(obj, "workers", t.workers, "train");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    check_keys(root,
               {"dataset", "noise", "loss", "dissection", "train", "output_dir",
                "seed"},
               "");

    ExperimentConfig cfg;
    if (root.contains("dataset")) cfg.dataset = parse_dataset(root["dataset"]);
    if (root.contains("noise")) cfg.noise = parse_noise(root["noise"]);

    const bool has_dissection = root.contains("dissection");
    if (has_dissection)
        cfg.train.dissection = parse_dissection(root["dissection"]);
    if (root.contains("loss"))
        cfg.train.loss = parse_loss(root["loss"], !has_dissection);
    else if (!has_dissection)
        throw ConfigError("config: field 'loss.kind' is required");

    if (root.contains("train")) parse_train(root["train"], cfg.train);
    cfg.output_dir =
        field_or<std::string>(root, "output_dir", cfg.output_dir, "");
    cfg.master_seed = field_or<std::uint64_t>(root, "seed", cfg.master_seed, "");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_experiment_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json root;
    json& d = root["dataset"];
    d["generator"] = cfg.dataset.generator;
    d["classes"] = cfg.dataset.classes;
    d["per_class"] = cfg.dataset.per_class;
    d["dim"] = cfg.dataset.dim;
    d["spread"] = cfg.dataset.spread;
    if (!cfg.dataset.cifar_paths.empty())
        d["cifar_paths"] = cfg.dataset.cifar_paths;
    d["val_fraction"] = cfg.dataset.val_fraction;

    json& n = root["noise"];
    n["kind"] = noise_kind_name(cfg.noise.kind);
    n["eta"] = cfg.noise.eta;
    if (!cfg.noise.pair_map.empty()) {
        json pm = json::object();
        for (const auto& [from, to] : cfg.noise.pair_map)
            pm[std::to_string(from)] = to;
        n["pair_map"] = pm;
    }
    if (!cfg.noise.groups.empty()) n["groups"] = cfg.noise.groups;

    if (cfg.train.dissection) {
        json& ds = root["dissection"];
        ds["kind"] = divergence_name(cfg.train.dissection->kind);
        ds["label_floor"] = cfg.train.dissection->label_floor;
    } else {
        json& l = root["loss"];
        const LossSpec& spec = cfg.train.loss;
        l["kind"] = loss_kind_name(spec.kind);
        l["pi1"] = spec.pi1;
        l["num_dists"] = spec.num_dists;
        l["z_mode"] = spec.z_mode == ZMode::Normalized ? "normalized" : "unit";
        l["gce_q"] = spec.gce_q;
        l["ls_epsilon"] = spec.ls_epsilon;
        l["bs_beta"] = spec.bs_beta;
    }

    json& t = root["train"];
    t["hidden"] = cfg.train.hidden;
    t["epochs"] = cfg.train.epochs;
    t["batch_size"] = cfg.train.batch_size;
    t["lr"] = cfg.train.lr;
    t["momentum"] = cfg.train.momentum;
    json drops = json::array();
    for (const auto& [epoch, factor] : cfg.train.lr_drops)
        drops.push_back(json::array({epoch, factor}));
    t["lr_drops"] = drops;
    t["weight_decay"] = cfg.train.weight_decay;
    t["jitter_sigma"] = cfg.train.views.jitter_sigma;
    t["mask_prob"] = cfg.train.views.mask_prob;
    t["first_view_unaugmented"] = cfg.train.views.first_view_unaugmented;
    t["workers"] = cfg.train.workers;

    root["output_dir"] = cfg.output_dir;
    root["seed"] = cfg.master_seed;
    return root.dump(2);
}

void validate(const ExperimentConfig& cfg) {
    std::size_t k = 0;
    if (cfg.dataset.generator == "blobs") {
        if (cfg.dataset.classes < 2)
            throw ConfigError("config: dataset.classes must be >= 2");
        if (cfg.dataset.per_class < 1)
            throw ConfigError("config: dataset.per_class must be >= 1");
        if (cfg.dataset.dim < 2)
            throw ConfigError("config: dataset.dim must be >= 2");
        if (!(cfg.dataset.spread >= 0.0))
            throw ConfigError("config: dataset.spread must be >= 0");
        k = cfg.dataset.classes;
    } else if (cfg.dataset.generator == "cifar10") {
        if (cfg.dataset.cifar_paths.empty())
            throw ConfigError("config: dataset.cifar_paths required for cifar10");
        k = 10;
    } else {
        throw ConfigError("config: dataset.generator must be 'blobs' or "
                          "'cifar10', got '" + cfg.dataset.generator + "'");
    }
    if (!(cfg.dataset.val_fraction >= 0.0 && cfg.dataset.val_fraction < 1.0))
        throw ConfigError("config: dataset.val_fraction must lie in [0,1)");
    if (cfg.output_dir.empty())
        throw ConfigError("config: output_dir must not be empty");
    try {
        validate(cfg.noise, k);
        validate(cfg.train);
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    BuiltExperiment built;
    built.config = cfg;
    built.config.noise.seed = derive_seed(cfg.master_seed, kSeedNoise);
    built.config.train.seed = derive_seed(cfg.master_seed, kSeedTrain);

    Dataset ds = cfg.dataset.generator == "blobs"
                     ? gen_blobs(cfg.dataset.classes, cfg.dataset.per_class,
                                 cfg.dataset.dim, cfg.dataset.spread,
                                 derive_seed(cfg.master_seed, kSeedDataset))
                     : load_cifar10_binary(cfg.dataset.cifar_paths);
    if (cfg.dataset.val_fraction > 0.0)
        split_validation(ds, cfg.dataset.val_fraction,
                         derive_seed(cfg.master_seed, kSeedSplit));

    NoisyDataset noised = inject_noise(ds, built.config.noise);
    built.dataset = std::move(noised.dataset);
    built.noise = std::move(noised.report);
    return built;
}

std::string manifest_json(const BuiltExperiment& built) {
    json root;
    root["config"] = json::parse(experiment_config_to_json(built.config));
    json& seeds = root["seeds"];
    seeds["master"] = built.config.master_seed;
    seeds[kSeedDataset] = derive_seed(built.config.master_seed, kSeedDataset);
    seeds[kSeedSplit] = derive_seed(built.config.master_seed, kSeedSplit);
    seeds[kSeedNoise] = built.config.noise.seed;
    seeds[kSeedTrain] = built.config.train.seed;
    json& noise = root["noise"];
    noise["eligible"] = built.noise.eligible;
    noise["changed"] = built.noise.changed;
    noise["realized_fraction"] = built.noise.realized_fraction;
    return root.dump(2);
}

}  // namespace jsd
