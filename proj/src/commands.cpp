#include "jsd/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "jsd/verify.hpp"

namespace jsd {

namespace {

namespace fs = std::filesystem;

const std::set<std::string>* selector_claims(const std::string& selector) {
    static const std::map<std::string, std::set<std::string>> table{
        {"bounds",
         {"reference-values", "closed-form-bounds", "bound-search",
          "gap-widens-with-M", "bounds-collapse-to-K-minus-1"}},
        {"decomposition", {"decomposition-identity"}},
        {"gradients", {"gradient-cross-check"}},
        {"limits", {"ce-mae-asymptotes"}},
        {"risk-theorem", {"risk-theorem-enumeration"}},
        {"asym-conditions", {"lemma-constants"}},
    };
    const auto it = table.find(selector);
    return it == table.end() ? nullptr : &it->second;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct RunSummary {
    double final_val = 0.0;
    double best_val = 0.0;
    std::size_t best_epoch = 0;
};

// Writes manifest + metrics files into the config's output directory and
// streams one progress line per epoch.
RunSummary run_experiment(const BuiltExperiment& built, std::ostream& out) {
    const fs::path dir(built.config.output_dir);
    fs::create_directories(dir);

    {
        std::ofstream manifest(dir / "manifest.json");
        manifest << manifest_json(built) << "\n";
    }

    std::ofstream csv(dir / "metrics.csv");
    std::ofstream jsonl(dir / "metrics.jsonl");
    csv << kMetricsCsvHeader << "\n";

    RunSummary summary;
    const auto on_epoch = [&](const MetricsRecord& m) {
        csv << metrics_csv_row(m) << "\n";
        csv.flush();
        jsonl << metrics_jsonl_row(m) << "\n";
        jsonl.flush();
        out << "epoch " << m.epoch << "  loss " << m.train_loss << "  val "
            << m.val_acc << "  consistency " << m.consistency << "\n";
        summary.final_val = m.val_acc;
        if (m.val_acc > summary.best_val) {
            summary.best_val = m.val_acc;
            summary.best_epoch = m.epoch;
        }
    };
    train_loop(built.dataset, built.config.train, on_epoch);
    return summary;
}

int usage_error(std::ostream& err, const std::string& message) {
    err << "error: " << message << "\n";
    return kExitUsage;
}

}  // namespace

const std::vector<std::string>& verify_selectors() {
    static const std::vector<std::string> all{
        "bounds",       "decomposition",   "gradients", "limits",
        "risk-theorem", "asym-conditions", "all"};
    return all;
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
    const std::set<std::string>* wanted = nullptr;
    if (opts.selector != "all") {
        wanted = selector_claims(opts.selector);
        if (wanted == nullptr)
            return usage_error(err, "unknown verify selector '" + opts.selector +
                                        "' (choose from bounds, decomposition, "
                                        "gradients, limits, risk-theorem, "
                                        "asym-conditions, all)");
    }

    SuiteOptions suite;
    suite.seed = opts.seed;
    suite.fast = opts.fast;
    suite.z_fault = opts.z_fault;
    std::vector<ClaimResult> claims = run_verification_suite(suite);
    if (wanted != nullptr) {
        std::erase_if(claims, [&](const ClaimResult& c) {
            return wanted->count(c.name) == 0;
        });
    }

    std::size_t failed = 0;
    for (const ClaimResult& c : claims) {
        if (!c.passed) ++failed;
        char line[256];
        std::snprintf(line, sizeof(line), "%-4s %-32s worst %.3e  threshold %.3e",
                      c.passed ? "PASS" : "FAIL", c.name.c_str(), c.worst,
                      c.threshold);
        out << line << "\n";
        if (!c.passed) out << "     " << c.detail << "\n";
    }
    out << claims.size() - failed << "/" << claims.size() << " claims passed\n";

    if (!opts.report_path.empty()) {
        std::ofstream report(opts.report_path);
        if (!report)
            return usage_error(err, "cannot write report '" + opts.report_path + "'");
        report << claims_to_json(claims) << "\n";
    } else {
        out << claims_to_json(claims) << "\n";
    }
    return failed == 0 ? kExitOk : kExitFailure;
}

int cmd_train(const std::string& config_path, std::ostream& out,
              std::ostream& err) {
    try {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        const BuiltExperiment built = build_experiment(cfg);
        out << "train rows " << built.noise.eligible << ", labels changed "
            << built.noise.changed << " (realized fraction "
            << built.noise.realized_fraction << ")\n";
        const RunSummary summary = run_experiment(built, out);
        out << "final val_acc " << summary.final_val << ", best "
            << summary.best_val << " at epoch " << summary.best_epoch << "\n";
        out << "run written to " << built.config.output_dir << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        return usage_error(err, e.what());
    } catch (const DataFormatError& e) {
        return usage_error(err, e.what());
    } catch (const ValidationError& e) {
        return usage_error(err, e.what());
    } catch (const NonFiniteLoss& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const ExperimentConfig base = load_experiment_config(opts.config_path);
        if (opts.values.empty())
            return usage_error(err, "sweep needs at least one value");

        const std::size_t k =
            base.dataset.generator == "cifar10" ? 10 : base.dataset.classes;
        const bool dissection = base.train.dissection.has_value();
        const LossKind kind = base.train.loss.kind;

        if (opts.axis == "pi1") {
            if (dissection || (kind != LossKind::JS && kind != LossKind::GJS &&
                               kind != LossKind::JSOnMean))
                return usage_error(err, "pi1 sweeps need a JS-family loss");
            for (double v : opts.values)
                if (!(v > 0.0 && v < 1.0))
                    return usage_error(err, "pi1 value " + format_value(v) +
                                                " outside (0,1)");
        } else if (opts.axis == "M") {
            if (dissection || kind != LossKind::GJS)
                return usage_error(err, "M sweeps require the GJS loss");
            for (double v : opts.values) {
                if (v != std::floor(v) || v < 2.0)
                    return usage_error(err, "M value " + format_value(v) +
                                                " must be an integer >= 2");
                if (v > static_cast<double>(k) + 1.0)
                    err << "warning: M = " << format_value(v) << " exceeds K+1 = "
                        << (k + 1) << "; training proceeds but the bound "
                        << "guarantees no longer apply\n";
            }
        } else if (opts.axis == "eta") {
            for (double v : opts.values)
                if (!(v >= 0.0 && v < 1.0))
                    return usage_error(err, "eta value " + format_value(v) +
                                                " outside [0,1)");
        } else if (opts.axis == "jitter") {
            for (double v : opts.values)
                if (!(v >= 0.0))
                    return usage_error(err, "jitter value " + format_value(v) +
                                                " must be >= 0");
        } else {
            return usage_error(err, "unknown sweep axis '" + opts.axis +
                                        "' (choose from pi1, M, eta, jitter)");
        }

        const fs::path base_dir(base.output_dir);
        fs::create_directories(base_dir);
        std::ofstream summary_csv(base_dir / "summary.csv");
        summary_csv << "axis,value,final_val_acc,best_val_acc,best_epoch\n";

        for (double v : opts.values) {
            ExperimentConfig point = base;
            if (opts.axis == "pi1")
                point.train.loss.pi1 = v;
            else if (opts.axis == "M")
                point.train.loss.num_dists = static_cast<int>(v);
            else if (opts.axis == "eta")
                point.noise.eta = v;
            else
                point.train.views.jitter_sigma = v;
            point.output_dir =
                (base_dir / (opts.axis + "-" + format_value(v))).string();

            out << "-- " << opts.axis << " = " << format_value(v) << "\n";
            const BuiltExperiment built = build_experiment(point);
            const RunSummary s = run_experiment(built, out);
            char row[160];
            std::snprintf(row, sizeof(row), "%s,%s,%.10g,%.10g,%zu",
                          opts.axis.c_str(), format_value(v).c_str(),
                          s.final_val, s.best_val, s.best_epoch);
            summary_csv << row << "\n";
            summary_csv.flush();
            out << "   final " << s.final_val << "  best " << s.best_val
                << " at epoch " << s.best_epoch << "\n";
        }
        out << "summary written to " << (base_dir / "summary.csv").string()
            << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        return usage_error(err, e.what());
    } catch (const DataFormatError& e) {
        return usage_error(err, e.what());
    } catch (const ValidationError& e) {
        return usage_error(err, e.what());
    } catch (const NonFiniteLoss& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

int cmd_noise_inspect(const std::string& config_path, std::ostream& out,
                      std::ostream& err) {
    try {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        const BuiltExperiment built = build_experiment(cfg);
        out << "noise kind         " << noise_kind_name(cfg.noise.kind) << "\n";
        out << "eta requested      " << cfg.noise.eta << "\n";
        out << "train rows         " << built.noise.eligible << "\n";
        out << "labels changed     " << built.noise.changed << "\n";
        out << "realized fraction  " << built.noise.realized_fraction << "\n";
        out << "transitions (rows with clean label r assigned noisy label c)\n";
        for (std::size_t r = 0; r < built.noise.transitions.size(); ++r) {
            out << "  " << r << ":";
            for (std::size_t c : built.noise.transitions[r]) out << " " << c;
            out << "\n";
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        return usage_error(err, e.what());
    } catch (const DataFormatError& e) {
        return usage_error(err, e.what());
    } catch (const ValidationError& e) {
        return usage_error(err, e.what());
    }
}

}  // namespace jsd
