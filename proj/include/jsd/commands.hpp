#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "jsd/config.hpp"

namespace jsd {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // a certified claim or run failed
inline constexpr int kExitUsage = 2;    // bad usage or config

struct VerifyOptions {
    std::string selector = "all";  // bounds | decomposition | gradients |
                                   // limits | risk-theorem | asym-conditions | all
    std::string report_path;       // when set, the JSON report lands here
    bool fast = false;
    double z_fault = 1.0;  // testing hook: scales the loss normalizer
    std::uint64_t seed = 20260822;
};

const std::vector<std::string>& verify_selectors();

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err);

int cmd_train(const std::string& config_path, std::ostream& out,
              std::ostream& err);

struct SweepOptions {
    std::string config_path;
    std::string axis;  // pi1 | M | eta | jitter
    std::vector<double> values;
};

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

int cmd_noise_inspect(const std::string& config_path, std::ostream& out,
                      std::ostream& err);

}  // namespace jsd
