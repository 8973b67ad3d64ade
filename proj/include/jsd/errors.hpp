#pragma once

#include <stdexcept>
#include <string>

namespace jsd {

// Precondition failures: bad distributions, weights, specs, dimensions, indices.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// KL(p,q) with q_k = 0 but p_k > 0.
struct AbsoluteContinuityViolation : std::domain_error {
    using std::domain_error::domain_error;
};

// Label index outside [0, K), including bad label bytes in data files.
struct InvalidLabel : ValidationError {
    using ValidationError::ValidationError;
};

// Malformed or truncated data files.
struct DataFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An exhaustive search would exceed the configured evaluation cap.
struct EnumerationCapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation requires a finite per-class loss bound and the loss has none.
struct UnboundedLossError : std::domain_error {
    using std::domain_error::domain_error;
};

// A loss or gradient evaluated to NaN/inf during training.
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Experiment config file problems, with file/field diagnostics in the message.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace jsd
