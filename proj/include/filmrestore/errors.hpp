#pragma once

#include <stdexcept>
#include <string>

namespace filmrestore {

// Bad user-supplied configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad runtime input to an operation (CLI exit code 1).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// On-disk dataset is missing pieces or inconsistent.
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric guard tripped (e.g. imaginary residue above bound on a round trip).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Latent patch coordinates not divisible by the autoencoder stride.
struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Patch reassembly fed a missing or misshapen patch.
struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// KV cache consulted for a timestep it was not built at.
struct StalenessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric is undefined for the given inputs (e.g. empty mask).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Broken internal invariant; a bug, not a user error.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace filmrestore
