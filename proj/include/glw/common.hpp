#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace glw {

// Error taxonomy. The CLI maps these onto exit codes: ConfigError -> 2,
// TrainingError -> 3, EvalError -> 4, everything else -> 1.
struct GlwError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : GlwError {
    using GlwError::GlwError;
};

// Non-finite value detected after an op, or a numeric contract broken.
struct NumericsError : GlwError {
    using GlwError::GlwError;
};

struct ConfigError : GlwError {
    using GlwError::GlwError;
};

struct TrainingError : GlwError {
    using GlwError::GlwError;
};

struct EvalError : GlwError {
    using GlwError::GlwError;
};

// Unknown module id or missing registration.
struct LookupError : GlwError {
    using GlwError::GlwError;
};

// Readout from a disconnected module: content exists (penumbra) but is withheld.
struct WithheldError : GlwError {
    using GlwError::GlwError;
};

// Worker cap for the few parallel fan-out paths. Reductions stay in fixed
// order regardless, so results are bit-identical to sequential execution.
std::size_t worker_threads();

}  // namespace glw
