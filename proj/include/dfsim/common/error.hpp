#pragma once

#include <stdexcept>
#include <string>

namespace dfsim {

/// Invalid or inconsistent configuration / input parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content (grid files, patch files, JSON documents).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside the flow solver.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A stage of a batch pipeline failed; the message names the item.
class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dfsim
