#pragma once

#include <stdexcept>
#include <string>

namespace qrf {

// Raised when a computation would exceed a hard capacity limit (qubit cap,
// enumeration width). The message names the limit.
struct resource_error : std::runtime_error {
  explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when input data cannot be represented at the requested precision.
struct precision_error : std::runtime_error {
  explicit precision_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a minimal sample or design matrix is rank deficient.
struct degeneracy_error : std::runtime_error {
  explicit degeneracy_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an iterative solver gives up. Carries the offending instance
// in the message.
struct solver_error : std::runtime_error {
  explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a requested metric is undefined for the given data.
struct undefined_metric_error : std::runtime_error {
  explicit undefined_metric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qrf
