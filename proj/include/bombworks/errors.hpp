// Error types shared across the library. All map onto std exceptions so
// callers that don't care about the fine-grained kind can catch
// std::invalid_argument / std::runtime_error as usual.
#pragma once

#include <stdexcept>
#include <string>

namespace bombworks {

// Shape or index disagreement between operands.
struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// A configuration value outside its legal range.
struct ParameterError : std::invalid_argument {
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Empty or otherwise unusable input data.
struct InputError : std::invalid_argument {
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A class required by an operation has no samples.
struct MissingClassError : std::invalid_argument {
  explicit MissingClassError(const std::string& what) : std::invalid_argument(what) {}
};

// Training data that cannot support the requested fit (e.g. one class only).
struct DegenerateInputError : std::invalid_argument {
  explicit DegenerateInputError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values encountered mid-computation.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed file contents.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bombworks
