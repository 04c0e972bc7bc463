#pragma once

#include <stdexcept>
#include <string>

namespace sparsepair {

/// Invalid sampler/aggregator/simulation parameters.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inputs that are individually valid but inconsistent with each other
/// (dimension mismatch, unknown query, too few queries for the folds, ...).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file that does not follow its format (bad line, missing pair, ...).
class SchemaError : public InputError {
public:
    using InputError::InputError;
};

/// A value outside its admissible range (probability not in [0,1], ...).
class ValidationError : public InputError {
public:
    using InputError::InputError;
};

}  // namespace sparsepair
