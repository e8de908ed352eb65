#pragma once

#include <stdexcept>
#include <string>

namespace tsens {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text: CSV rows, config files, scenario files, grid syntax.
class ParseError : public Error {
public:
    using Error::Error;
};

// Input parsed but violates a structural invariant of the data model
// (mixed outcome missingness within a study, inconsistent proxy mask, ...).
class StructuralError : public Error {
public:
    using Error::Error;
};

// A fit or estimate could not be produced: rank-deficient design,
// stratum too small, unseen cell in saturated prediction.
class EstimationError : public Error {
public:
    using Error::Error;
};

}  // namespace tsens
