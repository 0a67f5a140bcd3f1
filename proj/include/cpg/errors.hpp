#ifndef CPG_ERRORS_HPP
#define CPG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cpg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied parameter (even kernel size, out-of-range index, ...).
// The CLI reports these as usage errors (exit 2).
struct ArgumentError : Error {
    using Error::Error;
};

// Mismatched or unsupported tensor shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Malformed bytes in a serialized tensor.
struct FormatError : Error {
    using Error::Error;
};

// Valid header but a dtype/version this build does not handle.
struct UnsupportedError : Error {
    using Error::Error;
};

// Semantically invalid values (label out of range, non-finite logits, ...).
struct DataError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Non-finite loss during toy training.
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace cpg

#endif
