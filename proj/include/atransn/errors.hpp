#pragma once

#include <stdexcept>
#include <string>

namespace atransn {

// Base for all recoverable errors raised by the library. The CLI maps
// these to exit code 2 (bad input) and everything else to exit 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};
struct VocabError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct AlignmentError : Error {
    using Error::Error;
};
struct TrainingError : Error {
    using Error::Error;
};
struct UsageError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace atransn
