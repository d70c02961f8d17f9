#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prescriptive {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct EmptyFileError : Error {
    using Error::Error;
};

// Row-level problem in a records file; row is 0-based over data rows (header excluded).
struct RowError : Error {
    RowError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_index(row) {}
    std::size_t row_index;
};

struct EncodingError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct FoldError : Error {
    using Error::Error;
};

struct FitError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct StatsError : Error {
    using Error::Error;
};

struct ExplainError : Error {
    using Error::Error;
};

struct ConstraintViolation : Error {
    using Error::Error;
};

struct FeedbackError : Error {
    using Error::Error;
};

struct NotFound : Error {
    using Error::Error;
};

struct Conflict : Error {
    using Error::Error;
};

}  // namespace prescriptive
