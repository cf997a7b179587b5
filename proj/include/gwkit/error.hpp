#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwkit {

// Base class for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The global design matrix is rank deficient. `columns` is a minimal set of
// design columns that is linearly dependent.
class RankDeficientError : public Error {
public:
    RankDeficientError(std::string message, std::vector<std::string> columns)
        : Error(std::move(message)), columns_(std::move(columns)) {}
    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
};

// A local (kernel weighted) design has fewer usable observations than
// parameters at `location`.
class LocalRankDeficientError : public Error {
public:
    LocalRankDeficientError(std::string message, std::size_t location)
        : Error(std::move(message)), location_(location) {}
    std::size_t location() const noexcept { return location_; }

private:
    std::size_t location_;
};

}  // namespace gwkit
