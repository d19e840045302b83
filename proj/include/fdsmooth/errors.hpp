#pragma once

#include <stdexcept>
#include <string>

namespace fdsmooth {

// A variable with no observations anywhere; its weights are undefined.
struct AllEmptyError : std::runtime_error {
    explicit AllEmptyError(const std::string& m) : std::runtime_error(m) {}
};

// A variable pair contributing no raw covariance pairs.
struct NoPairsError : std::runtime_error {
    explicit NoPairsError(const std::string& m) : std::runtime_error(m) {}
};

// Bandwidth below the resolution of the bin grid.
struct BandwidthTooSmallError : std::runtime_error {
    explicit BandwidthTooSmallError(const std::string& m) : std::runtime_error(m) {}
};

// An aggregate was requested over a sweep that has failed cells.
struct IncompleteEstimateError : std::runtime_error {
    explicit IncompleteEstimateError(const std::string& m) : std::runtime_error(m) {}
};

// Brute-force enumeration would exceed the configured cap.
struct TooLargeError : std::runtime_error {
    explicit TooLargeError(const std::string& m) : std::runtime_error(m) {}
};

// Log-log regression fed a non-positive coordinate.
struct NonPositiveError : std::runtime_error {
    explicit NonPositiveError(const std::string& m) : std::runtime_error(m) {}
};

// Malformed or inconsistent input file / configuration.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace fdsmooth
