#pragma once

#include <stdexcept>
#include <string>

namespace mulog {

// Base class for all library failures so callers can catch one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a matrix that must be positive definite is not.
// pixel < 0 means the failure is not tied to a pixel of a stack.
class NotPositiveDefiniteError : public Error {
public:
    explicit NotPositiveDefiniteError(const std::string& msg, long pixel = -1)
        : Error(msg), pixel_(pixel) {}
    long pixel() const noexcept { return pixel_; }

private:
    long pixel_;
};

// Raised when matrix exponentiation would overflow double range.
class OverflowError : public Error {
public:
    using Error::Error;
};

// Invalid sample data (non-finite entries, nonpositive diagonals, ...).
class InvalidDataError : public Error {
public:
    explicit InvalidDataError(const std::string& msg, long pixel = -1)
        : Error(msg), pixel_(pixel) {}
    long pixel() const noexcept { return pixel_; }

private:
    long pixel_;
};

// Calibration cannot produce a usable basis (e.g. constant input).
class DegenerateCalibrationError : public Error {
public:
    using Error::Error;
};

// A plugged-in denoiser violated its contract (shape change, NaN output,
// process failure for external denoisers).
class DenoiserContractError : public Error {
public:
    using Error::Error;
};

// File format / serialization problems.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mulog
