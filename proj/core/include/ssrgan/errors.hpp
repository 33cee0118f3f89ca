#pragma once

#include <stdexcept>
#include <string>

namespace ssrgan {

/// Base of every error thrown by the library. Carries the name of the module
/// that raised it so the CLI can report "module: message".
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& message)
        : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Shape or argument mismatch.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Non-finite values, degenerate denominators.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed files: bad magic, truncated blobs, wrong CSV column counts.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (unknown keys, inconsistent block chains, bad presets).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Requests outside the supported envelope (non-integer resampling ratios,
/// newer checkpoint versions).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition (non-scalar loss, missing provenance).
class ContractError : public Error {
public:
    using Error::Error;
};

/// No artifact period could be found in the autocorrelation search range.
class PeriodDetectionError : public Error {
public:
    using Error::Error;
};

} // namespace ssrgan
