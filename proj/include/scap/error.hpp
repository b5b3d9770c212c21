#pragma once

#include <stdexcept>
#include <string>

namespace scap {

/// Base of every error the engine throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Calibration statistics are empty or otherwise unusable.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Two LayerStats cannot be combined.
class MergeError : public Error {
public:
    using Error::Error;
};

/// Argument outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Hook point that does not exist in the model.
class HookError : public Error {
public:
    using Error::Error;
};

enum class FormatErrc {
    io,
    malformed_manifest,
    offset_overlap,
    truncated_blob,
    bad_data,
    unsupported_version,
    schema_violation,
};

const char* to_string(FormatErrc code) noexcept;

/// Failure while reading or writing a persisted artifact.
class FormatError : public Error {
public:
    FormatError(FormatErrc code, const std::string& what)
        : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

    FormatErrc code() const noexcept { return code_; }

private:
    FormatErrc code_;
};

}  // namespace scap
