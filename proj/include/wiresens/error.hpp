#pragma once

#include <stdexcept>
#include <string>

namespace wiresens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed JSON. `what()` carries the byte offset of the failure.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t byte)
        : Error(msg), byte_(byte) {}
    std::size_t byte() const noexcept { return byte_; }

private:
    std::size_t byte_;
};

/// Well-formed input that violates a field invariant.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& msg)
        : Error(msg), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class CodecErrc {
    truncated,
    bad_magic,
    bad_version,
    crc_mismatch,
    out_of_range,
    bad_geometry,
};

/// Packet encode/decode failure. Corruption (truncated, crc_mismatch) and
/// protocol mismatch (bad_magic, bad_version) are distinguishable by code.
class CodecError : public Error {
public:
    CodecError(CodecErrc code, const std::string& msg) : Error(msg), code_(code) {}
    CodecErrc code() const noexcept { return code_; }

private:
    CodecErrc code_;
};

class RecordingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

}  // namespace wiresens
