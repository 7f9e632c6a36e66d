#pragma once

#include <stdexcept>
#include <string>

namespace mvp {

// Base for every error raised by the library. Normal control-flow outcomes
// (dropped boxes, propagation failure) are values, never exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

// Structurally valid records that violate an ordering/consistency rule.
class FormatError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class SpecError : public Error {
public:
    using Error::Error;
};

class DetectorError : public Error {
public:
    using Error::Error;
};

class MissingFrameError : public DetectorError {
public:
    using DetectorError::DetectorError;
};

class ProtocolError : public DetectorError {
public:
    using DetectorError::DetectorError;
};

class BridgeTimeoutError : public DetectorError {
public:
    using DetectorError::DetectorError;
};

class BridgeExitedError : public DetectorError {
public:
    using DetectorError::DetectorError;
};

class EvalError : public Error {
public:
    using Error::Error;
};

class ExtractError : public Error {
public:
    using Error::Error;
};

}  // namespace mvp
