#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coughnet {

/// Base class for all structured errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidLength : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class InvalidFrequency : public Error {
public:
    using Error::Error;
};

/// Malformed byte stream; carries the byte offset where parsing failed.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& reason)
        : Error("parse error at byte " + std::to_string(offset) + ": " + reason),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

/// Bad manifest row; carries the 1-based line number.
class ManifestError : public Error {
public:
    ManifestError(std::size_t line, const std::string& reason)
        : Error("manifest line " + std::to_string(line) + ": " + reason), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class EmptyAfterTrim : public Error {
public:
    using Error::Error;
};

class TooShort : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss; carries the epoch where it happened.
class DivergedError : public Error {
public:
    explicit DivergedError(std::size_t epoch)
        : Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch)),
          epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

class InsufficientMinority : public Error {
public:
    using Error::Error;
};

class DegenerateLabels : public Error {
public:
    using Error::Error;
};

class InvalidPlan : public Error {
public:
    using Error::Error;
};

class LeakageError : public Error {
public:
    using Error::Error;
};

class SearchFailed : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace coughnet
