#ifndef UASR_CORE_ERRORS_HPP
#define UASR_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace uasr {

// Root of every error the library throws. The CLI maps data and shape errors to
// exit code 2, divergence to 3 and everything else to 1 (usage).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class EmptyCorpusError : public DataError {
public:
    using DataError::DataError;
};

class FileError : public DataError {
public:
    using DataError::DataError;
};

// An upstream artifact a pipeline stage needs is missing.
class DependencyError : public DataError {
public:
    using DataError::DataError;
};

class CoverageError : public DataError {
public:
    using DataError::DataError;
};

// Bad configuration or command-line usage (unknown key, malformed override).
class ConfigError : public Error {
public:
    using Error::Error;
};

class UndefinedCorrelationError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace uasr

#endif
