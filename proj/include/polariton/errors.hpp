// errors.hpp: exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace polariton {

// Invalid basis specification or operator request (bad site, empty sector, ...)
struct BasisError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operands live on incompatible spaces.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or out-of-range physical input.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical routine missed its tolerance; carries the achieved error.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// Configuration parse/validation failure. line/column are 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace polariton
