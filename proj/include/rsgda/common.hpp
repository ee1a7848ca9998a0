#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsgda {

// Bad or inconsistent input data (files, graphs, configs). CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during optimization or training. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

} // namespace rsgda
