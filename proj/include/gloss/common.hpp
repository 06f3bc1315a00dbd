#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace gloss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad input: unreadable files, malformed cells, impossible option combinations.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown: failed factorizations, non-finite iterates, degenerate fits.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shortest decimal form that round-trips an IEEE double exactly.
std::string format_double(double x);

// Parses a complete finite double; returns false on trailing junk, NaN/inf, or empty input.
bool parse_double(const std::string& s, double& out);

} // namespace gloss
