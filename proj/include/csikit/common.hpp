#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace csikit {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;   // complex matrices, rows = locations, cols = subcarriers
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Error hierarchy. kind() feeds the CLI's machine-readable error output.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class config_error : public error {
public:
    using error::error;
    const char* kind() const noexcept override { return "config"; }
};

class argument_error : public error {
public:
    using error::error;
    const char* kind() const noexcept override { return "argument"; }
};

class data_error : public error {
public:
    using error::error;
    const char* kind() const noexcept override { return "data"; }
};

class insufficient_data_error : public data_error {
public:
    using data_error::data_error;
    const char* kind() const noexcept override { return "insufficient_data"; }
};

class undefined_correlation_error : public data_error {
public:
    using data_error::data_error;
    const char* kind() const noexcept override { return "undefined_correlation"; }
};

class empty_report_error : public data_error {
public:
    using data_error::data_error;
    const char* kind() const noexcept override { return "empty_report"; }
};

class io_error : public error {
public:
    using error::error;
    const char* kind() const noexcept override { return "io"; }
};

// Sums a buffer in ascending value order. Identical multisets produce
// bit-identical sums no matter how the values were generated, which keeps
// permutation-invariant statistics exactly invariant.
inline double sorted_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
}

}  // namespace csikit
