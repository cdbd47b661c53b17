#ifndef DIAGREG_CORE_HPP
#define DIAGREG_CORE_HPP

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <system_error>

namespace diagreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Value returned by the dual objectives outside their domain.
inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Base for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class dimension_error : public error {
 public:
  using error::error;
};

class invalid_argument : public error {
 public:
  using error::error;
};

/// Shortest decimal string that parses back to exactly `x`.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) throw error("format_double: conversion failed");
  return std::string(buf, end);
}

}  // namespace diagreg

#endif  // DIAGREG_CORE_HPP
