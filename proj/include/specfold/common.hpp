// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace specfold {

inline constexpr double kPi = std::numbers::pi;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration or violated call contract.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable, malformed, or incomplete input data.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: divergence, singularity, degenerate statistics.
class NumericError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace specfold
