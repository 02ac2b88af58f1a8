/*
   Copyright 2026 The sderk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sderk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector/array shapes that do not match the system dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A drift, diffusion or jacobian evaluation produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Malformed tableau or configuration text.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A tableau that parsed but violates a consistency condition.
class ValidationError : public Error {
public:
    ValidationError(std::string condition, double residual)
        : Error(condition + " violated (residual " + std::to_string(residual) + ")"),
          condition_(std::move(condition)), residual_(residual) {}

    const std::string& condition() const noexcept { return condition_; }
    double residual() const noexcept { return residual_; }

private:
    std::string condition_;
    double residual_;
};

/// Broken Brownian tree bookkeeping (non-contiguous merge, non-dyadic step, ...).
class BrownianError : public Error {
public:
    using Error::Error;
};

/// The step controller gave up: too many rejections or a non-finite state.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, double t, double dt, double err)
        : Error(what + " at t=" + std::to_string(t) + " dt=" + std::to_string(dt)
                + " err=" + std::to_string(err)),
          t_(t), dt_(dt), err_(err) {}

    double t() const noexcept { return t_; }
    double dt() const noexcept { return dt_; }
    double err() const noexcept { return err_; }

private:
    double t_, dt_, err_;
};

/// A precondition on arguments was violated.
class PreconditionError : public Error {
public:
    using Error::Error;
};

} // namespace sderk
