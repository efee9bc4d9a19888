/*
 * Copyright 2026 the stacknet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STACKNET_ERRORS_HPP
#define STACKNET_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stacknet {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/volume shapes do not satisfy an operation's contract.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A configuration value is invalid (bad kernel size, fold counts, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An operation was called in the wrong order (e.g. backward without a
/// cached forward pass).
class StateError : public Error {
public:
    using Error::Error;
};

/// A value is outside the domain an operation accepts.
class ValueError : public Error {
public:
    using Error::Error;
};

/// A requested object cannot fit into the available space.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Input is degenerate for the requested statistic (zero variance, ...).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// A metric has no defined value for the given inputs.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Mask extraction produced no foreground voxels.
class EmptyMaskError : public Error {
public:
    using Error::Error;
};

/// File or stream I/O failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Byte-level parsing failed. Reports the offending field and the byte
/// offset where it lives.
class ParseError : public Error {
public:
    ParseError(const std::string& field, std::size_t offset, const std::string& detail)
        : Error("parse error: field '" + field + "' at byte offset " +
                std::to_string(offset) + ": " + detail),
          field_(field),
          offset_(offset) {}

    const std::string& field() const { return field_; }
    std::size_t offset() const { return offset_; }

private:
    std::string field_;
    std::size_t offset_;
};

} // namespace stacknet

#endif // STACKNET_ERRORS_HPP
