// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_ERRORS_HPP
#define NEUVEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace neuvec {

/// Coarse error categories. They map 1:1 onto the C API return codes and
/// the CLI exit codes (0 success, 1 usage/validation, 2 numerical, 3 I/O).
enum class ErrorCode : int {
  Usage = 1,
  Numeric = 2,
  Io = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& w) : Error(ErrorCode::Usage, "dimension mismatch: " + w) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& w) : Error(ErrorCode::Usage, "shape mismatch: " + w) {}
};

struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& w) : Error(ErrorCode::Numeric, "matrix not positive definite: " + w) {}
};

struct UnknownFamily : Error {
  explicit UnknownFamily(const std::string& w) : Error(ErrorCode::Usage, "unknown kernel family: " + w) {}
};

struct UnsupportedDimension : Error {
  explicit UnsupportedDimension(const std::string& w) : Error(ErrorCode::Usage, "unsupported dimension: " + w) {}
};

struct EmptyInput : Error {
  explicit EmptyInput(const std::string& w) : Error(ErrorCode::Usage, "empty input: " + w) {}
};

struct ZeroDistance : Error {
  explicit ZeroDistance(const std::string& w) : Error(ErrorCode::Numeric, "zero distance: " + w) {}
};

struct MeanNetAbsent : Error {
  explicit MeanNetAbsent(const std::string& w) : Error(ErrorCode::Usage, "mean network absent: " + w) {}
};

struct NonFiniteLoss : Error {
  explicit NonFiniteLoss(const std::string& w) : Error(ErrorCode::Numeric, "non-finite loss: " + w) {}
};

struct IterOutOfRange : Error {
  explicit IterOutOfRange(const std::string& w) : Error(ErrorCode::Usage, "iteration out of range: " + w) {}
};

struct MissingColumn : Error {
  explicit MissingColumn(const std::string& w) : Error(ErrorCode::Usage, "missing column: " + w) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorCode::Usage, "parse error: " + w) {}
};

struct EmptyDataset : Error {
  explicit EmptyDataset(const std::string& w) : Error(ErrorCode::Usage, "empty dataset: " + w) {}
};

struct InsufficientNeighbors : Error {
  explicit InsufficientNeighbors(const std::string& w) : Error(ErrorCode::Usage, "insufficient neighbors: " + w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::Io, "i/o error: " + w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCode::Usage, "config error: " + w) {}
};

}  // namespace neuvec

#endif
