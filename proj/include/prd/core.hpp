// Copyright 2026 The PRD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prd {

/// Absolute tolerance for sum constraints (row/column sums).
inline constexpr double kSumTol = 1e-9;
/// Absolute tolerance for algebraic identities.
inline constexpr double kIdentityTol = 1e-12;

enum class ErrorCode {
  kZeroRow,
  kInvalidParam,
  kInvalidInstance,
  kInvalidSpec,
  kZeroColumn,
  kBidAboveOne,
  kInfeasibleBudget,
  kBidOutOfRange,
  kNonpositiveWeight,
  kColumnNotNormalized,
  kIncompleteAllocation,
  kSupportMismatch,
  kMissingMuF,
  kMissingPrePoolData,
  kIdenticalTypes,
  kThresholdTooSmall,
  kDivisibilityViolation,
  kRepresentationFailure,
  kTooLarge,
  kParseError,
  kIoError,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> column(std::size_t j) const;
  std::vector<std::vector<double>> to_rows() const;

  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// An allocation problem: n agents with additive values over m goods.
struct Instance {
  std::size_t n = 0;
  std::size_t m = 0;
  Matrix values;  // n x m, entries in [0,1]
  std::optional<std::vector<double>> weights;
  std::optional<std::vector<std::size_t>> groups;

  static Instance from_values(const std::vector<std::vector<double>>& rows);
};

/// Values rescaled so each agent's row sums to one.
struct NormalizedValuations {
  Matrix vbar;
  std::vector<double> row_sums;  // sums of the raw rows
};

/// Constants that parameterize the bid box [b_min, b_max] and the log-share
/// allocation rule. `beta` > 1 selects the group-mode bid floor l/(m*beta).
struct MechanismParams {
  double l = 0.0;
  double mu_l = 0.0;
  double delta = 0.0;
  std::size_t m = 0;
  double beta = 1.0;

  double b_min = 0.0;
  double b_max = 0.0;
  double c = 0.0;      // -ln(b_min)
  double C = 0.0;      // ln(b_max) - ln(b_min)

  /// Builds the derived constants from (l, mu_l, m, beta) with only the range
  /// checks that the bid box itself needs; `delta` is stored as given.
  static MechanismParams from_bounds(double l, double mu_l, double delta, std::size_t m,
                                     double beta = 1.0);
};

struct FractionalAllocation {
  Matrix x;  // n x m, columns sum to one
};

struct IntegralAllocation {
  std::size_t n = 0;
  std::vector<std::size_t> owner;  // owner[j] in [0, n)

  /// Items held by `agent`, in increasing order.
  std::vector<std::size_t> bundle(std::size_t agent) const;
  std::vector<std::vector<std::size_t>> bundles() const;
};

NormalizedValuations normalize(const Matrix& values);

MechanismParams derive_params(double l, double mu_l, double delta, std::size_t m,
                              std::optional<double> beta = std::nullopt);

struct ValidationIssue {
  enum class Kind { kShape, kRange, kZeroRow, kWeight, kGroup };
  Kind kind;
  std::string message;
};

/// Lists every invariant violation; an empty result means the instance is valid.
std::vector<ValidationIssue> validate_instance(const Instance& inst);

/// Throws kInvalidInstance carrying the first issue when the instance is invalid.
void require_valid(const Instance& inst);

/// Column sums of x, used for stochasticity checks.
std::vector<double> column_sums(const Matrix& x);

}  // namespace prd
