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

#include "prd/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace prd {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroRow: return "ZeroRow";
    case ErrorCode::kInvalidParam: return "InvalidParam";
    case ErrorCode::kInvalidInstance: return "InvalidInstance";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kZeroColumn: return "ZeroColumn";
    case ErrorCode::kBidAboveOne: return "BidAboveOne";
    case ErrorCode::kInfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::kBidOutOfRange: return "BidOutOfRange";
    case ErrorCode::kNonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::kColumnNotNormalized: return "ColumnNotNormalized";
    case ErrorCode::kIncompleteAllocation: return "IncompleteAllocation";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kMissingMuF: return "MissingMuF";
    case ErrorCode::kMissingPrePoolData: return "MissingPrePoolData";
    case ErrorCode::kIdenticalTypes: return "IdenticalTypes";
    case ErrorCode::kThresholdTooSmall: return "ThresholdTooSmall";
    case ErrorCode::kDivisibilityViolation: return "DivisibilityViolation";
    case ErrorCode::kRepresentationFailure: return "RepresentationFailure";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) {
      throw Error(ErrorCode::kInvalidInstance, "ragged matrix rows");
    }
    std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

Instance Instance::from_values(const std::vector<std::vector<double>>& rows) {
  Instance inst;
  inst.values = Matrix::from_rows(rows);
  inst.n = inst.values.rows();
  inst.m = inst.values.cols();
  return inst;
}

std::vector<std::size_t> IntegralAllocation::bundle(std::size_t agent) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < owner.size(); ++j) {
    if (owner[j] == agent) out.push_back(j);
  }
  return out;
}

std::vector<std::vector<std::size_t>> IntegralAllocation::bundles() const {
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t j = 0; j < owner.size(); ++j) {
    if (owner[j] < n) out[owner[j]].push_back(j);
  }
  return out;
}

NormalizedValuations normalize(const Matrix& values) {
  NormalizedValuations out{Matrix(values.rows(), values.cols()),
                           std::vector<double>(values.rows(), 0.0)};
  for (std::size_t i = 0; i < values.rows(); ++i) {
    double sum = 0.0;
    for (double v : values.row(i)) sum += v;
    if (!(sum > 0.0)) {
      throw Error(ErrorCode::kZeroRow, "row " + std::to_string(i) + " has zero sum");
    }
    out.row_sums[i] = sum;
    auto src = values.row(i);
    auto dst = out.vbar.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / sum;
  }
  return out;
}

MechanismParams MechanismParams::from_bounds(double l, double mu_l, double delta,
                                             std::size_t m, double beta) {
  if (!(l > 0.0 && l < 1.0)) throw Error(ErrorCode::kInvalidParam, "l must lie in (0,1)");
  if (!(mu_l > 0.0 && mu_l <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "mu_l must lie in (0,1]");
  }
  if (m == 0) throw Error(ErrorCode::kInvalidParam, "m must be positive");
  if (!(beta >= 1.0)) throw Error(ErrorCode::kInvalidParam, "beta must be >= 1");

  MechanismParams p;
  p.l = l;
  p.mu_l = mu_l;
  p.delta = delta;
  p.m = m;
  p.beta = beta;
  const double md = static_cast<double>(m);
  p.b_min = l / (md * beta);
  p.b_max = 2.0 / (md * mu_l);
  p.c = -std::log(p.b_min);
  p.C = std::log(p.b_max) - std::log(p.b_min);
  return p;
}

MechanismParams derive_params(double l, double mu_l, double delta, std::size_t m,
                              std::optional<double> beta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "delta must lie in (0,1)");
  }
  return MechanismParams::from_bounds(l, mu_l, delta, m, beta.value_or(1.0));
}

std::vector<ValidationIssue> validate_instance(const Instance& inst) {
  using Kind = ValidationIssue::Kind;
  std::vector<ValidationIssue> issues;
  if (inst.n == 0 || inst.m == 0) {
    issues.push_back({Kind::kShape, "n and m must both be at least 1"});
  }
  if (inst.values.rows() != inst.n || inst.values.cols() != inst.m) {
    std::ostringstream os;
    os << "values is " << inst.values.rows() << "x" << inst.values.cols() << ", expected "
       << inst.n << "x" << inst.m;
    issues.push_back({Kind::kShape, os.str()});
    return issues;
  }
  for (std::size_t i = 0; i < inst.n; ++i) {
    bool positive = false;
    for (std::size_t j = 0; j < inst.m; ++j) {
      const double v = inst.values(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream os;
        os << "values[" << i << "][" << j << "] = " << v << " outside [0,1]";
        issues.push_back({Kind::kRange, os.str()});
      }
      if (v > 0.0) positive = true;
    }
    if (!positive) {
      issues.push_back({Kind::kZeroRow, "row " + std::to_string(i) + " has no positive value"});
    }
  }
  if (inst.weights) {
    if (inst.weights->size() != inst.n) {
      issues.push_back({Kind::kWeight, "weights length differs from n"});
    }
    for (std::size_t i = 0; i < inst.weights->size(); ++i) {
      if (!((*inst.weights)[i] > 0.0)) {
        issues.push_back({Kind::kWeight, "weight " + std::to_string(i) + " is not positive"});
      }
    }
  }
  if (inst.groups) {
    const auto& g = *inst.groups;
    if (g.size() != inst.n) {
      issues.push_back({Kind::kGroup, "groups length differs from n"});
    } else if (!g.empty()) {
      const std::set<std::size_t> seen(g.begin(), g.end());
      if (*seen.rbegin() + 1 != seen.size()) {
        issues.push_back({Kind::kGroup, "group indices must form 0..G-1 without gaps"});
      }
    }
  }
  return issues;
}

void require_valid(const Instance& inst) {
  const auto issues = validate_instance(inst);
  if (!issues.empty()) throw Error(ErrorCode::kInvalidInstance, issues.front().message);
}

std::vector<double> column_sums(const Matrix& x) {
  std::vector<double> sums(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) sums[j] += x(i, j);
  }
  return sums;
}

}  // namespace prd
