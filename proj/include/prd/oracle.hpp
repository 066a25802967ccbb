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

// Brute-force checkers that share no code path with the mechanism beyond
// normalization.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prd/core.hpp"

namespace prd::oracle {

/// Largest n^m accepted by the exhaustive searches.
inline constexpr double kMaxStates = 1e7;

struct EfExistence {
  bool exists = false;
  std::optional<IntegralAllocation> witness;  // first EF allocation in enumeration order
};

/// Enumerates all n^m allocations, items as base-n digits with item 0 most
/// significant. Throws kTooLarge beyond kMaxStates.
EfExistence brute_force_ef_exists(const Instance& inst);

struct MinEnvyResult {
  IntegralAllocation allocation;
  double margin = 1.0;  // 1 when n == 1
};

/// Allocation maximizing the minimum envy margin; the first one wins ties.
MinEnvyResult exhaustive_min_envy(const Instance& inst);

enum class Family { kGrid, kRandom, kScaling, kSwap };

struct AuditFamily {
  Family kind = Family::kRandom;
  std::size_t count = 1000;  // random only
  std::uint64_t seed = 0;    // random only

  static AuditFamily grid() { return {Family::kGrid, 0, 0}; }
  static AuditFamily random(std::size_t count, std::uint64_t seed) {
    return {Family::kRandom, count, seed};
  }
  static AuditFamily scaling() { return {Family::kScaling, 0, 0}; }
  static AuditFamily swap() { return {Family::kSwap, 0, 0}; }
};

const char* to_string(Family f);
Family family_from_string(const std::string& name);

struct DeviationReport {
  std::size_t agent = 0;
  std::string family;
  std::vector<double> best_report;  // misreport achieving best_value
  double truthful_value = 0.0;      // vbar_i . x_i under the true report
  double best_value = 0.0;
  double gain = 0.0;                // best_value - truthful_value
  std::size_t evaluated = 0;
  bool bids_identical = true;       // scaling family: every bid row equals the truthful one
};

/// Fractional value of each misreport for `agent`, the others reporting
/// truthfully. Grid: each coordinate swept over {0, 0.1, ..., 1} with the
/// rest truthful, plus the uniform report. Random: i.i.d. U[0,1] reports.
/// Scaling: alpha * v_i for alpha = 2^k, k in [-6, 6]. Swap: every
/// transposition of two coordinates.
DeviationReport deviation_audit(const Instance& inst, const MechanismParams& params,
                                std::size_t agent, const AuditFamily& family);

struct UnbiasednessReport {
  std::vector<double> expected;   // vbar_i . x_i
  std::vector<double> empirical;  // mean over trials of vbar_i . A_i
  std::vector<double> z;          // (empirical - expected) / sqrt(var / trials)
  double max_abs_z = 0.0;
  std::size_t trials = 0;
};

/// Trial t rounds with seed derive_key(seed, t). The per-trial variance is
/// sum_j vbar_ij^2 x_ij (1 - x_ij). Throws kInvalidParam for trials < 1000.
UnbiasednessReport rounding_unbiasedness(const FractionalAllocation& x, const Matrix& vbar,
                                         std::size_t trials, std::uint64_t seed);

}  // namespace prd::oracle
