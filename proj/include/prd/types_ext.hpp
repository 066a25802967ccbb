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

// Deterministic envy-free allocation with d agent types and t good types.
//
// All agents of one type act as a single super-agent with weight n_a. The
// first nu units of every good type (M1) go through the weighted mechanism and
// are rounded per type; the remainder (M2) is spread evenly over agents. A
// take-away pool then makes every super-agent's holding a multiple of n_a and
// is handed back in multiples of n_a, so each super-agent's bundle splits
// evenly over its members.

#include <cstdint>
#include <optional>
#include <vector>

#include "prd/core.hpp"
#include "prd/metrics.hpp"

namespace prd::types {

using Counts = std::vector<std::int64_t>;

struct TypesInstance {
  std::size_t d = 0;
  std::size_t t = 0;
  std::vector<std::int64_t> agents_per_type;  // n_a
  Counts items_per_type;                      // m_b
  Matrix values;                              // d x t, value of one unit
  std::optional<std::int64_t> nu;             // defaults to the computed bound

  std::int64_t total_agents() const;
  std::int64_t gcd_agents() const;            // r
};

/// Throws kInvalidParam on shape, sign or count errors and kZeroRow on a row
/// of zeros.
void validate_types(const TypesInstance& ti);

/// Min over type pairs of sum over the nu*t unit items of M1 of
/// |v_a - v_a'| when each type values M1 at 1. Independent of nu.
/// Throws kIdenticalTypes when two rows are proportional and kInvalidParam
/// when d < 2.
double types_delta(const Matrix& values, std::int64_t nu = 1);

/// C = ln(2t/l).
double types_log_range(double l, std::size_t t);

/// ceil(max{60nC/delta^2, 48n^2C/(rd delta^2), 24n^2C/(r delta^2)}) with
/// l = delta/25. Zero for d = 1.
std::int64_t types_threshold(const TypesInstance& ti);

/// Take-away pool size per good type, ceil(2 n_d n_1 / (d r)); 0 for d = 1.
std::int64_t pool_threshold(const TypesInstance& ti);

/// Nonnegative c with sum c_a n_a = total, or nullopt when none exists.
std::optional<Counts> change_making(std::int64_t total, const Counts& denominations);

/// Floor every entry of a (super-agent x type) fractional count matrix, then
/// hand each type's leftover units to the largest residues (ties to the lower
/// index).
std::vector<Counts> round_super_residues(const Matrix& fractional);

struct TakeawayResult {
  std::vector<Counts> repaired;  // d x t
  Counts pool;                   // units taken per type
  std::vector<Counts> returned;  // d x t, units handed back
};

/// `holdings` is d x t. Throws kRepresentationFailure if a pool cannot be
/// represented in multiples of the n_a.
TakeawayResult takeaway_and_reallocate(const std::vector<Counts>& holdings,
                                       const TypesInstance& ti);

struct TypesTrace {
  std::int64_t nu = 0;
  double delta = 0.0;
  double l = 0.0;
  Matrix fractional;                  // d x t fractional M1 counts
  std::vector<Counts> after_rounding; // M1 only
  std::vector<Counts> m2_per_agent;   // n x t
  std::vector<Counts> before_repair;  // d x t, M1 + members' M2
  TakeawayResult repair;
};

struct TypesAllocation {
  std::vector<Counts> per_agent;      // n x t, agents listed type by type
  std::vector<std::size_t> type_of;   // agent -> type
  TypesTrace trace;
};

/// Throws kThresholdTooSmall when nu is below the computed bound or some m_b
/// is below nu, and kDivisibilityViolation when r does not divide some m_b.
TypesAllocation allocate_types(const TypesInstance& ti);

/// The n-agent, sum(m_b)-item instance the counts describe. Each row is
/// rescaled to max 1 so values lie in [0,1]; envy is unaffected.
struct Expanded {
  Instance instance;
  IntegralAllocation allocation;
};
Expanded expand(const TypesInstance& ti, const TypesAllocation& alloc);

/// Envy check straight from the counts.
metrics::EnvyCheck counts_envy_check(const TypesInstance& ti, const TypesAllocation& alloc);

}  // namespace prd::types
