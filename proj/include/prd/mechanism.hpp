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

// Proportional-response-with-dummy mechanism.
//
// Each agent's normalized values are turned into a budget-one bid vector
// inside the box [b_min, b_max] by scaling and clamping. An agent's share of
// item j grows with ln(b_ij) + c; a dummy bidder absorbs the rest of each item
// and splits it back evenly (or by weight), which makes every agent's problem
// independent of the others' bids. The fractional shares are then rounded
// item by item.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prd/core.hpp"

namespace prd::mech {

struct BidProfile {
  Matrix b;                          // n x m
  std::vector<double> scale_factors; // NaN for fallback agents
  std::vector<bool> fallback;        // true when no scale factor reaches budget one
};

/// h(s) = sum_j clamp(s * vbar_j, b_min, b_max), stored as breakpoints.
/// On [breakpoints[k], breakpoints[k+1]) the function is
/// values[k] + slopes[k] * (s - breakpoints[k]); the last segment extends to
/// infinity. breakpoints[0] is always 0.
struct PiecewiseLinearH {
  std::vector<double> breakpoints;
  std::vector<double> values;
  std::vector<double> slopes;

  double operator()(double s) const;
  double max_value() const { return values.back(); }
  std::size_t segments() const { return breakpoints.size(); }
};

struct AllotmentWithDummy {
  Matrix interim;  // (n+1) x m, last row is the dummy
  Matrix final;    // n x m
};

/// x_ij = b_ij / sum_k b_kj.
FractionalAllocation proportional_allotment(const Matrix& bids);

/// Dummy bids n - sum_i b_ij; interim share bid/n; the dummy's share is split
/// evenly among the n agents.
AllotmentWithDummy proportional_allotment_with_dummy(const Matrix& bids);

PiecewiseLinearH build_h(std::span<const double> vbar, const MechanismParams& params);

/// Smallest s with h(s) = 1, or nullopt when max h < 1.
std::optional<double> solve_scale_factor(const PiecewiseLinearH& h);

struct BidRow {
  std::vector<double> bids;
  double scale_factor = 0.0;  // NaN when fallback
  bool fallback = false;
};

/// Optimal budget-one bids for one agent. Without a crossing, every
/// positively valued item gets b_max and the rest of the budget is spread
/// evenly over zero-valued items.
BidRow construct_bids(std::span<const double> vbar, const MechanismParams& params);

/// Runs construct_bids on every row of a normalized valuation matrix.
BidProfile construct_bid_profile(const Matrix& vbar, const MechanismParams& params);

/// Closed-form unweighted log-share allocation with the dummy redistribution.
FractionalAllocation fractional_allocation(const Matrix& bids, const MechanismParams& params);

/// Weighted variant: agent i's own share scales with w_i and the dummy splits
/// in proportion to weights. Equal weights reproduce fractional_allocation
/// bit for bit.
FractionalAllocation weighted_fractional_allocation(const Matrix& bids,
                                                    std::span<const double> weights,
                                                    const MechanismParams& params);

/// Each item goes to agent i with probability x_ij; item j draws from the
/// counter stream (seed, j).
IntegralAllocation randomized_rounding(const FractionalAllocation& x, std::uint64_t seed);

struct PrdResult {
  BidProfile bids;
  FractionalAllocation x;
  IntegralAllocation allocation;
};

/// normalize -> bids -> (weighted) fractional allocation -> rounding.
PrdResult run_prd(const Instance& inst, const MechanismParams& params, std::uint64_t seed);

/// Bids and fractional allocation only; the rounding-free part of run_prd.
struct FractionalResult {
  BidProfile bids;
  FractionalAllocation x;
};
FractionalResult run_fractional(const Instance& inst, const MechanismParams& params);

/// Largest violation of the KKT sign conditions for one agent's bids:
/// interior bids need vbar/b == 1/s, floor bids vbar/b <= 1/s, cap bids
/// vbar/b >= 1/s. Zero means a certified optimum.
struct KktReport {
  double max_violation = 0.0;
  std::size_t interior = 0;
  std::size_t at_floor = 0;
  std::size_t at_cap = 0;
};
KktReport kkt_certificate(std::span<const double> vbar, std::span<const double> bids,
                          double scale_factor, const MechanismParams& params);

}  // namespace prd::mech
