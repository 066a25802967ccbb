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

#include "prd/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "prd/rng.hpp"

namespace prd::mech {

namespace {

constexpr double kBreakpointMergeTol = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double bid_at(double s, double v, const MechanismParams& p) {
  return std::clamp(s * v, p.b_min, p.b_max);
}

double bid_sum(double s, std::span<const double> vbar, const MechanismParams& p) {
  double sum = 0.0;
  for (double v : vbar) sum += bid_at(s, v, p);
  return sum;
}

double interior_slope(double s, std::span<const double> vbar, const MechanismParams& p) {
  double slope = 0.0;
  for (double v : vbar) {
    const double t = s * v;
    if (t > p.b_min && t < p.b_max) slope += v;
  }
  return slope;
}

void check_bids_in_box(const Matrix& bids, const MechanismParams& p) {
  if (bids.cols() != p.m) {
    throw Error(ErrorCode::kBidOutOfRange, "bid matrix width differs from params.m");
  }
  const double lo = p.b_min * (1.0 - kIdentityTol);
  const double hi = p.b_max * (1.0 + kIdentityTol);
  for (double b : bids.data()) {
    if (!(b >= lo && b <= hi)) {
      throw Error(ErrorCode::kBidOutOfRange,
                  "bid " + std::to_string(b) + " outside [b_min, b_max]");
    }
  }
}

// ln(b) + c, with bids at the floor mapping to exactly zero.
double log_share(double b, const MechanismParams& p) {
  return std::max(0.0, std::log(b) + p.c);
}

}  // namespace

FractionalAllocation proportional_allotment(const Matrix& bids) {
  FractionalAllocation out{Matrix(bids.rows(), bids.cols())};
  const auto sums = column_sums(bids);
  for (std::size_t j = 0; j < bids.cols(); ++j) {
    if (!(sums[j] > 0.0)) {
      throw Error(ErrorCode::kZeroColumn, "item " + std::to_string(j) + " has no positive bid");
    }
    for (std::size_t i = 0; i < bids.rows(); ++i) {
      if (bids(i, j) < 0.0) throw Error(ErrorCode::kInvalidParam, "negative bid");
      out.x(i, j) = bids(i, j) / sums[j];
    }
  }
  return out;
}

AllotmentWithDummy proportional_allotment_with_dummy(const Matrix& bids) {
  const std::size_t n = bids.rows();
  const std::size_t m = bids.cols();
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "no agents");
  for (double b : bids.data()) {
    if (b > 1.0) throw Error(ErrorCode::kBidAboveOne, "bid above one");
    if (b < 0.0) throw Error(ErrorCode::kInvalidParam, "negative bid");
  }
  const double nd = static_cast<double>(n);
  AllotmentWithDummy out{Matrix(n + 1, m), Matrix(n, m)};
  const auto sums = column_sums(bids);
  for (std::size_t j = 0; j < m; ++j) {
    const double dummy_bid = nd - sums[j];
    const double dummy_share = dummy_bid / nd;
    out.interim(n, j) = dummy_share;
    for (std::size_t i = 0; i < n; ++i) {
      out.interim(i, j) = bids(i, j) / nd;
      out.final(i, j) = out.interim(i, j) + dummy_share / nd;
    }
  }
  return out;
}

double PiecewiseLinearH::operator()(double s) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
  const std::size_t k = it == breakpoints.begin() ? 0 : static_cast<std::size_t>(it - breakpoints.begin()) - 1;
  return values[k] + slopes[k] * (s - breakpoints[k]);
}

PiecewiseLinearH build_h(std::span<const double> vbar, const MechanismParams& params) {
  // Each positive value enters the interior at b_min/v and saturates at b_max/v.
  std::vector<std::pair<double, double>> events;
  events.reserve(2 * vbar.size());
  for (double v : vbar) {
    if (v > 0.0) {
      events.emplace_back(params.b_min / v, v);
      events.emplace_back(params.b_max / v, -v);
    }
  }
  std::sort(events.begin(), events.end());

  PiecewiseLinearH h;
  h.breakpoints.push_back(0.0);
  h.values.push_back(static_cast<double>(vbar.size()) * params.b_min);
  h.slopes.push_back(0.0);

  double slope = 0.0;
  std::size_t remaining = events.size();
  for (const auto& [s, ds] : events) {
    const double last = h.breakpoints.back();
    if (s - last > kBreakpointMergeTol * std::max(1.0, s)) {
      h.values.push_back(h.values.back() + h.slopes.back() * (s - last));
      h.breakpoints.push_back(s);
      h.slopes.push_back(slope);
    }
    slope += ds;
    --remaining;
    // Every +v is matched by a -v, so the final slope is exactly zero.
    h.slopes.back() = remaining == 0 ? 0.0 : std::max(0.0, slope);
  }
  return h;
}

std::optional<double> solve_scale_factor(const PiecewiseLinearH& h) {
  constexpr double kReachTol = 1e-12;
  if (h.max_value() < 1.0 - kReachTol) return std::nullopt;
  for (std::size_t k = 0; k < h.segments(); ++k) {
    if (h.values[k] >= 1.0) return h.breakpoints[k];
    if (h.slopes[k] <= 0.0) continue;
    const double s = h.breakpoints[k] + (1.0 - h.values[k]) / h.slopes[k];
    if (k + 1 == h.segments() || s <= h.breakpoints[k + 1]) return s;
  }
  // max h sits within rounding of one: the crossing is where h flattens out.
  return h.breakpoints.back();
}

BidRow construct_bids(std::span<const double> vbar, const MechanismParams& params) {
  if (vbar.size() != params.m) {
    throw Error(ErrorCode::kInvalidParam, "valuation length differs from params.m");
  }
  BidRow row;
  row.bids.resize(vbar.size());

  const auto h = build_h(vbar, params);
  if (const auto s = solve_scale_factor(h)) {
    double scale = *s;
    // One Newton step on the exact bid sum removes drift accumulated in h.
    const double slope = interior_slope(scale, vbar, params);
    if (slope > 0.0) {
      const double polished = scale + (1.0 - bid_sum(scale, vbar, params)) / slope;
      if (std::abs(bid_sum(polished, vbar, params) - 1.0) <
          std::abs(bid_sum(scale, vbar, params) - 1.0)) {
        scale = polished;
      }
    }
    for (std::size_t j = 0; j < vbar.size(); ++j) row.bids[j] = bid_at(scale, vbar[j], params);
    row.scale_factor = scale;
    row.fallback = false;
    return row;
  }

  std::size_t zeros = 0;
  for (double v : vbar) zeros += v > 0.0 ? 0 : 1;
  const double residual =
      1.0 - static_cast<double>(vbar.size() - zeros) * params.b_max;
  const double spread = zeros == 0 ? kNaN : residual / static_cast<double>(zeros);
  if (zeros == 0 || spread > params.b_max * (1.0 + kIdentityTol) ||
      spread < params.b_min * (1.0 - kIdentityTol)) {
    throw Error(ErrorCode::kInfeasibleBudget, "no bid vector in the box sums to one");
  }
  const double fill = std::clamp(spread, params.b_min, params.b_max);
  for (std::size_t j = 0; j < vbar.size(); ++j) {
    row.bids[j] = vbar[j] > 0.0 ? params.b_max : fill;
  }
  row.scale_factor = kNaN;
  row.fallback = true;
  return row;
}

BidProfile construct_bid_profile(const Matrix& vbar, const MechanismParams& params) {
  BidProfile out{Matrix(vbar.rows(), vbar.cols()), std::vector<double>(vbar.rows()),
                 std::vector<bool>(vbar.rows())};
  for (std::size_t i = 0; i < vbar.rows(); ++i) {
    auto row = construct_bids(vbar.row(i), params);
    std::copy(row.bids.begin(), row.bids.end(), out.b.row(i).begin());
    out.scale_factors[i] = row.scale_factor;
    out.fallback[i] = row.fallback;
  }
  return out;
}

FractionalAllocation fractional_allocation(const Matrix& bids, const MechanismParams& params) {
  check_bids_in_box(bids, params);
  const std::size_t n = bids.rows();
  const double nd = static_cast<double>(n);
  const double nC = nd * params.C;
  FractionalAllocation out{Matrix(n, bids.cols())};
  for (std::size_t j = 0; j < bids.cols(); ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += log_share(bids(i, j), params);
    const double dummy = (nC - total) / (nd * nC);
    for (std::size_t i = 0; i < n; ++i) {
      out.x(i, j) = log_share(bids(i, j), params) / nC + dummy;
    }
  }
  return out;
}

FractionalAllocation weighted_fractional_allocation(const Matrix& bids,
                                                    std::span<const double> weights,
                                                    const MechanismParams& params) {
  if (weights.size() != bids.rows()) {
    throw Error(ErrorCode::kInvalidParam, "one weight per agent required");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::kNonpositiveWeight, "weights must be positive");
  }
  if (std::adjacent_find(weights.begin(), weights.end(), std::not_equal_to<>()) ==
      weights.end()) {
    return fractional_allocation(bids, params);
  }
  check_bids_in_box(bids, params);

  double W = 0.0;
  for (double w : weights) W += w;
  const double WC = W * params.C;
  FractionalAllocation out{Matrix(bids.rows(), bids.cols())};
  for (std::size_t j = 0; j < bids.cols(); ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < bids.rows(); ++i) {
      total += weights[i] * log_share(bids(i, j), params);
    }
    const double dummy = (WC - total) / WC;
    for (std::size_t i = 0; i < bids.rows(); ++i) {
      out.x(i, j) = weights[i] * log_share(bids(i, j), params) / WC + weights[i] / W * dummy;
    }
  }
  return out;
}

IntegralAllocation randomized_rounding(const FractionalAllocation& x, std::uint64_t seed) {
  const std::size_t n = x.x.rows();
  IntegralAllocation out{n, std::vector<std::size_t>(x.x.cols())};
  const auto sums = column_sums(x.x);
  for (std::size_t j = 0; j < x.x.cols(); ++j) {
    if (std::abs(sums[j] - 1.0) > kSumTol) {
      throw Error(ErrorCode::kColumnNotNormalized,
                  "column " + std::to_string(j) + " sums to " + std::to_string(sums[j]));
    }
    std::size_t last_positive = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (x.x(i, j) < -kIdentityTol) {
        throw Error(ErrorCode::kColumnNotNormalized, "negative share");
      }
      if (x.x(i, j) > 0.0) last_positive = i;
    }
    CounterRng rng(seed, j);
    const double u = rng.uniform01() * sums[j];
    double acc = 0.0;
    std::size_t chosen = last_positive;
    for (std::size_t i = 0; i < n; ++i) {
      acc += std::max(0.0, x.x(i, j));
      if (u < acc) {
        chosen = i;
        break;
      }
    }
    out.owner[j] = chosen;
  }
  return out;
}

FractionalResult run_fractional(const Instance& inst, const MechanismParams& params) {
  require_valid(inst);
  if (params.m != inst.m) {
    throw Error(ErrorCode::kInvalidParam, "params.m differs from the instance item count");
  }
  const auto norm = normalize(inst.values);
  FractionalResult out;
  out.bids = construct_bid_profile(norm.vbar, params);
  out.x = inst.weights ? weighted_fractional_allocation(out.bids.b, *inst.weights, params)
                       : fractional_allocation(out.bids.b, params);
  return out;
}

PrdResult run_prd(const Instance& inst, const MechanismParams& params, std::uint64_t seed) {
  auto frac = run_fractional(inst, params);
  PrdResult out{std::move(frac.bids), std::move(frac.x), {}};
  out.allocation = randomized_rounding(out.x, seed);
  return out;
}

KktReport kkt_certificate(std::span<const double> vbar, std::span<const double> bids,
                          double scale_factor, const MechanismParams& params) {
  KktReport rep;
  const double target = 1.0 / scale_factor;
  for (std::size_t j = 0; j < vbar.size(); ++j) {
    const double ratio = vbar[j] / bids[j];
    double violation = 0.0;
    if (bids[j] <= params.b_min * (1.0 + kIdentityTol)) {
      ++rep.at_floor;
      violation = ratio - target;
    } else if (bids[j] >= params.b_max * (1.0 - kIdentityTol)) {
      ++rep.at_cap;
      violation = target - ratio;
    } else {
      ++rep.interior;
      violation = std::abs(ratio - target);
    }
    rep.max_violation = std::max(rep.max_violation, violation);
  }
  return rep;
}

}  // namespace prd::mech
