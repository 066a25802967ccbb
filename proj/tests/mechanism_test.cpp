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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "prd/distributions.hpp"
#include "prd/mechanism.hpp"
#include "prd/rng.hpp"

namespace prd::mech {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no prd::Error thrown";
  return ErrorCode::kIoError;
}

TEST(ProportionalAllotment, TwoByTwoExample) {
  const auto x = proportional_allotment(Matrix::from_rows({{0.2, 0.8}, {0.4, 0.6}}));
  EXPECT_NEAR(x.x(0, 0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(x.x(0, 1), 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(x.x(1, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(x.x(1, 1), 3.0 / 7.0, 1e-12);
}

TEST(ProportionalAllotment, EqualAndZeroBids) {
  const auto eq = proportional_allotment(Matrix(3, 4, 0.25));
  for (double v : eq.x.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto z = proportional_allotment(Matrix::from_rows({{0.0, 0.5}, {0.7, 0.5}}));
  EXPECT_EQ(z.x(0, 0), 0.0);
  EXPECT_EQ(code_of([] { proportional_allotment(Matrix(2, 2, 0.0)); }), ErrorCode::kZeroColumn);
}

TEST(AllotmentWithDummy, TwoByTwoExample) {
  const auto r = proportional_allotment_with_dummy(Matrix::from_rows({{0.2, 0.8}, {0.4, 0.6}}));
  const double interim[3][2] = {{0.1, 0.4}, {0.2, 0.3}, {0.7, 0.3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(r.interim(i, j), interim[i][j], 1e-12);
  EXPECT_NEAR(r.final(0, 0), 0.45, 1e-12);
  EXPECT_NEAR(r.final(0, 1), 0.55, 1e-12);
  EXPECT_NEAR(r.final(1, 0), 0.55, 1e-12);
  EXPECT_NEAR(r.final(1, 1), 0.45, 1e-12);
}

TEST(AllotmentWithDummy, SymmetricAndZeroDummy) {
  const auto half = proportional_allotment_with_dummy(Matrix(2, 3, 0.5));
  for (double v : half.final.data()) EXPECT_NEAR(v, 0.5, 1e-15);
  const auto full = proportional_allotment_with_dummy(Matrix(2, 2, 1.0));
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(full.interim(2, j), 0.0);
    EXPECT_EQ(full.final(0, j), full.interim(0, j));
  }
  EXPECT_EQ(code_of([] { proportional_allotment_with_dummy(Matrix(2, 1, 1.5)); }),
            ErrorCode::kBidAboveOne);
}

TEST(BuildH, InteriorRegionIsAffine) {
  const auto p = derive_params(0.04, 0.5, 0.5, 4);
  const std::vector<double> v{0.8, 0.2, 0.0, 0.0};
  const auto h = build_h(v, p);
  // Both positive items are strictly inside the box for s in (0.05, 1.25).
  for (double s : {0.06, 0.5, 0.98, 1.2}) EXPECT_NEAR(h(s), 0.02 + s, 1e-12);
  EXPECT_NEAR(h(0.0), 4 * p.b_min, 1e-15);
}

TEST(BuildH, UniformValuesCrossAtOne) {
  const auto p = derive_params(0.04, 0.5, 0.5, 8);
  const std::vector<double> v(8, 1.0 / 8.0);
  const auto h = build_h(v, p);
  EXPECT_NEAR(h(1.0), 1.0, 1e-12);
  const auto s = solve_scale_factor(h);
  ASSERT_TRUE(s);
  EXPECT_NEAR(*s, 1.0, 1e-12);
}

TEST(BuildH, SingleContributorHasTwoBreakpoints) {
  const auto p = derive_params(0.1, 0.5, 0.5, 5);
  const std::vector<double> v{0, 0, 1, 0, 0};
  const auto h = build_h(v, p);
  // Breakpoints: 0, where the item leaves the floor, where it hits the cap.
  EXPECT_EQ(h.segments(), 3u);
  EXPECT_EQ(h.slopes.back(), 0.0);
}

TEST(SolveScale, HandExample) {
  const auto p = derive_params(0.04, 0.5, 0.5, 4);
  const std::vector<double> v{0.8, 0.2, 0.0, 0.0};
  const auto s = solve_scale_factor(build_h(v, p));
  ASSERT_TRUE(s);
  EXPECT_NEAR(*s, 0.98, 1e-12);
  const auto row = construct_bids(v, p);
  EXPECT_FALSE(row.fallback);
  const double want[] = {0.784, 0.196, 0.01, 0.01};
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(row.bids[j], want[j], 1e-12);
}

TEST(SolveScale, NoCrossingAndFallback) {
  const auto p = derive_params(0.1, 0.9, 0.5, 10);
  std::vector<double> v(10, 0.0);
  v[0] = 1.0;
  const auto h = build_h(v, p);
  EXPECT_NEAR(h.max_value(), 2.0 / 9.0 + 0.09, 1e-12);
  EXPECT_FALSE(solve_scale_factor(h));

  const auto row = construct_bids(v, p);
  EXPECT_TRUE(row.fallback);
  EXPECT_TRUE(std::isnan(row.scale_factor));
  EXPECT_NEAR(row.bids[0], 2.0 / 9.0, 1e-12);
  EXPECT_NEAR(row.bids[0], 0.2222, 1e-4);
  for (int j = 1; j < 10; ++j) {
    EXPECT_NEAR(row.bids[j], (1.0 - 2.0 / 9.0) / 9.0, 1e-12);
    EXPECT_NEAR(row.bids[j], 0.08642, 1e-5);
    EXPECT_GE(row.bids[j], p.b_min);
    EXPECT_LE(row.bids[j], p.b_max);
  }
}

TEST(ConstructBids, UniformValuesBidThemselves) {
  const auto p = derive_params(0.04, 0.5, 0.5, 6);
  const std::vector<double> v(6, 1.0 / 6.0);
  const auto row = construct_bids(v, p);
  for (double b : row.bids) EXPECT_NEAR(b, 1.0 / 6.0, 1e-15);
}

// Brute-force oracle for the scale factor: bisection on h directly.
double bisect_scale(std::span<const double> v, const MechanismParams& p) {
  auto h = [&](double s) {
    double t = 0;
    for (double x : v) t += std::clamp(s * x, p.b_min, p.b_max);
    return t;
  };
  double lo = 0, hi = 1;
  while (h(hi) < 1) hi *= 2;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < 1 ? lo : hi) = mid;
  }
  return hi;
}

TEST(ConstructBids, RandomRowsAgainstBisection) {
  CounterRng rng(2024, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng() % 60;
    const auto p = derive_params(0.01 + 0.2 * rng.uniform01(), 0.2 + 0.8 * rng.uniform01(), 0.5, m);
    std::vector<double> v(m);
    double s = 0;
    for (double& x : v) {
      x = rng.uniform01() < 0.3 ? 0.0 : rng.uniform01();
      s += x;
    }
    if (s == 0) continue;
    for (double& x : v) x /= s;
    const auto h = build_h(v, p);
    // nondecreasing, continuous at breakpoints, bounded segment count
    std::size_t nnz = std::count_if(v.begin(), v.end(), [](double x) { return x > 0; });
    EXPECT_LE(h.segments(), 2 * nnz + 1);
    for (std::size_t k = 0; k < h.slopes.size(); ++k) EXPECT_GE(h.slopes[k], 0.0);
    for (std::size_t k = 1; k < h.segments(); ++k) {
      const double left = h.values[k - 1] + h.slopes[k - 1] * (h.breakpoints[k] - h.breakpoints[k - 1]);
      EXPECT_NEAR(left, h.values[k], 1e-12);
    }
    const auto row = construct_bids(v, p);
    double total = 0;
    for (double b : row.bids) {
      EXPECT_GE(b, p.b_min * (1 - 1e-12));
      EXPECT_LE(b, p.b_max * (1 + 1e-12));
      total += b;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    if (!row.fallback) {
      EXPECT_NEAR(row.scale_factor, bisect_scale(v, p), 1e-9 * std::max(1.0, row.scale_factor));
      EXPECT_LE(kkt_certificate(v, row.bids, row.scale_factor, p).max_violation, 1e-9);
    }
  }
}

TEST(FractionalAllocation, IdenticalBidsSplitEvenly) {
  const auto p = derive_params(0.1, 0.5, 0.5, 3);
  const auto x = fractional_allocation(Matrix::from_rows({{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5},
                                                          {0.2, 0.3, 0.5}}), p);
  for (double v : x.x.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(FractionalAllocation, HandExample) {
  const auto p = derive_params(0.1, 0.5, 0.5, 2);
  const auto x = fractional_allocation(Matrix::from_rows({{0.3, 0.7}, {0.6, 0.4}}), p);
  // Independent evaluation of the closed form with c = -ln 0.05, C = ln 40.
  const double c = -std::log(0.05), C = std::log(40.0);
  const double a1 = std::log(0.3) + c, a2 = std::log(0.6) + c;
  const double x11 = a1 / (2 * C) + (2 * C - a1 - a2) / (4 * C);
  EXPECT_NEAR(x.x(0, 0), x11, 1e-12);
  EXPECT_NEAR(x.x(0, 0), 0.4531, 1e-4);
  EXPECT_NEAR(x.x(1, 0), 0.5469, 1e-4);
  EXPECT_NEAR(x.x(0, 0) + x.x(1, 0), 1.0, 1e-12);
}

TEST(FractionalAllocation, FloorAgainstCap) {
  const auto p = derive_params(0.1, 0.5, 0.5, 2);
  Matrix b = Matrix::from_rows({{p.b_min, 1 - p.b_min}, {p.b_max, 1 - p.b_max}});
  b(1, 1) = p.b_min;  // keep the column inside the box
  const auto x = fractional_allocation(b, p);
  EXPECT_NEAR(x.x(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(x.x(1, 0), 0.75, 1e-12);
}

TEST(FractionalAllocation, OutOfBoxRejected) {
  const auto p = derive_params(0.1, 0.5, 0.5, 2);
  EXPECT_EQ(code_of([&] { fractional_allocation(Matrix::from_rows({{0.001, 0.999}}), p); }),
            ErrorCode::kBidOutOfRange);
}

TEST(WeightedAllocation, EqualWeightsBitIdentical) {
  const auto inst = dist::sample_instance(dist::uniform(), 4, 50, 3);
  const auto p = derive_params(0.02, 0.5, 0.5, 50);
  const auto bids = construct_bid_profile(normalize(inst.values).vbar, p);
  const std::vector<double> w(4, 2.5);
  EXPECT_EQ(weighted_fractional_allocation(bids.b, w, p).x, fractional_allocation(bids.b, p).x);
}

TEST(WeightedAllocation, SingleAgentGetsEverything) {
  const auto p = derive_params(0.1, 0.5, 0.5, 3);
  const auto x = weighted_fractional_allocation(Matrix::from_rows({{0.2, 0.3, 0.5}}),
                                                std::vector<double>{3.0}, p);
  for (double v : x.x.data()) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(WeightedAllocation, IdenticalBidsFollowWeights) {
  const auto p = derive_params(0.1, 0.5, 0.5, 2);
  const auto x = weighted_fractional_allocation(Matrix::from_rows({{0.4, 0.6}, {0.4, 0.6}}),
                                                std::vector<double>{1.0, 3.0}, p);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(x.x(0, j), 0.25, 1e-12);
    EXPECT_NEAR(x.x(1, j), 0.75, 1e-12);
  }
  EXPECT_EQ(code_of([&] {
              weighted_fractional_allocation(Matrix::from_rows({{0.4, 0.6}, {0.4, 0.6}}),
                                             std::vector<double>{1.0, 0.0}, p);
            }),
            ErrorCode::kNonpositiveWeight);
}

TEST(Rounding, DegenerateColumn) {
  FractionalAllocation x{Matrix::from_rows({{0, 0, 0}, {1, 1, 1}})};
  const auto a = randomized_rounding(x, 5);
  for (std::size_t o : a.owner) EXPECT_EQ(o, 1u);
}

TEST(Rounding, FairCoinFrequency) {
  FractionalAllocation x{Matrix::from_rows({{0.5}, {0.5}})};
  std::size_t first = 0;
  for (std::uint64_t s = 0; s < 100000; ++s) first += randomized_rounding(x, s).owner[0] == 0;
  EXPECT_NEAR(first / 100000.0, 0.5, 0.006);
}

TEST(Rounding, DeterministicAndChecked) {
  const auto inst = dist::sample_instance(dist::uniform(), 3, 40, 8);
  const auto p = derive_params(0.02, 0.5, 0.5, 40);
  const auto r = run_fractional(inst, p);
  EXPECT_EQ(randomized_rounding(r.x, 77).owner, randomized_rounding(r.x, 77).owner);
  FractionalAllocation bad{Matrix::from_rows({{0.5}, {0.4}})};
  EXPECT_EQ(code_of([&] { randomized_rounding(bad, 1); }), ErrorCode::kColumnNotNormalized);
}

TEST(RunPrd, SingleAgent) {
  const auto inst = Instance::from_values({{0.3, 0.0, 0.9}});
  const auto res = run_prd(inst, derive_params(0.1, 0.5, 0.5, 3), 4);
  for (std::size_t o : res.allocation.owner) EXPECT_EQ(o, 0u);
}

TEST(RunPrd, IdenticalAgentsHalfEach) {
  const auto inst = Instance::from_values({{0.3, 0.6}, {0.3, 0.6}});
  const auto res = run_prd(inst, derive_params(0.1, 0.5, 0.5, 2), 4);
  for (double v : res.x.x.data()) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(RunPrd, ColumnSumsAndShareCap) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 6;
    const auto inst = dist::sample_instance(dist::beta(0.7, 1.3), n, 80, seed);
    const auto res = run_prd(inst, derive_params(0.02, 0.3, 0.5, 80), seed);
    for (double s : column_sums(res.x.x)) EXPECT_NEAR(s, 1.0, 1e-9);
    for (double v : res.x.x.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 2.0 / n + 1e-9);
    }
  }
}

TEST(RunPrd, GoldenSnapshot) {
  const auto inst = dist::sample_instance(dist::uniform(), 3, 120, 20260101);
  const auto p = derive_params(2.0 / 75.0, 0.5, 2.0 / 3.0, 120);
  const auto res = run_prd(inst, p, 99);
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t o : res.allocation.owner) ++counts[o];
  // Frozen from the first run of this configuration.
  EXPECT_EQ(counts, (std::vector<std::size_t>{43, 45, 32}));
  EXPECT_NEAR(res.x.x(0, 0), 0.39601072863944442, 1e-12);
  EXPECT_NEAR(res.bids.scale_factors[1], 0.99999999999999989, 1e-12);
  const std::vector<std::size_t> head(res.allocation.owner.begin(),
                                      res.allocation.owner.begin() + 12);
  EXPECT_EQ(head, (std::vector<std::size_t>{0, 2, 0, 0, 2, 2, 1, 1, 0, 0, 2, 2}));
}

TEST(RunPrd, ParamsMustMatchItems) {
  const auto inst = Instance::from_values({{0.3, 0.6}, {0.3, 0.6}});
  EXPECT_THROW(run_prd(inst, derive_params(0.1, 0.5, 0.5, 3), 1), Error);
}

}  // namespace
}  // namespace prd::mech
