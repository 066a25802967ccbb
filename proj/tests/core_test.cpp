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

#include <cmath>

#include <gtest/gtest.h>

#include "prd/core.hpp"
#include "prd/rng.hpp"

namespace prd {
namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no prd::Error thrown";
  return ErrorCode::kIoError;
}

TEST(Normalize, EqualEntriesSplitEvenly) {
  const auto n = normalize(Matrix::from_rows({{2, 2}}));
  EXPECT_DOUBLE_EQ(n.vbar(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(n.vbar(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(n.row_sums[0], 4.0);
}

TEST(Normalize, ScalesByRowSum) {
  const auto n = normalize(Matrix::from_rows({{0.4, 0.1, 0, 0}}));
  EXPECT_NEAR(n.vbar(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(n.vbar(0, 1), 0.2, 1e-15);
  EXPECT_EQ(n.vbar(0, 2), 0.0);
}

TEST(Normalize, ZeroRowRejected) {
  EXPECT_EQ(code_of([] { normalize(Matrix::from_rows({{0, 0}})); }), ErrorCode::kZeroRow);
}

TEST(Normalize, Idempotent) {
  CounterRng rng(11, 0);
  Matrix v(4, 37);
  for (std::size_t i = 0; i < 4; ++i)
    for (double& x : v.row(i)) x = rng.uniform01();
  const auto once = normalize(v);
  const auto twice = normalize(once.vbar);
  for (std::size_t k = 0; k < v.data().size(); ++k) {
    EXPECT_NEAR(once.vbar.data()[k], twice.vbar.data()[k], 1e-12);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (double x : once.vbar.row(i)) s += x;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(DeriveParams, HundredItems) {
  const auto p = derive_params(0.04, 0.5, 0.5, 100);
  EXPECT_NEAR(p.c, -std::log(0.0004), 1e-12);
  EXPECT_NEAR(p.c, 7.8240, 1e-4);
  EXPECT_NEAR(p.C, std::log(100.0), 1e-12);
  EXPECT_NEAR(p.C, 4.6052, 1e-4);
}

TEST(DeriveParams, TwoItems) {
  const auto p = derive_params(0.1, 0.5, 0.5, 2);
  EXPECT_NEAR(p.b_min, 0.05, 1e-15);
  EXPECT_NEAR(p.b_max, 2.0, 1e-15);
  EXPECT_NEAR(p.C, std::log(40.0), 1e-12);
  EXPECT_NEAR(p.C, 3.6889, 1e-4);
}

TEST(DeriveParams, RangeChecks) {
  EXPECT_EQ(code_of([] { derive_params(1.5, 0.5, 0.5, 10); }), ErrorCode::kInvalidParam);
  EXPECT_EQ(code_of([] { derive_params(0.1, 0.0, 0.5, 10); }), ErrorCode::kInvalidParam);
  EXPECT_EQ(code_of([] { derive_params(0.1, 1.2, 0.5, 10); }), ErrorCode::kInvalidParam);
  EXPECT_EQ(code_of([] { derive_params(0.1, 0.5, 1.0, 10); }), ErrorCode::kInvalidParam);
  EXPECT_EQ(code_of([] { derive_params(0.1, 0.5, 0.5, 0); }), ErrorCode::kInvalidParam);
}

TEST(DeriveParams, Identities) {
  for (double l : {0.01, 0.04, 0.3}) {
    for (double mu : {0.1, 0.5, 1.0}) {
      for (std::size_t m : {1u, 7u, 1000u}) {
        const auto p = derive_params(l, mu, 0.5, m);
        EXPECT_LT(p.b_min, 1.0 / m);
        EXPECT_GT(p.b_max, 1.0 / m);
        EXPECT_EQ(p.c, -std::log(p.b_min));
        EXPECT_NEAR(p.C, std::log(p.b_max / p.b_min), 1e-12);
        EXPECT_NEAR(p.C, std::log(2.0 / (mu * l)), 1e-12);
      }
    }
  }
}

TEST(DeriveParams, GroupModeScalesFloor) {
  const auto p = derive_params(0.04, 0.5, 0.5, 100, 4.0);
  EXPECT_NEAR(p.b_min, 0.04 / 400.0, 1e-18);
  EXPECT_NEAR(p.C, std::log(2.0 / (0.5 * 0.04)) + std::log(4.0), 1e-12);
}

TEST(Validate, ValidInstanceHasNoIssues) {
  EXPECT_TRUE(validate_instance(Instance::from_values({{0.2, 0.8}, {0.5, 0.5}})).empty());
}

TEST(Validate, RangeViolationListed) {
  const auto issues = validate_instance(Instance::from_values({{1.5, 0.2}, {0.1, 0.1}}));
  ASSERT_FALSE(issues.empty());
  EXPECT_EQ(issues[0].kind, ValidationIssue::Kind::kRange);
}

TEST(Validate, ZeroRowListed) {
  const auto issues = validate_instance(Instance::from_values({{0, 0}, {0.1, 0.1}}));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, ValidationIssue::Kind::kZeroRow);
}

TEST(Validate, WeightsAndGroups) {
  auto inst = Instance::from_values({{0.5, 0.5}, {0.1, 0.9}});
  inst.weights = std::vector<double>{1.0, 0.0};
  inst.groups = std::vector<std::size_t>{0, 2};
  const auto issues = validate_instance(inst);
  ASSERT_EQ(issues.size(), 2u);
  EXPECT_EQ(issues[0].kind, ValidationIssue::Kind::kWeight);
  EXPECT_EQ(issues[1].kind, ValidationIssue::Kind::kGroup);
  EXPECT_EQ(code_of([&] { require_valid(inst); }), ErrorCode::kInvalidInstance);
}

TEST(Matrix, RaggedRowsRejected) {
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), Error);
}

TEST(IntegralAllocation, Bundles) {
  IntegralAllocation a{3, {2, 0, 2, 1}};
  EXPECT_EQ(a.bundle(2), (std::vector<std::size_t>{0, 2}));
  const auto all = a.bundles();
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0], (std::vector<std::size_t>{1}));
}

TEST(CounterRng, StreamsReproduceAndDiffer) {
  CounterRng a(5, 1), b(5, 1), c(5, 2);
  for (int k = 0; k < 100; ++k) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
  CounterRng u(9);
  for (int k = 0; k < 1000; ++k) {
    const double x = u.uniform01();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

}  // namespace
}  // namespace prd
