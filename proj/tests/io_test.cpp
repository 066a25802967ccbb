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
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "prd/io.hpp"

namespace prd::io {
namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no prd::Error thrown";
  return ErrorCode::kInvalidParam;
}

TEST(InstanceJson, RoundTrip) {
  auto inst = dist::sample_instance(dist::uniform(), 3, 5, 1);
  inst.weights = std::vector<double>{1.0, 2.0, 0.5};
  inst.groups = std::vector<std::size_t>{0, 1, 1};
  const auto back = instance_from_json(Json::parse(to_json(inst).dump()));
  EXPECT_EQ(back.values, inst.values);
  EXPECT_EQ(back.weights, inst.weights);
  EXPECT_EQ(back.groups, inst.groups);
}

TEST(InstanceJson, Rejections) {
  EXPECT_EQ(code_of([] { instance_from_json(Json::parse(R"({"values":[[1]],"extra":1})")); }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { instance_from_json(Json::parse(R"({"values":[[1,2]],"m":3})")); }),
            ErrorCode::kInvalidInstance);
  EXPECT_EQ(code_of([] { instance_from_json(Json::parse(R"({"values":"x"})")); }),
            ErrorCode::kParseError);
}

TEST(SpecJson, RoundTripAllKinds) {
  const dist::DistributionSpec specs[] = {dist::uniform(0.1, 0.9), dist::beta(2, 3),
                                          dist::atomic({0.2, 0.8}, {0.4, 0.6}),
                                          dist::common_shock(0.3, dist::beta(1, 2))};
  for (const auto& s : specs) {
    const auto j = to_json(s);
    EXPECT_EQ(to_json(spec_from_json(j)), j);
  }
  EXPECT_EQ(code_of([] { spec_from_json(Json::parse(R"({"kind":"gamma"})")); }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { spec_from_json(Json::parse(R"({"kind":"beta","a":1,"b":1,"c":2})")); }),
            ErrorCode::kParseError);
}

TEST(ConfigJson, RoundTripAndUnknownField) {
  const auto cfg = config_from_json(Json::parse(R"({
    "distribution": {"kind": "beta", "a": 2, "b": 2},
    "n": 4, "m": [20, 40], "trials": 7, "seed": 9, "mode": "groups",
    "groups": [0, 0, 1, 1], "epsilon": 0.1, "workers": 2})"));
  EXPECT_EQ(cfg.n, 4u);
  EXPECT_EQ(cfg.m_values, (std::vector<std::size_t>{20, 40}));
  EXPECT_EQ(cfg.mode, harness::Mode::kGroups);
  EXPECT_EQ(cfg.overrides.epsilon, 0.1);
  EXPECT_EQ(to_json(config_from_json(to_json(cfg))), to_json(cfg));
  EXPECT_EQ(code_of([] { config_from_json(Json::parse(R"({"n": 3, "trails": 5})")); }),
            ErrorCode::kParseError);
  EXPECT_EQ(config_from_json(Json::parse(R"({"m": 50})")).m_values,
            (std::vector<std::size_t>{50}));
}

TEST(TypesJson, ReadAndWrite) {
  const auto ti = types_from_json(
      Json::parse(R"({"d":2,"t":2,"n":[1,1],"m":[236,236],"values":[[1,0],[0,1]]})"));
  EXPECT_EQ(ti.agents_per_type, (types::Counts{1, 1}));
  EXPECT_FALSE(ti.nu);
  const auto out = to_json(types::allocate_types(ti));
  ASSERT_TRUE(out.contains("per_agent"));
  EXPECT_EQ(out["per_agent"].size(), 2u);
  EXPECT_EQ(code_of([] { types_from_json(Json::parse(R"({"d":1,"t":1,"n":[1],"m":[1],"values":[[1]],"r":1})")); }),
            ErrorCode::kParseError);
}

TEST(ResultJson, FallbackScaleFactorsAreNull) {
  mech::PrdResult res;
  res.bids.b = Matrix::from_rows({{0.5, 0.5}});
  res.bids.scale_factors = {std::nan("")};
  res.bids.fallback = {true};
  res.x.x = Matrix::from_rows({{1, 1}});
  res.allocation = IntegralAllocation{1, {0, 0}};
  const auto j = to_json(res);
  EXPECT_TRUE(j["scale_factors"][0].is_null());
  EXPECT_EQ(j["fallback"][0], true);
}

TEST(Files, ReadWriteAndErrors) {
  const auto path = std::filesystem::temp_directory_path() / "prd_io_test.json";
  write_json_file(path.string(), Json{{"a", 1}});
  EXPECT_EQ(read_json_file(path.string())["a"], 1);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  EXPECT_EQ(code_of([&] { read_json_file(path.string()); }), ErrorCode::kParseError);
  std::filesystem::remove(path);
  EXPECT_EQ(code_of([&] { read_json_file(path.string()); }), ErrorCode::kIoError);
  EXPECT_EQ(code_of([] { write_json_file("/nonexistent-dir/q.json", Json{}); }),
            ErrorCode::kIoError);
}

}  // namespace
}  // namespace prd::io
