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

// JSON encodings for instances, specs, configs and results. Readers reject
// unknown keys with kParseError.

#include <string>

#include "json.hpp"

#include "prd/core.hpp"
#include "prd/distributions.hpp"
#include "prd/groups.hpp"
#include "prd/harness.hpp"
#include "prd/mechanism.hpp"
#include "prd/metrics.hpp"
#include "prd/oracle.hpp"
#include "prd/types_ext.hpp"

namespace prd::io {

using Json = nlohmann::json;

/// kIoError when the file cannot be read, kParseError on malformed JSON.
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// {"n", "m", "values", "weights"?, "groups"?}; n and m are optional but must
/// match the matrix when present. Throws kInvalidInstance for invalid data.
Instance instance_from_json(const Json& j);
Json to_json(const Instance& inst);

/// {"kind": "uniform"|"beta"|"atomic"|"common_shock", ...}.
dist::DistributionSpec spec_from_json(const Json& j);
Json to_json(const dist::DistributionSpec& spec);

/// {"bids", "x", "allocation", "scale_factors", "fallback"}; fallback scale
/// factors are null.
Json to_json(const mech::PrdResult& res);

/// {"group_bundles", "pre_pool"}.
Json to_json(const groups::GroupAllocation& alloc);

/// {"d", "t", "n", "m", "values", "nu"?}.
types::TypesInstance types_from_json(const Json& j);
/// {"per_agent"}.
Json to_json(const types::TypesAllocation& alloc);

harness::ExperimentConfig config_from_json(const Json& j);
Json to_json(const harness::ExperimentConfig& cfg);

Json to_json(const metrics::TypicalityReport& rep);
Json to_json(const oracle::DeviationReport& rep);
Json to_json(const oracle::EfExistence& res);
Json to_json(const oracle::MinEnvyResult& res);

}  // namespace prd::io
