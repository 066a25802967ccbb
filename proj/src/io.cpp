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

#include "prd/io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <sstream>

namespace prd::io {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, std::string(what) + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) {
      throw Error(ErrorCode::kParseError,
                  std::string("unknown field '") + item.key() + "' in " + what);
    }
  }
}

template <class T>
T get(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kParseError, std::string("missing field '") + key + "' in " + what);
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("field '") + key + "' in " + what + ": " +
                                            e.what());
  }
}

template <class T>
std::optional<T> get_opt(const Json& j, const char* key, const char* what) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<T>(j, key, what);
}

Json matrix_json(const Matrix& m) { return m.to_rows(); }

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json bundles_json(const std::vector<std::vector<std::size_t>>& bundles) { return bundles; }

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoError, "read from '" + path + "' failed");
  try {
    return Json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  harness::write_text(path, j.dump(2) + "\n");
}

Instance instance_from_json(const Json& j) {
  constexpr const char* what = "instance";
  check_keys(j, {"n", "m", "values", "weights", "groups"}, what);
  const auto rows = get<std::vector<std::vector<double>>>(j, "values", what);
  Instance inst;
  try {
    inst = Instance::from_values(rows);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidInstance, e.what());
  }
  if (auto n = get_opt<std::size_t>(j, "n", what); n && *n != inst.n) {
    throw Error(ErrorCode::kInvalidInstance, "n does not match the number of value rows");
  }
  if (auto m = get_opt<std::size_t>(j, "m", what); m && *m != inst.m) {
    throw Error(ErrorCode::kInvalidInstance, "m does not match the row length");
  }
  inst.weights = get_opt<std::vector<double>>(j, "weights", what);
  inst.groups = get_opt<std::vector<std::size_t>>(j, "groups", what);
  require_valid(inst);
  return inst;
}

Json to_json(const Instance& inst) {
  Json j{{"n", inst.n}, {"m", inst.m}, {"values", matrix_json(inst.values)}};
  if (inst.weights) j["weights"] = *inst.weights;
  if (inst.groups) j["groups"] = *inst.groups;
  return j;
}

dist::DistributionSpec spec_from_json(const Json& j) {
  constexpr const char* what = "distribution";
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "distribution must be an object");
  const auto kind = get<std::string>(j, "kind", what);
  dist::DistributionSpec spec;
  if (kind == "uniform") {
    check_keys(j, {"kind", "lo", "hi"}, what);
    spec = dist::uniform(get_opt<double>(j, "lo", what).value_or(0.0),
                         get_opt<double>(j, "hi", what).value_or(1.0));
  } else if (kind == "beta") {
    check_keys(j, {"kind", "a", "b"}, what);
    spec = dist::beta(get<double>(j, "a", what), get<double>(j, "b", what));
  } else if (kind == "atomic") {
    check_keys(j, {"kind", "support", "probs"}, what);
    spec = dist::atomic(get<std::vector<double>>(j, "support", what),
                        get<std::vector<double>>(j, "probs", what));
  } else if (kind == "common_shock") {
    check_keys(j, {"kind", "rho", "base"}, what);
    if (!j.contains("base")) throw Error(ErrorCode::kParseError, "common_shock needs a base");
    spec = dist::common_shock(get<double>(j, "rho", what), spec_from_json(j.at("base")));
  } else {
    throw Error(ErrorCode::kParseError, "unknown distribution kind '" + kind + "'");
  }
  dist::validate(spec);
  return spec;
}

Json to_json(const dist::DistributionSpec& spec) {
  return std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, dist::IidUniform>) {
          return {{"kind", "uniform"}, {"lo", k.lo}, {"hi", k.hi}};
        } else if constexpr (std::is_same_v<K, dist::IidBeta>) {
          return {{"kind", "beta"}, {"a", k.a}, {"b", k.b}};
        } else if constexpr (std::is_same_v<K, dist::AtomicMixture>) {
          return {{"kind", "atomic"}, {"support", k.support}, {"probs", k.probs}};
        } else {
          return {{"kind", "common_shock"}, {"rho", k.rho}, {"base", to_json(*k.base)}};
        }
      },
      spec.kind);
}

Json to_json(const mech::PrdResult& res) {
  Json scale = Json::array();
  for (double s : res.bids.scale_factors) scale.push_back(number_or_null(s));
  Json fallback = Json::array();
  for (bool f : res.bids.fallback) fallback.push_back(f);
  return {{"bids", matrix_json(res.bids.b)},
          {"x", matrix_json(res.x.x)},
          {"allocation", res.allocation.owner},
          {"scale_factors", scale},
          {"fallback", fallback}};
}

Json to_json(const groups::GroupAllocation& alloc) {
  return {{"group_bundles", bundles_json(alloc.group_bundles)},
          {"pre_pool", bundles_json(alloc.pre_pool.bundles())}};
}

types::TypesInstance types_from_json(const Json& j) {
  constexpr const char* what = "types instance";
  check_keys(j, {"d", "t", "n", "m", "values", "nu"}, what);
  types::TypesInstance ti;
  ti.d = get<std::size_t>(j, "d", what);
  ti.t = get<std::size_t>(j, "t", what);
  ti.agents_per_type = get<std::vector<std::int64_t>>(j, "n", what);
  ti.items_per_type = get<std::vector<std::int64_t>>(j, "m", what);
  const auto rows = get<std::vector<std::vector<double>>>(j, "values", what);
  try {
    ti.values = Matrix::from_rows(rows);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  ti.nu = get_opt<std::int64_t>(j, "nu", what);
  types::validate_types(ti);
  return ti;
}

Json to_json(const types::TypesAllocation& alloc) {
  return {{"per_agent", alloc.per_agent}};
}

harness::ExperimentConfig config_from_json(const Json& j) {
  constexpr const char* what = "config";
  check_keys(j, {"distribution", "n", "m", "m_coefficient", "trials", "seed", "mode", "l",
                 "epsilon", "mu_l", "delta", "weights", "groups", "types_t", "output", "timing",
                 "workers"},
             what);
  harness::ExperimentConfig cfg;
  if (j.contains("distribution")) cfg.spec = spec_from_json(j.at("distribution"));
  cfg.n = get_opt<std::size_t>(j, "n", what).value_or(cfg.n);
  if (j.contains("m")) {
    if (j.at("m").is_array()) {
      cfg.m_values = get<std::vector<std::size_t>>(j, "m", what);
    } else {
      cfg.m_values = {get<std::size_t>(j, "m", what)};
    }
  }
  cfg.m_coefficient = get_opt<double>(j, "m_coefficient", what);
  cfg.trials = get_opt<std::size_t>(j, "trials", what).value_or(cfg.trials);
  cfg.seed = get_opt<std::uint64_t>(j, "seed", what).value_or(cfg.seed);
  if (auto mode = get_opt<std::string>(j, "mode", what)) cfg.mode = harness::mode_from_string(*mode);
  cfg.overrides.l = get_opt<double>(j, "l", what);
  cfg.overrides.epsilon = get_opt<double>(j, "epsilon", what);
  cfg.overrides.mu_l = get_opt<double>(j, "mu_l", what);
  cfg.overrides.delta = get_opt<double>(j, "delta", what);
  cfg.weights = get_opt<std::vector<double>>(j, "weights", what);
  cfg.groups = get_opt<std::vector<std::size_t>>(j, "groups", what);
  cfg.types_t = get_opt<std::size_t>(j, "types_t", what).value_or(cfg.types_t);
  cfg.output = get_opt<std::string>(j, "output", what).value_or("");
  cfg.timing = get_opt<bool>(j, "timing", what).value_or(false);
  cfg.workers = get_opt<std::size_t>(j, "workers", what).value_or(cfg.workers);
  return cfg;
}

Json to_json(const harness::ExperimentConfig& cfg) {
  Json j{{"distribution", to_json(cfg.spec)},
         {"n", cfg.n},
         {"m", cfg.m_values},
         {"trials", cfg.trials},
         {"seed", cfg.seed},
         {"mode", harness::to_string(cfg.mode)},
         {"types_t", cfg.types_t},
         {"timing", cfg.timing},
         {"workers", cfg.workers}};
  if (cfg.m_coefficient) j["m_coefficient"] = *cfg.m_coefficient;
  if (cfg.overrides.l) j["l"] = *cfg.overrides.l;
  if (cfg.overrides.epsilon) j["epsilon"] = *cfg.overrides.epsilon;
  if (cfg.overrides.mu_l) j["mu_l"] = *cfg.overrides.mu_l;
  if (cfg.overrides.delta) j["delta"] = *cfg.overrides.delta;
  if (cfg.weights) j["weights"] = *cfg.weights;
  if (cfg.groups) j["groups"] = *cfg.groups;
  if (!cfg.output.empty()) j["output"] = cfg.output;
  return j;
}

Json to_json(const metrics::TypicalityReport& rep) {
  Json pairs = Json::array();
  for (const auto& [i, k] : rep.pairs) pairs.push_back({i, k});
  return {{"epsilon", rep.epsilon},  {"epsilon_warning", rep.epsilon_warning},
          {"typical", rep.typical()}, {"t1_ok", rep.t1_ok},
          {"t1_slack", rep.t1_slack}, {"pairs", pairs},
          {"t2_ok", rep.t2_ok},       {"t2_slack", rep.t2_slack}};
}

Json to_json(const oracle::DeviationReport& rep) {
  return {{"agent", rep.agent},
          {"family", rep.family},
          {"best_report", rep.best_report},
          {"truthful_value", rep.truthful_value},
          {"best_value", rep.best_value},
          {"gain", rep.gain},
          {"evaluated", rep.evaluated},
          {"bids_identical", rep.bids_identical}};
}

Json to_json(const oracle::EfExistence& res) {
  Json j{{"exists", res.exists}, {"witness", nullptr}};
  if (res.witness) j["witness"] = res.witness->owner;
  return j;
}

Json to_json(const oracle::MinEnvyResult& res) {
  return {{"allocation", res.allocation.owner}, {"margin", number_or_null(res.margin)}};
}

}  // namespace prd::io
