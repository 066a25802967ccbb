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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prd/core.hpp"
#include "prd/distributions.hpp"

namespace prd::harness {

enum class Mode { kPlain, kWeighted, kGroups, kTypes };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct Overrides {
  std::optional<double> l;
  std::optional<double> epsilon;
  std::optional<double> mu_l;
  std::optional<double> delta;
};

struct ExperimentConfig {
  dist::DistributionSpec spec = dist::uniform();
  std::size_t n = 5;
  std::vector<std::size_t> m_values;
  std::optional<double> m_coefficient;  // m = ceil(c n ln n) when m_values is empty
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  Mode mode = Mode::kPlain;
  Overrides overrides;
  std::optional<std::vector<double>> weights;      // per agent
  std::optional<std::vector<std::size_t>> groups;  // per agent, groups mode
  std::size_t types_t = 2;                          // good types, types mode
  std::string output;                               // CSV path; empty: no file
  bool timing = false;                              // runtime_ms stays 0 otherwise
  std::size_t workers = 1;                          // 0: hardware concurrency

  std::vector<std::size_t> resolved_m() const;
  /// Throws kInvalidParam.
  void validate() const;
};

/// Spec-level constants shared by every trial of a sweep.
struct Model {
  std::vector<double> mu;       // per agent
  double delta = 0.0;
  double mu_l = 0.0;
  std::optional<double> mu_f;   // groups mode
  double group_l = 0.0;
  double group_epsilon = 0.0;
};

/// Analytic moments when available, Monte Carlo otherwise; overrides win.
Model resolve_model(const ExperimentConfig& cfg);

struct TrialRecord {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool typical = false;
  bool ef = false;
  double min_em = 0.0;
  double min_fem = 0.0;
  double fem_lower = 0.0;  // NaN outside plain mode
  double runtime_ms = 0.0;
  std::string mode;
  std::string extra;       // key=value pairs, or "error:<message>"
  bool failed = false;
};

/// hash(master seed, trial, m); independent of the other m values.
std::uint64_t trial_seed(std::uint64_t master, std::size_t trial, std::size_t m);

/// Deterministic in (cfg, m, trial). Failures come back as records with
/// failed set.
TrialRecord run_trial(const ExperimentConfig& cfg, const Model& model, std::size_t m,
                      std::size_t trial);
TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
/// Wilson score interval; z = 1.96 gives 95%.
Interval wilson_interval(std::size_t successes, std::size_t total, double z = 1.959963984540054);

struct MSummary {
  std::size_t m = 0;
  std::size_t trials = 0;
  std::size_t failed = 0;
  std::size_t ef = 0;
  double ef_rate = 0.0;
  Interval ef_ci;
  std::size_t typical = 0;
  double typical_rate = 0.0;
  Interval typical_ci;
  std::size_t fem_violations = 0;  // typical trials with min_fem < fem_lower - 1e-9
};

struct McResult {
  std::vector<TrialRecord> records;  // sorted by (m, trial)
  std::vector<MSummary> summary;     // one per m value, ascending
};

/// Runs every (m, trial) pair on a worker pool. Writes `cfg.output` and
/// `cfg.output + ".summary.csv"` when an output path is set (kIoError on
/// failure). Throws kInvalidParam for trials = 0.
McResult monte_carlo(const ExperimentConfig& cfg);

std::vector<MSummary> summarize(const std::vector<TrialRecord>& records);

inline constexpr const char* kCsvHeader =
    "n,m,trial,seed,typical,ef,min_em,min_fem,fem_lower,runtime_ms,mode,extra";

std::string to_csv(const std::vector<TrialRecord>& records);
std::string summary_csv(const std::vector<MSummary>& summary);

/// Throws kIoError.
void write_text(const std::string& path, const std::string& text);

}  // namespace prd::harness
