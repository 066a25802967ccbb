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
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "prd/core.hpp"
#include "prd/rng.hpp"

namespace prd::dist {

struct IidUniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct IidBeta {
  double a = 1.0;
  double b = 1.0;
};

struct AtomicMixture {
  std::vector<double> support;
  std::vector<double> probs;
};

struct DistributionSpec;

/// v_ij = clamp(rho * z_j + (1 - rho) * u_ij, 0, 1) with z_j drawn once per
/// item from `base` and u_ij drawn per agent from `base`.
struct CommonShock {
  double rho = 0.0;
  std::shared_ptr<const DistributionSpec> base;
};

/// Per-item joint law of the n agents' values. Columns are i.i.d. across items.
struct DistributionSpec {
  std::variant<IidUniform, IidBeta, AtomicMixture, CommonShock> kind;
};

DistributionSpec uniform(double lo = 0.0, double hi = 1.0);
DistributionSpec beta(double a, double b);
DistributionSpec atomic(std::vector<double> support, std::vector<double> probs);
DistributionSpec common_shock(double rho, DistributionSpec base);

/// Throws kInvalidSpec when parameters are out of range.
void validate(const DistributionSpec& spec);

/// Fills `column` (length n) with one item's values drawn from `rng`.
void sample_column(const DistributionSpec& spec, CounterRng& rng, std::span<double> column);

/// Deterministic for a fixed (spec, n, m, seed); item j uses the stream
/// keyed by (seed, j).
Instance sample_instance(const DistributionSpec& spec, std::size_t n, std::size_t m,
                         std::uint64_t seed);

struct MomentEstimate {
  std::vector<double> mu;         // per-agent marginal means
  std::vector<double> mu_stderr;
  double delta_hat = 0.0;         // min over pairs of E|v_i/mu_i - v_k/mu_k|
  double delta_stderr = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo moments from `samples` independent item columns.
MomentEstimate estimate_moments(const DistributionSpec& spec, std::size_t n,
                                std::size_t samples, std::uint64_t seed);

/// Closed-form (mu, delta) when the spec admits one. Every supported variant is
/// exchangeable across agents, so one mu applies to all of them.
struct AnalyticMoments {
  double mu = 0.0;
  std::optional<double> delta;
};
std::optional<AnalyticMoments> analytic_moments(const DistributionSpec& spec);

}  // namespace prd::dist
