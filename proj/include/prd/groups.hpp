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

// Weighted envy-freeness for groups. Every member of group g runs the weighted
// mechanism with individual weight w_g / n_g under the bid floor l/(m beta);
// the items each member wins are then pooled into one group bundle.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "prd/core.hpp"
#include "prd/distributions.hpp"
#include "prd/mechanism.hpp"
#include "prd/metrics.hpp"

namespace prd::groups {

struct GroupStructure {
  std::vector<std::size_t> group_of;  // agent -> group
  std::vector<std::size_t> sizes;     // n_g
  std::vector<double> weights;        // w_g
  double beta = 1.0;                  // max n_g
  double rho_bound = 1.0;             // max W / w_g

  std::size_t count() const { return sizes.size(); }
  std::vector<std::size_t> members(std::size_t g) const;
  /// w_g / n_g for each agent.
  std::vector<double> individual_weights() const;

  static GroupStructure make(std::vector<std::size_t> group_of, std::vector<double> weights);
  /// Groups from inst.groups (all singletons when absent); w_g is the sum of
  /// the members' agent weights, each defaulting to 1.
  static GroupStructure from_instance(const Instance& inst);
};

struct FlooredValues {
  Matrix vf;
  double floor = 0.0;             // (l/beta) mu (1 - eps/beta)
  std::optional<double> mu_f;     // E[ln v^f]
  double c_f_bar = 0.0;           // -ln(mu l / 2)
};

FlooredValues floored_values(const Instance& inst, double l, double beta, double mu,
                             double epsilon, std::optional<double> mu_f = std::nullopt);

struct MuFEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo E[ln max(v, floor)] under the marginal of `spec`.
MuFEstimate estimate_mu_f(const dist::DistributionSpec& spec, double floor,
                          std::size_t samples, std::uint64_t seed);

/// Group-mode constants l = delta^2 mu / 512 and the largest admissible eps.
struct GroupDefaults {
  double l = 0.0;
  double epsilon = 0.0;
  double c_f_bar = 0.0;
};
GroupDefaults group_defaults(double delta, double mu);

struct GroupAllocation {
  mech::BidProfile bids;
  FractionalAllocation x;
  IntegralAllocation pre_pool;                       // per-agent outcome of rounding
  std::vector<std::vector<std::size_t>> group_bundles;
};

/// params must be built with beta >= gs.beta (b_min = l / (m beta)).
GroupAllocation wefg_allocate(const Instance& inst, const GroupStructure& gs,
                              const MechanismParams& params, std::uint64_t seed);

struct WefgTypicalityReport {
  double epsilon = 0.0;
  double beta = 1.0;
  double floor = 0.0;
  double eta = 0.0;  // eps / (beta max(ln beta, 1))
  std::vector<bool> w1_ok;
  std::vector<double> w1_slack;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bool> w2_ok;
  std::vector<double> w2_slack;
  std::vector<bool> w3_ok;
  std::vector<double> w3_slack;

  bool typical() const;
};

/// Throws kMissingMuF when mu_f is absent.
WefgTypicalityReport check_wefg_typicality(const Instance& inst, const GroupStructure& gs,
                                           double mu, double delta, double epsilon, double l,
                                           std::optional<double> mu_f);

/// Min over agents i in g and groups g' != g of vbar_i(A_g)/w_g - vbar_i(A_g')/w_g'.
metrics::EnvyCheck is_wefg(const Instance& inst, const GroupStructure& gs,
                           const std::vector<std::vector<std::size_t>>& group_bundles);

struct EmcDecomposition {
  std::vector<std::size_t> own_members;       // N_1, the group of agent i
  std::vector<std::size_t> opposing_members;  // N_2
  Matrix emc;                                 // |N_1| x |N_2|
  double average = 0.0;
  double direct = 0.0;                        // EM_i2 from pooled bundles
};

/// EMC_aik = (n_1/w_1) v_i(A_a) - (n_2/w_2) v_i(A_k) with normalized values.
/// Throws kMissingPrePoolData without the per-agent allocation.
EmcDecomposition emc_decomposition(const Instance& inst, const GroupStructure& gs,
                                   const std::optional<IntegralAllocation>& pre_pool,
                                   std::size_t agent, std::size_t opposing_group);

}  // namespace prd::groups
