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

#include "prd/groups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prd::groups {

std::vector<std::size_t> GroupStructure::members(std::size_t g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    if (group_of[i] == g) out.push_back(i);
  }
  return out;
}

std::vector<double> GroupStructure::individual_weights() const {
  std::vector<double> out(group_of.size());
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    const std::size_t g = group_of[i];
    out[i] = weights[g] / static_cast<double>(sizes[g]);
  }
  return out;
}

GroupStructure GroupStructure::make(std::vector<std::size_t> group_of,
                                    std::vector<double> weights) {
  if (group_of.empty()) throw Error(ErrorCode::kInvalidParam, "no agents");
  const std::size_t count = *std::max_element(group_of.begin(), group_of.end()) + 1;
  if (weights.size() != count) {
    throw Error(ErrorCode::kInvalidParam, "one weight per group required");
  }
  GroupStructure gs;
  gs.sizes.assign(count, 0);
  for (std::size_t g : group_of) ++gs.sizes[g];
  for (std::size_t g = 0; g < count; ++g) {
    if (gs.sizes[g] == 0) throw Error(ErrorCode::kInvalidParam, "empty group index");
    if (!(weights[g] > 0.0)) throw Error(ErrorCode::kNonpositiveWeight, "group weight <= 0");
  }
  gs.group_of = std::move(group_of);
  gs.weights = std::move(weights);
  gs.beta = static_cast<double>(*std::max_element(gs.sizes.begin(), gs.sizes.end()));
  double W = 0.0;
  for (double w : gs.weights) W += w;
  gs.rho_bound = 0.0;
  for (double w : gs.weights) gs.rho_bound = std::max(gs.rho_bound, W / w);
  return gs;
}

GroupStructure GroupStructure::from_instance(const Instance& inst) {
  std::vector<std::size_t> group_of(inst.n);
  if (inst.groups) {
    group_of = *inst.groups;
  } else {
    for (std::size_t i = 0; i < inst.n; ++i) group_of[i] = i;
  }
  if (group_of.empty()) throw Error(ErrorCode::kInvalidParam, "no agents");
  const std::size_t count = *std::max_element(group_of.begin(), group_of.end()) + 1;
  std::vector<double> weights(count, 0.0);
  for (std::size_t i = 0; i < inst.n; ++i) {
    weights[group_of[i]] += inst.weights ? (*inst.weights)[i] : 1.0;
  }
  return make(std::move(group_of), std::move(weights));
}

FlooredValues floored_values(const Instance& inst, double l, double beta, double mu,
                             double epsilon, std::optional<double> mu_f) {
  if (!(l > 0.0 && l < 1.0) || !(beta >= 1.0) || !(mu > 0.0 && mu <= 1.0) ||
      !(epsilon >= 0.0 && epsilon < beta)) {
    throw Error(ErrorCode::kInvalidParam, "floored_values needs 0<l<1, beta>=1, 0<mu<=1");
  }
  FlooredValues out;
  out.floor = (l / beta) * mu * (1.0 - epsilon / beta);
  out.mu_f = mu_f;
  out.c_f_bar = -std::log(mu * l / 2.0);
  out.vf = inst.values;
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (double& v : out.vf.row(i)) v = std::max(v, out.floor);
  }
  return out;
}

MuFEstimate estimate_mu_f(const dist::DistributionSpec& spec, double floor,
                          std::size_t samples, std::uint64_t seed) {
  dist::validate(spec);
  if (samples == 0 || !(floor > 0.0)) {
    throw Error(ErrorCode::kInvalidParam, "estimate_mu_f needs samples > 0 and floor > 0");
  }
  double sum = 0.0, sumsq = 0.0;
  double v = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    CounterRng rng(seed, s);
    dist::sample_column(spec, rng, std::span<double>(&v, 1));
    const double x = std::log(std::max(v, floor));
    sum += x;
    sumsq += x * x;
  }
  const double N = static_cast<double>(samples);
  MuFEstimate est;
  est.mean = sum / N;
  est.stderr_ = std::sqrt(std::max(0.0, sumsq / N - est.mean * est.mean) / N);
  return est;
}

GroupDefaults group_defaults(double delta, double mu) {
  if (!(delta > 0.0) || !(mu > 0.0 && mu <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "group_defaults needs delta > 0 and 0 < mu <= 1");
  }
  GroupDefaults d;
  const double base = delta * delta * mu / 32.0;
  d.l = base / 16.0;
  d.c_f_bar = -std::log(mu * d.l / 2.0);
  d.epsilon = std::min(base / 48.0, base / 8.0 * d.c_f_bar);
  return d;
}

GroupAllocation wefg_allocate(const Instance& inst, const GroupStructure& gs,
                              const MechanismParams& params, std::uint64_t seed) {
  if (gs.group_of.size() != inst.n) {
    throw Error(ErrorCode::kInvalidParam, "group structure does not cover the agents");
  }
  if (params.beta < gs.beta) {
    throw Error(ErrorCode::kInvalidParam, "params.beta is below the largest group size");
  }
  Instance individual = inst;
  individual.weights = gs.individual_weights();
  auto run = mech::run_prd(individual, params, seed);

  GroupAllocation out;
  out.bids = std::move(run.bids);
  out.x = std::move(run.x);
  out.pre_pool = std::move(run.allocation);
  out.group_bundles.assign(gs.count(), {});
  for (std::size_t j = 0; j < out.pre_pool.owner.size(); ++j) {
    out.group_bundles[gs.group_of[out.pre_pool.owner[j]]].push_back(j);
  }
  return out;
}

bool WefgTypicalityReport::typical() const {
  auto all = [](const std::vector<bool>& v) {
    return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
  };
  return all(w1_ok) && all(w2_ok) && all(w3_ok);
}

WefgTypicalityReport check_wefg_typicality(const Instance& inst, const GroupStructure& gs,
                                           double mu, double delta, double epsilon, double l,
                                           std::optional<double> mu_f) {
  if (!mu_f) throw Error(ErrorCode::kMissingMuF, "mu_f must be estimated or supplied");
  const double beta = gs.beta;
  const auto floored = floored_values(inst, l, beta, mu, epsilon, mu_f);
  const double md = static_cast<double>(inst.m);
  const double eb = epsilon / beta;

  WefgTypicalityReport rep;
  rep.epsilon = epsilon;
  rep.beta = beta;
  rep.floor = floored.floor;
  rep.eta = epsilon / (beta * std::max(std::log(beta), 1.0));

  for (std::size_t i = 0; i < inst.n; ++i) {
    metrics::StableSum s;
    for (double v : inst.values.row(i)) s.add(v);
    const double slack = std::min(s.value() - (1.0 - eb) * md * mu, (1.0 + eb) * md * mu - s.value());
    rep.w1_slack.push_back(slack);
    rep.w1_ok.push_back(slack >= 0.0);
  }
  const double need = (1.0 - eb) * delta * md;
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (std::size_t k = i + 1; k < inst.n; ++k) {
      metrics::StableSum s;
      for (std::size_t j = 0; j < inst.m; ++j) {
        s.add(std::abs(inst.values(i, j) - inst.values(k, j)) / mu);
      }
      rep.pairs.emplace_back(i, k);
      rep.w2_slack.push_back(s.value() - need);
      rep.w2_ok.push_back(s.value() >= need);
    }
  }
  // mu_f <= 0, so (1 + eta) m mu_f is the lower end of the band.
  const double a = (1.0 + rep.eta) * md * *mu_f;
  const double b = (1.0 - rep.eta) * md * *mu_f;
  const double lo = std::min(a, b), hi = std::max(a, b);
  for (std::size_t i = 0; i < inst.n; ++i) {
    metrics::StableSum s;
    for (double v : floored.vf.row(i)) s.add(std::log(v));
    const double slack = std::min(s.value() - lo, hi - s.value());
    rep.w3_slack.push_back(slack);
    rep.w3_ok.push_back(slack >= 0.0);
  }
  return rep;
}

namespace {

void check_partition(const std::vector<std::vector<std::size_t>>& bundles, std::size_t m) {
  std::vector<int> seen(m, 0);
  for (const auto& b : bundles) {
    for (std::size_t j : b) {
      if (j >= m) throw Error(ErrorCode::kIncompleteAllocation, "item index out of range");
      ++seen[j];
    }
  }
  for (int c : seen) {
    if (c != 1) {
      throw Error(ErrorCode::kIncompleteAllocation, "every item must belong to one group");
    }
  }
}

double bundle_value(std::span<const double> vbar, const std::vector<std::size_t>& bundle) {
  metrics::StableSum s;
  for (std::size_t j : bundle) s.add(vbar[j]);
  return s.value();
}

}  // namespace

metrics::EnvyCheck is_wefg(const Instance& inst, const GroupStructure& gs,
                           const std::vector<std::vector<std::size_t>>& group_bundles) {
  if (group_bundles.size() != gs.count() || gs.group_of.size() != inst.n) {
    throw Error(ErrorCode::kIncompleteAllocation, "one bundle per group required");
  }
  check_partition(group_bundles, inst.m);
  const auto norm = normalize(inst.values);
  metrics::EnvyCheck out;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.n; ++i) {
    const std::size_t g = gs.group_of[i];
    const double own = bundle_value(norm.vbar.row(i), group_bundles[g]) / gs.weights[g];
    for (std::size_t h = 0; h < gs.count(); ++h) {
      if (h == g) continue;
      worst = std::min(worst, own - bundle_value(norm.vbar.row(i), group_bundles[h]) / gs.weights[h]);
    }
  }
  if (gs.count() > 1) out.min_margin = worst;
  out.envy_free = out.min_margin >= -metrics::kEnvyTol;
  return out;
}

EmcDecomposition emc_decomposition(const Instance& inst, const GroupStructure& gs,
                                   const std::optional<IntegralAllocation>& pre_pool,
                                   std::size_t agent, std::size_t opposing_group) {
  if (!pre_pool) {
    throw Error(ErrorCode::kMissingPrePoolData, "per-agent bundles were not retained");
  }
  if (agent >= inst.n || opposing_group >= gs.count() ||
      gs.group_of[agent] == opposing_group) {
    throw Error(ErrorCode::kInvalidParam, "opposing group must differ from the agent's group");
  }
  const auto norm = normalize(inst.values);
  const auto vbar = norm.vbar.row(agent);
  const auto bundles = pre_pool->bundles();
  if (bundles.size() != inst.n) {
    throw Error(ErrorCode::kIncompleteAllocation, "pre-pool allocation has wrong agent count");
  }

  const std::size_t g1 = gs.group_of[agent];
  EmcDecomposition out;
  out.own_members = gs.members(g1);
  out.opposing_members = gs.members(opposing_group);
  const double n1 = static_cast<double>(out.own_members.size());
  const double n2 = static_cast<double>(out.opposing_members.size());
  const double w1 = gs.weights[g1], w2 = gs.weights[opposing_group];

  out.emc = Matrix(out.own_members.size(), out.opposing_members.size());
  metrics::StableSum total;
  for (std::size_t a = 0; a < out.own_members.size(); ++a) {
    const double va = bundle_value(vbar, bundles[out.own_members[a]]);
    for (std::size_t k = 0; k < out.opposing_members.size(); ++k) {
      const double vk = bundle_value(vbar, bundles[out.opposing_members[k]]);
      out.emc(a, k) = n1 / w1 * va - n2 / w2 * vk;
      total.add(out.emc(a, k));
    }
  }
  out.average = total.value() / (n1 * n2);

  metrics::StableSum pooled1, pooled2;
  for (std::size_t j = 0; j < pre_pool->owner.size(); ++j) {
    const std::size_t g = gs.group_of[pre_pool->owner[j]];
    if (g == g1) pooled1.add(vbar[j]);
    if (g == opposing_group) pooled2.add(vbar[j]);
  }
  out.direct = pooled1.value() / w1 - pooled2.value() / w2;
  return out;
}

}  // namespace prd::groups
