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

#include "prd/metrics.hpp"

#include <algorithm>
#include <limits>

namespace prd::metrics {

namespace {

void check_complete(const IntegralAllocation& a, std::size_t n, std::size_t m) {
  if (a.n != n || a.owner.size() != m) {
    throw Error(ErrorCode::kIncompleteAllocation, "allocation shape does not match instance");
  }
  for (std::size_t o : a.owner) {
    if (o >= n) throw Error(ErrorCode::kIncompleteAllocation, "item owner out of range");
  }
}

EnvyCheck weighted_check(const std::vector<std::vector<double>>& value,
                         std::span<const double> weights) {
  EnvyCheck out;
  const std::size_t n = value.size();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i == k) continue;
      const double own = weights.empty() ? value[i][i] : value[i][i] / weights[i];
      const double other = weights.empty() ? value[i][k] : value[i][k] / weights[k];
      worst = std::min(worst, own - other);
    }
  }
  if (n > 1) out.min_margin = worst;
  out.envy_free = out.min_margin >= -kEnvyTol;
  return out;
}

}  // namespace

double envy_margin(std::span<const double> vbar, std::span<const std::size_t> bundle_i,
                   std::span<const std::size_t> bundle_k) {
  StableSum own, other;
  for (std::size_t j : bundle_i) own.add(vbar[j]);
  for (std::size_t j : bundle_k) other.add(vbar[j]);
  return own.value() - other.value();
}

std::vector<std::vector<double>> bundle_values(const Matrix& vbar, const IntegralAllocation& a) {
  const std::size_t n = vbar.rows();
  check_complete(a, n, vbar.cols());
  std::vector<StableSum> acc(n * n);
  for (std::size_t j = 0; j < a.owner.size(); ++j) {
    const std::size_t o = a.owner[j];
    for (std::size_t i = 0; i < n; ++i) acc[i * n + o].add(vbar(i, j));
  }
  std::vector<std::vector<double>> out(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) out[i][k] = acc[i * n + k].value();
  }
  return out;
}

EnvyCheck is_envy_free(const Instance& inst, const IntegralAllocation& a) {
  check_complete(a, inst.n, inst.m);
  const auto norm = normalize(inst.values);
  return weighted_check(bundle_values(norm.vbar, a), {});
}

double fractional_envy_margin(std::span<const double> vbar, std::span<const double> x_i,
                              std::span<const double> x_k) {
  StableSum s;
  for (std::size_t j = 0; j < vbar.size(); ++j) s.add(vbar[j] * (x_i[j] - x_k[j]));
  return s.value();
}

double min_fractional_envy_margin(const Matrix& vbar, const Matrix& x,
                                  std::span<const double> weights) {
  const std::size_t n = vbar.rows();
  if (n < 2) return 1.0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i == k) continue;
      double margin = 0.0;
      if (weights.empty()) {
        margin = fractional_envy_margin(vbar.row(i), x.row(i), x.row(k));
      } else {
        StableSum own, other;
        for (std::size_t j = 0; j < vbar.cols(); ++j) {
          own.add(vbar(i, j) * x(i, j));
          other.add(vbar(i, j) * x(k, j));
        }
        margin = own.value() / weights[i] - other.value() / weights[k];
      }
      worst = std::min(worst, margin);
    }
  }
  return worst;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::kInvalidParam, "length mismatch");
  StableSum s;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    if (q[j] <= 0.0) {
      throw Error(ErrorCode::kSupportMismatch,
                  "q vanishes at index " + std::to_string(j) + " where p is positive");
    }
    s.add(p[j] * (std::log(p[j]) - std::log(q[j])));
  }
  return std::max(0.0, s.value());
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::kInvalidParam, "length mismatch");
  StableSum s;
  for (std::size_t j = 0; j < p.size(); ++j) s.add(std::abs(p[j] - q[j]));
  return 0.5 * s.value();
}

bool TypicalityReport::typical() const {
  return std::all_of(t1_ok.begin(), t1_ok.end(), [](bool b) { return b; }) &&
         std::all_of(t2_ok.begin(), t2_ok.end(), [](bool b) { return b; });
}

TypicalityReport check_typicality(const Instance& inst, std::span<const double> mu,
                                  double delta, double epsilon) {
  if (mu.size() != inst.n) throw Error(ErrorCode::kInvalidParam, "one mu per agent required");
  for (double v : mu) {
    if (!(v > 0.0)) throw Error(ErrorCode::kInvalidParam, "mu entries must be positive");
  }
  const double md = static_cast<double>(inst.m);
  TypicalityReport rep;
  rep.epsilon = epsilon;
  rep.epsilon_warning = !(epsilon < delta / 25.0);

  for (std::size_t i = 0; i < inst.n; ++i) {
    StableSum s;
    for (double v : inst.values.row(i)) s.add(v);
    const double lo = (1.0 - epsilon) * md * mu[i];
    const double hi = (1.0 + epsilon) * md * mu[i];
    const double slack = std::min(s.value() - lo, hi - s.value());
    rep.t1_slack.push_back(slack);
    rep.t1_ok.push_back(slack >= 0.0);
  }
  const double need = (1.0 - epsilon) * delta * md;
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (std::size_t k = i + 1; k < inst.n; ++k) {
      StableSum s;
      for (std::size_t j = 0; j < inst.m; ++j) {
        s.add(std::abs(inst.values(i, j) / mu[i] - inst.values(k, j) / mu[k]));
      }
      rep.pairs.emplace_back(i, k);
      rep.t2_slack.push_back(s.value() - need);
      rep.t2_ok.push_back(s.value() >= need);
    }
  }
  return rep;
}

double default_epsilon(double delta) { return delta / 25.0 * (1.0 - 1e-6); }

TheoryBounds theory_bounds(const MechanismParams& params, double delta, std::size_t n) {
  if (!(params.C > 0.0) || n == 0) throw Error(ErrorCode::kInvalidParam, "invalid params");
  TheoryBounds tb;
  const double nd = static_cast<double>(n);
  tb.delta_prime = std::min(delta, 2.0 * std::sqrt(params.C));
  const double d2 = tb.delta_prime * tb.delta_prime;
  tb.eps_prime = std::min(0.5, d2 / (16.0 * params.C));
  tb.fem_lower = d2 / (4.0 * nd * params.C);
  tb.em_half = d2 / (8.0 * nd * params.C);
  return tb;
}

EnvyCheck is_wef(const Instance& inst, std::span<const double> weights,
                 const IntegralAllocation& a) {
  if (weights.size() != inst.n) throw Error(ErrorCode::kInvalidParam, "one weight per agent");
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::kNonpositiveWeight, "weights must be positive");
  }
  check_complete(a, inst.n, inst.m);
  const auto norm = normalize(inst.values);
  return weighted_check(bundle_values(norm.vbar, a), weights);
}

double chernoff_bound(double expectation, double epsilon, double z, Tail side) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "epsilon must lie in (0,1]");
  }
  if (!(z > 0.0)) throw Error(ErrorCode::kInvalidParam, "z must be positive");
  if (!(expectation >= 0.0)) throw Error(ErrorCode::kInvalidParam, "expectation must be >= 0");
  const double denom = side == Tail::kLower ? 2.0 * z : 3.0 * z;
  return std::exp(-epsilon * epsilon * expectation / denom);
}

}  // namespace prd::metrics
