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

#include "prd/types_ext.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prd/mechanism.hpp"

namespace prd::types {

namespace {

// Default l when only one type exists and no delta can be formed.
constexpr double kSingleTypeL = 0.04;

double row_sum(const Matrix& v, std::size_t a) {
  metrics::StableSum s;
  for (double x : v.row(a)) s.add(x);
  return s.value();
}

std::int64_t min_agents(const TypesInstance& ti) {
  return *std::min_element(ti.agents_per_type.begin(), ti.agents_per_type.end());
}

std::int64_t max_agents(const TypesInstance& ti) {
  return *std::max_element(ti.agents_per_type.begin(), ti.agents_per_type.end());
}

// Index of the largest holding that can still give `n_a` units; ties go to
// the lower index.
std::optional<std::size_t> richest_donor(const Counts& held, const TypesInstance& ti) {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < held.size(); ++a) {
    if (held[a] < ti.agents_per_type[a]) continue;
    if (!best || held[a] > held[*best]) best = a;
  }
  return best;
}

// Gives every super-agent the same per-member base and represents the
// remainder; lowers the base until the remainder is representable.
std::optional<Counts> balanced_return(std::int64_t pool, const TypesInstance& ti) {
  const std::int64_t n = ti.total_agents();
  for (std::int64_t base = pool / n; base >= 0; --base) {
    const auto rest = change_making(pool - base * n, ti.agents_per_type);
    if (!rest) continue;
    Counts out(ti.d);
    for (std::size_t a = 0; a < ti.d; ++a) {
      out[a] = (base + (*rest)[a]) * ti.agents_per_type[a];
    }
    return out;
  }
  return std::nullopt;
}

void check_conservation(const std::vector<Counts>& held, const Counts& expected,
                        const char* step) {
  for (std::size_t b = 0; b < expected.size(); ++b) {
    std::int64_t total = 0;
    for (const auto& row : held) total += row[b];
    if (total != expected[b]) {
      throw Error(ErrorCode::kRepresentationFailure,
                  std::string("item count not conserved after ") + step);
    }
  }
}

}  // namespace

std::int64_t TypesInstance::total_agents() const {
  return std::accumulate(agents_per_type.begin(), agents_per_type.end(), std::int64_t{0});
}

std::int64_t TypesInstance::gcd_agents() const {
  std::int64_t r = 0;
  for (std::int64_t n : agents_per_type) r = std::gcd(r, n);
  return r;
}

void validate_types(const TypesInstance& ti) {
  if (ti.d == 0 || ti.t == 0) throw Error(ErrorCode::kInvalidParam, "d and t must be positive");
  if (ti.agents_per_type.size() != ti.d || ti.items_per_type.size() != ti.t ||
      ti.values.rows() != ti.d || ti.values.cols() != ti.t) {
    throw Error(ErrorCode::kInvalidParam, "shape does not match (d, t)");
  }
  for (std::int64_t n : ti.agents_per_type) {
    if (n <= 0) throw Error(ErrorCode::kInvalidParam, "agent counts must be positive");
  }
  for (std::int64_t m : ti.items_per_type) {
    if (m < 0) throw Error(ErrorCode::kInvalidParam, "item counts must be nonnegative");
  }
  for (double v : ti.values.data()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidParam, "values must be finite and nonnegative");
    }
  }
  for (std::size_t a = 0; a < ti.d; ++a) {
    if (!(row_sum(ti.values, a) > 0.0)) {
      throw Error(ErrorCode::kZeroRow, "type " + std::to_string(a) + " values nothing");
    }
  }
  if (ti.nu && *ti.nu < 0) throw Error(ErrorCode::kInvalidParam, "nu must be nonnegative");
}

double types_delta(const Matrix& values, std::int64_t nu) {
  const std::size_t d = values.rows();
  if (d < 2) throw Error(ErrorCode::kInvalidParam, "types_delta needs at least two types");
  if (nu <= 0) throw Error(ErrorCode::kInvalidParam, "nu must be positive");
  std::vector<double> sums(d);
  for (std::size_t a = 0; a < d; ++a) {
    sums[a] = row_sum(values, a);
    if (!(sums[a] > 0.0)) throw Error(ErrorCode::kZeroRow, "type values nothing");
  }
  const double units = static_cast<double>(nu);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t k = a + 1; k < d; ++k) {
      metrics::StableSum s;
      for (std::size_t b = 0; b < values.cols(); ++b) {
        const double per_unit_a = values(a, b) / (units * sums[a]);
        const double per_unit_k = values(k, b) / (units * sums[k]);
        s.add(units * std::abs(per_unit_a - per_unit_k));
      }
      best = std::min(best, s.value());
    }
  }
  if (!(best > kIdentityTol)) {
    throw Error(ErrorCode::kIdenticalTypes, "two types have proportional valuations");
  }
  return best;
}

double types_log_range(double l, std::size_t t) {
  return std::log(2.0 * static_cast<double>(t) / l);
}

std::int64_t types_threshold(const TypesInstance& ti) {
  validate_types(ti);
  if (ti.d < 2) return 0;
  const double delta = types_delta(ti.values);
  const double C = types_log_range(delta / 25.0, ti.t);
  const double n = static_cast<double>(ti.total_agents());
  const double r = static_cast<double>(ti.gcd_agents());
  const double d = static_cast<double>(ti.d);
  const double d2 = delta * delta;
  const double bound = std::max({60.0 * n * C / d2, 48.0 * n * n * C / (r * d * d2),
                                 24.0 * n * n * C / (r * d2)});
  if (bound > 9e15) throw Error(ErrorCode::kTooLarge, "threshold exceeds 64-bit counts");
  return static_cast<std::int64_t>(std::ceil(bound));
}

std::int64_t pool_threshold(const TypesInstance& ti) {
  if (ti.d < 2) return 0;
  const std::int64_t num = 2 * max_agents(ti) * min_agents(ti);
  const std::int64_t den = static_cast<std::int64_t>(ti.d) * ti.gcd_agents();
  return (num + den - 1) / den;
}

std::optional<Counts> change_making(std::int64_t total, const Counts& denominations) {
  if (total < 0) return std::nullopt;
  for (std::int64_t c : denominations) {
    if (c <= 0) throw Error(ErrorCode::kInvalidParam, "denominations must be positive");
  }
  if (total > 50'000'000) throw Error(ErrorCode::kTooLarge, "change-making total too large");
  const auto size = static_cast<std::size_t>(total) + 1;
  // last[v]: denomination index used to reach v, or -1 if unreachable.
  std::vector<int> last(size, -1);
  last[0] = static_cast<int>(denominations.size());
  for (std::size_t v = 1; v < size; ++v) {
    for (std::size_t a = 0; a < denominations.size(); ++a) {
      const auto c = static_cast<std::size_t>(denominations[a]);
      if (c <= v && last[v - c] != -1) {
        last[v] = static_cast<int>(a);
        break;
      }
    }
  }
  if (last[size - 1] == -1) return std::nullopt;
  Counts out(denominations.size(), 0);
  for (std::size_t v = size - 1; v > 0;) {
    const auto a = static_cast<std::size_t>(last[v]);
    ++out[a];
    v -= static_cast<std::size_t>(denominations[a]);
  }
  return out;
}

std::vector<Counts> round_super_residues(const Matrix& fractional) {
  const std::size_t d = fractional.rows(), t = fractional.cols();
  std::vector<Counts> out(d, Counts(t, 0));
  for (std::size_t b = 0; b < t; ++b) {
    double total = 0.0;
    std::vector<double> residue(d);
    std::int64_t floors = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const double x = fractional(a, b);
      const double fl = std::floor(x);
      out[a][b] = static_cast<std::int64_t>(fl);
      residue[a] = x - fl;
      floors += out[a][b];
      total += x;
    }
    std::int64_t leftover = std::llround(total) - floors;
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t p, std::size_t q) { return residue[p] > residue[q]; });
    for (std::size_t k = 0; k < d && leftover > 0; ++k, --leftover) ++out[order[k]][b];
  }
  return out;
}

TakeawayResult takeaway_and_reallocate(const std::vector<Counts>& holdings,
                                       const TypesInstance& ti) {
  if (holdings.size() != ti.d) throw Error(ErrorCode::kInvalidParam, "one row per type");
  const std::int64_t threshold = pool_threshold(ti);
  TakeawayResult res;
  res.repaired = holdings;
  res.pool.assign(ti.t, 0);
  res.returned.assign(ti.d, Counts(ti.t, 0));

  for (std::size_t b = 0; b < ti.t; ++b) {
    Counts held(ti.d);
    for (std::size_t a = 0; a < ti.d; ++a) {
      const std::int64_t n_a = ti.agents_per_type[a];
      const std::int64_t extra = holdings[a][b] % n_a;
      held[a] = holdings[a][b] - extra;
      res.pool[b] += extra;
    }
    auto take_once = [&] {
      const auto donor = richest_donor(held, ti);
      if (!donor) {
        throw Error(ErrorCode::kRepresentationFailure, "no super-agent can give more items");
      }
      held[*donor] -= ti.agents_per_type[*donor];
      res.pool[b] += ti.agents_per_type[*donor];
    };
    while (res.pool[b] < threshold) take_once();

    std::optional<Counts> back = balanced_return(res.pool[b], ti);
    while (!back) {
      take_once();
      back = balanced_return(res.pool[b], ti);
    }
    for (std::size_t a = 0; a < ti.d; ++a) {
      res.returned[a][b] = (*back)[a];
      res.repaired[a][b] = held[a] + (*back)[a];
    }
  }
  return res;
}

TypesAllocation allocate_types(const TypesInstance& ti) {
  validate_types(ti);
  const std::int64_t r = ti.gcd_agents();
  for (std::int64_t m : ti.items_per_type) {
    if (m % r != 0) {
      throw Error(ErrorCode::kDivisibilityViolation,
                  "item count " + std::to_string(m) + " is not a multiple of r=" +
                      std::to_string(r));
    }
  }

  TypesAllocation out;
  TypesTrace& tr = out.trace;
  const std::int64_t bound = types_threshold(ti);
  tr.nu = ti.nu.value_or(bound);
  if (tr.nu < bound) {
    throw Error(ErrorCode::kThresholdTooSmall,
                "nu=" + std::to_string(tr.nu) + " is below the bound " + std::to_string(bound));
  }
  for (std::int64_t m : ti.items_per_type) {
    if (m < tr.nu) throw Error(ErrorCode::kThresholdTooSmall, "some m_b is below nu");
  }

  // Step 2: weighted mechanism on M1 at the level of good types. With
  // aggregated values V_ab = v_ab / sum_b v_ab the unit-item bids are B_ab/nu
  // and the log shares ln(b) + c coincide, so x is independent of nu.
  const double nu = static_cast<double>(tr.nu);
  tr.fractional = Matrix(ti.d, ti.t);
  if (ti.d == 1) {
    tr.l = kSingleTypeL;
    for (std::size_t b = 0; b < ti.t; ++b) tr.fractional(0, b) = nu;
  } else {
    tr.delta = types_delta(ti.values);
    tr.l = tr.delta / 25.0;
    const auto agg = MechanismParams::from_bounds(tr.l, 1.0 / static_cast<double>(ti.t),
                                                  tr.delta, ti.t);
    const auto norm = normalize(ti.values);
    const auto bids = mech::construct_bid_profile(norm.vbar, agg);
    std::vector<double> weights(ti.agents_per_type.begin(), ti.agents_per_type.end());
    const auto x = mech::weighted_fractional_allocation(bids.b, weights, agg);
    for (std::size_t a = 0; a < ti.d; ++a) {
      for (std::size_t b = 0; b < ti.t; ++b) tr.fractional(a, b) = nu * x.x(a, b);
    }
  }
  tr.after_rounding = round_super_residues(tr.fractional);
  check_conservation(tr.after_rounding, Counts(ti.t, tr.nu), "rounding");

  // Step 3: M2 spread evenly over the original agents.
  const std::int64_t n = ti.total_agents();
  for (std::size_t a = 0; a < ti.d; ++a) {
    for (std::int64_t k = 0; k < ti.agents_per_type[a]; ++k) out.type_of.push_back(a);
  }
  tr.m2_per_agent.assign(static_cast<std::size_t>(n), Counts(ti.t, 0));
  for (std::size_t b = 0; b < ti.t; ++b) {
    const std::int64_t rest = ti.items_per_type[b] - tr.nu;
    for (std::int64_t i = 0; i < n; ++i) {
      tr.m2_per_agent[static_cast<std::size_t>(i)][b] = rest / n + (i < rest % n ? 1 : 0);
    }
  }
  tr.before_repair = tr.after_rounding;
  for (std::size_t i = 0; i < out.type_of.size(); ++i) {
    for (std::size_t b = 0; b < ti.t; ++b) {
      tr.before_repair[out.type_of[i]][b] += tr.m2_per_agent[i][b];
    }
  }
  check_conservation(tr.before_repair, ti.items_per_type, "spreading M2");

  // Steps 4 and 5.
  tr.repair = takeaway_and_reallocate(tr.before_repair, ti);
  check_conservation(tr.repair.repaired, ti.items_per_type, "reallocation");

  // Step 6.
  out.per_agent.reserve(out.type_of.size());
  for (std::size_t a : out.type_of) {
    Counts share(ti.t);
    for (std::size_t b = 0; b < ti.t; ++b) {
      const std::int64_t held = tr.repair.repaired[a][b];
      if (held % ti.agents_per_type[a] != 0) {
        throw Error(ErrorCode::kDivisibilityViolation, "super-agent bundle does not split evenly");
      }
      share[b] = held / ti.agents_per_type[a];
    }
    out.per_agent.push_back(std::move(share));
  }
  return out;
}

Expanded expand(const TypesInstance& ti, const TypesAllocation& alloc) {
  const std::size_t n = alloc.per_agent.size();
  const std::int64_t m = std::accumulate(ti.items_per_type.begin(), ti.items_per_type.end(),
                                         std::int64_t{0});
  Expanded out;
  out.instance.n = n;
  out.instance.m = static_cast<std::size_t>(m);
  out.instance.values = Matrix(n, out.instance.m);
  out.allocation.n = n;
  out.allocation.owner.assign(out.instance.m, 0);

  std::size_t first = 0;
  for (std::size_t b = 0; b < ti.t; ++b) {
    const auto count = static_cast<std::size_t>(ti.items_per_type[b]);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = alloc.type_of[i];
      const auto row = ti.values.row(a);
      const double top = *std::max_element(row.begin(), row.end());
      const double v = ti.values(a, b) / top;
      for (std::size_t j = first; j < first + count; ++j) out.instance.values(i, j) = v;
    }
    std::size_t j = first;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::int64_t k = 0; k < alloc.per_agent[i][b]; ++k) out.allocation.owner[j++] = i;
    }
    if (j != first + count) {
      throw Error(ErrorCode::kIncompleteAllocation, "per-agent counts do not cover a good type");
    }
    first += count;
  }
  return out;
}

metrics::EnvyCheck counts_envy_check(const TypesInstance& ti, const TypesAllocation& alloc) {
  const std::size_t n = alloc.per_agent.size();
  metrics::EnvyCheck out;
  if (n < 2) return out;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = alloc.type_of[i];
    metrics::StableSum total;
    for (std::size_t b = 0; b < ti.t; ++b) {
      total.add(ti.values(a, b) * static_cast<double>(ti.items_per_type[b]));
    }
    auto value = [&](std::size_t k) {
      metrics::StableSum s;
      for (std::size_t b = 0; b < ti.t; ++b) {
        s.add(ti.values(a, b) * static_cast<double>(alloc.per_agent[k][b]));
      }
      return s.value() / total.value();
    };
    const double own = value(i);
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) worst = std::min(worst, own - value(k));
    }
  }
  out.min_margin = worst;
  out.envy_free = worst >= -metrics::kEnvyTol;
  return out;
}

}  // namespace prd::types
