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

#include "prd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prd/mechanism.hpp"
#include "prd/metrics.hpp"
#include "prd/rng.hpp"

namespace prd::oracle {

namespace {

void guard_size(const Instance& inst) {
  require_valid(inst);
  const double states = std::pow(static_cast<double>(inst.n), static_cast<double>(inst.m));
  if (states > kMaxStates) {
    throw Error(ErrorCode::kTooLarge, "n^m = " + std::to_string(states) + " exceeds 1e7");
  }
}

// Depth-first walk over owner vectors in base-n lexicographic order. Level k
// of `value` holds vbar_i . bundle_k over the first k items, recomputed from
// the parent level so sums never accumulate round-off from backtracking.
class Enumerator {
 public:
  explicit Enumerator(const Instance& inst)
      : n_(inst.n), m_(inst.m), vbar_(normalize(inst.values).vbar),
        value_((m_ + 1) * n_ * n_, 0.0), owner_(m_, 0) {}

  // Calls visit(owner, margin) at every leaf; visit returns false to stop.
  template <class Visit>
  void run(Visit&& visit) {
    stop_ = false;
    descend(0, visit);
  }

 private:
  template <class Visit>
  void descend(std::size_t depth, Visit& visit) {
    if (stop_) return;
    const double* parent = &value_[depth * n_ * n_];
    if (depth == m_) {
      if (!visit(owner_, leaf_margin(parent))) stop_ = true;
      return;
    }
    double* child = &value_[(depth + 1) * n_ * n_];
    for (std::size_t o = 0; o < n_ && !stop_; ++o) {
      owner_[depth] = o;
      std::copy(parent, parent + n_ * n_, child);
      for (std::size_t i = 0; i < n_; ++i) child[i * n_ + o] += vbar_(i, depth);
      descend(depth + 1, visit);
    }
  }

  double leaf_margin(const double* v) const {
    if (n_ < 2) return 1.0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = 0; k < n_; ++k) {
        if (i != k) worst = std::min(worst, v[i * n_ + i] - v[i * n_ + k]);
      }
    }
    return worst;
  }

  std::size_t n_, m_;
  Matrix vbar_;
  std::vector<double> value_;
  std::vector<std::size_t> owner_;
  bool stop_ = false;
};

double row_value(std::span<const double> vbar, std::span<const double> x) {
  metrics::StableSum s;
  for (std::size_t j = 0; j < vbar.size(); ++j) s.add(vbar[j] * x[j]);
  return s.value();
}

}  // namespace

EfExistence brute_force_ef_exists(const Instance& inst) {
  guard_size(inst);
  EfExistence out;
  Enumerator(inst).run([&](const std::vector<std::size_t>& owner, double margin) {
    if (margin < -metrics::kEnvyTol) return true;
    out.exists = true;
    out.witness = IntegralAllocation{inst.n, owner};
    return false;
  });
  return out;
}

MinEnvyResult exhaustive_min_envy(const Instance& inst) {
  guard_size(inst);
  MinEnvyResult out;
  double best = -std::numeric_limits<double>::infinity();
  Enumerator(inst).run([&](const std::vector<std::size_t>& owner, double margin) {
    if (margin > best) {
      best = margin;
      out.allocation = IntegralAllocation{inst.n, owner};
    }
    return true;
  });
  out.margin = best;
  return out;
}

const char* to_string(Family f) {
  switch (f) {
    case Family::kGrid: return "grid";
    case Family::kRandom: return "random";
    case Family::kScaling: return "scaling";
    case Family::kSwap: return "swap";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "grid") return Family::kGrid;
  if (name == "random") return Family::kRandom;
  if (name == "scaling") return Family::kScaling;
  if (name == "swap") return Family::kSwap;
  throw Error(ErrorCode::kInvalidParam, "unknown audit family '" + name + "'");
}

DeviationReport deviation_audit(const Instance& inst, const MechanismParams& params,
                                std::size_t agent, const AuditFamily& family) {
  require_valid(inst);
  if (agent >= inst.n) throw Error(ErrorCode::kInvalidParam, "agent index out of range");
  const auto norm = normalize(inst.values);
  const auto truthful = mech::construct_bid_profile(norm.vbar, params);
  const auto truthful_row = truthful.b.row(agent);

  auto allocate = [&](const Matrix& bids) {
    return inst.weights ? mech::weighted_fractional_allocation(bids, *inst.weights, params)
                        : mech::fractional_allocation(bids, params);
  };
  const auto vbar_i = norm.vbar.row(agent);

  DeviationReport rep;
  rep.agent = agent;
  rep.family = to_string(family.kind);
  rep.truthful_value = row_value(vbar_i, allocate(truthful.b).x.row(agent));
  rep.best_value = -std::numeric_limits<double>::infinity();

  Matrix bids = truthful.b;
  std::vector<double> scaled(inst.m);
  auto evaluate = [&](const std::vector<double>& report) {
    double total = 0.0;
    for (double v : report) total += v;
    if (!(total > 0.0)) return;  // a zero report has no normalization
    for (std::size_t j = 0; j < inst.m; ++j) scaled[j] = report[j] / total;
    const auto row = mech::construct_bids(scaled, params);
    for (std::size_t j = 0; j < inst.m; ++j) bids(agent, j) = row.bids[j];
    if (family.kind == Family::kScaling &&
        !std::equal(row.bids.begin(), row.bids.end(), truthful_row.begin())) {
      rep.bids_identical = false;
    }
    const double value = row_value(vbar_i, allocate(bids).x.row(agent));
    ++rep.evaluated;
    if (value > rep.best_value) {
      rep.best_value = value;
      rep.best_report = report;
    }
  };

  const auto own = inst.values.row(agent);
  const std::vector<double> truth(own.begin(), own.end());
  switch (family.kind) {
    case Family::kGrid: {
      evaluate(std::vector<double>(inst.m, 1.0));
      for (std::size_t j = 0; j < inst.m; ++j) {
        auto report = truth;
        for (int level = 0; level <= 10; ++level) {
          report[j] = level / 10.0;
          evaluate(report);
        }
      }
      break;
    }
    case Family::kRandom: {
      std::vector<double> report(inst.m);
      for (std::size_t c = 0; c < family.count; ++c) {
        CounterRng rng(family.seed, c);
        for (double& v : report) v = rng.uniform01();
        evaluate(report);
      }
      break;
    }
    case Family::kScaling: {
      for (int k = -6; k <= 6; ++k) {
        auto report = truth;
        for (double& v : report) v = std::ldexp(v, k);
        evaluate(report);
      }
      break;
    }
    case Family::kSwap: {
      for (std::size_t j = 0; j < inst.m; ++j) {
        for (std::size_t k = j + 1; k < inst.m; ++k) {
          auto report = truth;
          std::swap(report[j], report[k]);
          evaluate(report);
        }
      }
      break;
    }
  }
  if (rep.evaluated == 0) {
    rep.best_value = rep.truthful_value;
    rep.best_report = truth;
  }
  rep.gain = rep.best_value - rep.truthful_value;
  return rep;
}

UnbiasednessReport rounding_unbiasedness(const FractionalAllocation& x, const Matrix& vbar,
                                         std::size_t trials, std::uint64_t seed) {
  if (trials < 1000) throw Error(ErrorCode::kInvalidParam, "at least 1000 trials required");
  if (x.x.rows() != vbar.rows() || x.x.cols() != vbar.cols()) {
    throw Error(ErrorCode::kInvalidParam, "x and vbar shapes differ");
  }
  const std::size_t n = x.x.rows();
  UnbiasednessReport rep;
  rep.trials = trials;
  rep.expected.resize(n);
  std::vector<double> variance(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.expected[i] = row_value(vbar.row(i), x.x.row(i));
    metrics::StableSum var;
    for (std::size_t j = 0; j < vbar.cols(); ++j) {
      const double p = x.x(i, j);
      var.add(vbar(i, j) * vbar(i, j) * p * (1.0 - p));
    }
    variance[i] = std::max(0.0, var.value());
  }

  std::vector<metrics::StableSum> total(n);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto a = mech::randomized_rounding(x, derive_key(seed, t));
    std::vector<metrics::StableSum> value(n);
    for (std::size_t j = 0; j < a.owner.size(); ++j) value[a.owner[j]].add(vbar(a.owner[j], j));
    for (std::size_t i = 0; i < n; ++i) total[i].add(value[i].value());
  }

  const double T = static_cast<double>(trials);
  rep.empirical.resize(n);
  rep.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.empirical[i] = total[i].value() / T;
    const double diff = rep.empirical[i] - rep.expected[i];
    if (variance[i] > 0.0) {
      rep.z[i] = diff / std::sqrt(variance[i] / T);
    } else {
      rep.z[i] = std::abs(diff) <= kIdentityTol ? 0.0 : std::copysign(INFINITY, diff);
    }
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(rep.z[i]));
  }
  return rep;
}

}  // namespace prd::oracle
