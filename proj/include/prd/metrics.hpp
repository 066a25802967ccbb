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

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "prd/core.hpp"

namespace prd::metrics {

/// Tolerance below zero still accepted as envy-free.
inline constexpr double kEnvyTol = 1e-12;

/// vbar . A_i - vbar . A_k for item index sets.
double envy_margin(std::span<const double> vbar, std::span<const std::size_t> bundle_i,
                   std::span<const std::size_t> bundle_k);

struct EnvyCheck {
  bool envy_free = true;
  double min_margin = 1.0;  // reported as 1 when there is no pair to compare
};

/// value[i][k] = vbar_i . A_k, accumulated with compensated summation.
/// Throws kIncompleteAllocation when an owner is out of range or the length
/// differs from the item count.
std::vector<std::vector<double>> bundle_values(const Matrix& vbar, const IntegralAllocation& a);

EnvyCheck is_envy_free(const Instance& inst, const IntegralAllocation& a);

/// sum_j vbar_j (x_i_j - x_k_j).
double fractional_envy_margin(std::span<const double> vbar, std::span<const double> x_i,
                              std::span<const double> x_k);

/// Smallest fractional envy margin over ordered pairs i != k. With weights the
/// margin is vbar_i.x_i / w_i - vbar_i.x_k / w_k.
double min_fractional_envy_margin(const Matrix& vbar, const Matrix& x,
                                  std::span<const double> weights = {});

/// Relative entropy in nats; 0 ln 0 = 0. Throws kSupportMismatch when some
/// q_j = 0 < p_j.
double kl_divergence(std::span<const double> p, std::span<const double> q);

double tv_distance(std::span<const double> p, std::span<const double> q);

struct TypicalityReport {
  double epsilon = 0.0;
  bool epsilon_warning = false;            // epsilon >= delta/25
  std::vector<bool> t1_ok;                 // per agent
  std::vector<double> t1_slack;            // distance inside the band (negative: outside)
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // i < k
  std::vector<bool> t2_ok;                 // per pair
  std::vector<double> t2_slack;            // lhs - (1-eps) delta m

  bool typical() const;
};

/// Row-sum concentration around m mu_i and pairwise disagreement at least
/// (1-eps) delta m. Both conditions are symmetric, so pairs are unordered.
TypicalityReport check_typicality(const Instance& inst, std::span<const double> mu,
                                  double delta, double epsilon);

/// Default epsilon: strictly below delta/25.
double default_epsilon(double delta);

struct TheoryBounds {
  double delta_prime = 0.0;  // min(delta, 2 sqrt(C))
  double eps_prime = 0.0;    // min(1/2, delta'^2 / (16 C))
  double fem_lower = 0.0;    // delta'^2 / (4 n C)
  double em_half = 0.0;      // delta'^2 / (8 n C)
};
TheoryBounds theory_bounds(const MechanismParams& params, double delta, std::size_t n);

/// Weighted envy check: vbar_i(A_i)/w_i >= vbar_i(A_k)/w_k.
EnvyCheck is_wef(const Instance& inst, std::span<const double> weights,
                 const IntegralAllocation& a);

enum class Tail { kLower, kUpper };

/// exp(-eps^2 E / (2z)) for the lower tail, exp(-eps^2 E / (3z)) for the upper.
double chernoff_bound(double expectation, double epsilon, double z, Tail side);

/// Compensated (Neumaier) accumulator.
class StableSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace prd::metrics
