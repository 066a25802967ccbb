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

#include "prd/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace prd::dist {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double draw_scalar(const DistributionSpec& spec, CounterRng& rng);

double draw_scalar(const IidUniform& u, CounterRng& rng) {
  return u.lo + (u.hi - u.lo) * rng.uniform01();
}

double draw_scalar(const IidBeta& b, CounterRng& rng) {
  std::gamma_distribution<double> ga(b.a, 1.0);
  std::gamma_distribution<double> gb(b.b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

double draw_scalar(const AtomicMixture& a, CounterRng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t k = 0; k < a.support.size(); ++k) {
    acc += a.probs[k];
    if (u < acc) return a.support[k];
  }
  // Rounding slack in the cumulative sum: fall back to the last atom with mass.
  for (std::size_t k = a.support.size(); k-- > 0;) {
    if (a.probs[k] > 0.0) return a.support[k];
  }
  return a.support.back();
}

double draw_scalar(const DistributionSpec& spec, CounterRng& rng) {
  return std::visit(
      Overloaded{
          [&](const IidUniform& u) { return draw_scalar(u, rng); },
          [&](const IidBeta& b) { return draw_scalar(b, rng); },
          [&](const AtomicMixture& a) { return draw_scalar(a, rng); },
          [&](const CommonShock&) -> double {
            throw Error(ErrorCode::kInvalidSpec, "common_shock cannot be drawn as a scalar");
          },
      },
      spec.kind);
}

}  // namespace

DistributionSpec uniform(double lo, double hi) { return {IidUniform{lo, hi}}; }
DistributionSpec beta(double a, double b) { return {IidBeta{a, b}}; }
DistributionSpec atomic(std::vector<double> support, std::vector<double> probs) {
  return {AtomicMixture{std::move(support), std::move(probs)}};
}
DistributionSpec common_shock(double rho, DistributionSpec base) {
  return {CommonShock{rho, std::make_shared<const DistributionSpec>(std::move(base))}};
}

void validate(const DistributionSpec& spec) {
  std::visit(
      Overloaded{
          [](const IidUniform& u) {
            if (!(u.lo >= 0.0 && u.hi <= 1.0 && u.lo <= u.hi)) {
              throw Error(ErrorCode::kInvalidSpec, "iid_uniform needs 0 <= lo <= hi <= 1");
            }
          },
          [](const IidBeta& b) {
            if (!(b.a > 0.0 && b.b > 0.0)) {
              throw Error(ErrorCode::kInvalidSpec, "iid_beta needs a, b > 0");
            }
          },
          [](const AtomicMixture& a) {
            if (a.support.empty() || a.support.size() != a.probs.size()) {
              throw Error(ErrorCode::kInvalidSpec,
                          "atomic_mixture needs matching non-empty support and probs");
            }
            double total = 0.0;
            for (std::size_t k = 0; k < a.support.size(); ++k) {
              if (!(a.support[k] >= 0.0 && a.support[k] <= 1.0)) {
                throw Error(ErrorCode::kInvalidSpec, "atomic_mixture support outside [0,1]");
              }
              if (!(a.probs[k] >= 0.0)) {
                throw Error(ErrorCode::kInvalidSpec, "atomic_mixture has negative probability");
              }
              total += a.probs[k];
            }
            if (std::abs(total - 1.0) > kIdentityTol) {
              throw Error(ErrorCode::kInvalidSpec, "atomic_mixture probabilities must sum to 1");
            }
          },
          [](const CommonShock& c) {
            if (!(c.rho >= 0.0 && c.rho <= 1.0)) {
              throw Error(ErrorCode::kInvalidSpec, "common_shock rho must lie in [0,1]");
            }
            if (!c.base) throw Error(ErrorCode::kInvalidSpec, "common_shock needs a base");
            if (std::holds_alternative<CommonShock>(c.base->kind)) {
              throw Error(ErrorCode::kInvalidSpec, "common_shock base must be a scalar law");
            }
            validate(*c.base);
          },
      },
      spec.kind);
}

void sample_column(const DistributionSpec& spec, CounterRng& rng, std::span<double> column) {
  if (const auto* shock = std::get_if<CommonShock>(&spec.kind)) {
    const double z = draw_scalar(*shock->base, rng);
    for (double& v : column) {
      const double u = draw_scalar(*shock->base, rng);
      v = std::clamp(shock->rho * z + (1.0 - shock->rho) * u, 0.0, 1.0);
    }
    return;
  }
  for (double& v : column) v = std::clamp(draw_scalar(spec, rng), 0.0, 1.0);
}

Instance sample_instance(const DistributionSpec& spec, std::size_t n, std::size_t m,
                         std::uint64_t seed) {
  validate(spec);
  if (n == 0 || m == 0) throw Error(ErrorCode::kInvalidParam, "n and m must be positive");
  Instance inst;
  inst.n = n;
  inst.m = m;
  inst.values = Matrix(n, m);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < m; ++j) {
    CounterRng rng(seed, j);
    sample_column(spec, rng, column);
    for (std::size_t i = 0; i < n; ++i) inst.values(i, j) = column[i];
  }
  return inst;
}

MomentEstimate estimate_moments(const DistributionSpec& spec, std::size_t n,
                                std::size_t samples, std::uint64_t seed) {
  validate(spec);
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "n must be positive");
  if (samples < 1000) throw Error(ErrorCode::kInvalidParam, "need at least 1000 samples");

  std::vector<double> column(n);
  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    CounterRng rng(seed, s);
    sample_column(spec, rng, column);
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += column[i];
      sumsq[i] += column[i] * column[i];
    }
  }

  const double N = static_cast<double>(samples);
  MomentEstimate est;
  est.samples = samples;
  est.mu.resize(n);
  est.mu_stderr.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    est.mu[i] = sum[i] / N;
    if (!(est.mu[i] > 0.0)) {
      throw Error(ErrorCode::kInvalidSpec, "marginal mean of agent " + std::to_string(i) +
                                               " is zero");
    }
    const double var = std::max(0.0, sumsq[i] / N - est.mu[i] * est.mu[i]);
    est.mu_stderr[i] = std::sqrt(var / N);
  }
  if (n < 2) return est;

  // Second pass regenerates the same columns from their counter streams.
  const std::size_t pairs = n * (n - 1) / 2;
  std::vector<double> dsum(pairs, 0.0), dsumsq(pairs, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    CounterRng rng(seed, s);
    sample_column(spec, rng, column);
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k, ++p) {
        const double d = std::abs(column[i] / est.mu[i] - column[k] / est.mu[k]);
        dsum[p] += d;
        dsumsq[p] += d * d;
      }
    }
  }
  est.delta_hat = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs; ++p) {
    const double mean = dsum[p] / N;
    if (mean < est.delta_hat) {
      est.delta_hat = mean;
      est.delta_stderr = std::sqrt(std::max(0.0, dsumsq[p] / N - mean * mean) / N);
    }
  }
  return est;
}

std::optional<AnalyticMoments> analytic_moments(const DistributionSpec& spec) {
  return std::visit(
      Overloaded{
          [](const IidUniform& u) -> std::optional<AnalyticMoments> {
            const double mu = 0.5 * (u.lo + u.hi);
            if (!(mu > 0.0)) return std::nullopt;
            // E|U - U'| = (hi - lo) / 3 for independent uniforms.
            return AnalyticMoments{mu, (u.hi - u.lo) / 3.0 / mu};
          },
          [](const IidBeta& b) -> std::optional<AnalyticMoments> {
            return AnalyticMoments{b.a / (b.a + b.b), std::nullopt};
          },
          [](const AtomicMixture& a) -> std::optional<AnalyticMoments> {
            double mu = 0.0;
            for (std::size_t k = 0; k < a.support.size(); ++k) mu += a.probs[k] * a.support[k];
            if (!(mu > 0.0)) return std::nullopt;
            double gap = 0.0;
            for (std::size_t s = 0; s < a.support.size(); ++s) {
              for (std::size_t t = 0; t < a.support.size(); ++t) {
                gap += a.probs[s] * a.probs[t] * std::abs(a.support[s] - a.support[t]);
              }
            }
            return AnalyticMoments{mu, gap / mu};
          },
          [](const CommonShock& c) -> std::optional<AnalyticMoments> {
            // A convex combination of [0,1] draws never needs the clamp, so the
            // mean is the base mean and the shared shock cancels in differences.
            auto base = analytic_moments(*c.base);
            if (!base) return std::nullopt;
            if (base->delta) base->delta = (1.0 - c.rho) * *base->delta;
            return base;
          },
      },
      spec.kind);
}

}  // namespace prd::dist
