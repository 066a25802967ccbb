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

#include "prd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "prd/groups.hpp"
#include "prd/mechanism.hpp"
#include "prd/metrics.hpp"
#include "prd/rng.hpp"
#include "prd/types_ext.hpp"

namespace prd::harness {

namespace {

// Stream labels for seeds derived from the master seed or a trial seed.
constexpr std::uint64_t kMomentsLabel = 0x6d6f6d656e7473ULL;
constexpr std::uint64_t kMuFLabel = 0x6d755f66ULL;
constexpr std::uint64_t kRoundingLabel = 0x726f756e64ULL;

constexpr std::size_t kMomentSamples = 200'000;
constexpr std::size_t kMuFSamples = 1'000'000;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void run_plain(const ExperimentConfig& cfg, const Model& model, const Instance& inst,
               std::uint64_t seed, TrialRecord& rec) {
  const double l = cfg.overrides.l.value_or(model.delta / 25.0);
  const double eps = cfg.overrides.epsilon.value_or(metrics::default_epsilon(model.delta));
  const auto params = MechanismParams::from_bounds(l, model.mu_l, model.delta, inst.m);

  Instance run = inst;
  if (cfg.mode == Mode::kWeighted) run.weights = cfg.weights;
  rec.typical = metrics::check_typicality(run, model.mu, model.delta, eps).typical();
  const auto res = mech::run_prd(run, params, derive_key(seed, kRoundingLabel));
  const auto norm = normalize(run.values);

  if (cfg.mode == Mode::kPlain) {
    const auto ef = metrics::is_envy_free(run, res.allocation);
    rec.ef = ef.envy_free;
    rec.min_em = ef.min_margin;
    rec.min_fem = metrics::min_fractional_envy_margin(norm.vbar, res.x.x);
    rec.fem_lower = metrics::theory_bounds(params, model.delta, run.n).fem_lower;
  } else {
    const auto wef = metrics::is_wef(run, *cfg.weights, res.allocation);
    const auto ef = metrics::is_envy_free(run, res.allocation);
    rec.ef = wef.envy_free;
    rec.min_em = wef.min_margin;
    rec.min_fem = metrics::min_fractional_envy_margin(norm.vbar, res.x.x, *cfg.weights);
    rec.fem_lower = kNaN;
    rec.extra = "wef_margin=" + format_double(wef.min_margin) +
                ";unweighted_ef=" + (ef.envy_free ? "1" : "0");
  }
}

void run_groups(const ExperimentConfig& cfg, const Model& model, const Instance& inst,
                std::uint64_t seed, TrialRecord& rec) {
  Instance run = inst;
  run.groups = cfg.groups;
  run.weights = cfg.weights;
  const auto gs = groups::GroupStructure::from_instance(run);
  run.weights.reset();
  run.groups.reset();
  const auto params = MechanismParams::from_bounds(model.group_l, model.mu_l, model.delta,
                                                   inst.m, gs.beta);
  const double mu = mean_of(model.mu);
  rec.typical = groups::check_wefg_typicality(run, gs, mu, model.delta, model.group_epsilon,
                                              model.group_l, model.mu_f)
                    .typical();
  const auto res = groups::wefg_allocate(run, gs, params, derive_key(seed, kRoundingLabel));
  const auto wefg = groups::is_wefg(run, gs, res.group_bundles);
  rec.ef = wefg.envy_free;
  rec.min_em = wefg.min_margin;
  const auto norm = normalize(run.values);
  rec.min_fem = metrics::min_fractional_envy_margin(norm.vbar, res.x.x, gs.individual_weights());
  rec.fem_lower = kNaN;
  rec.extra = "wefg_margin=" + format_double(wefg.min_margin) +
              ";beta=" + format_double(gs.beta);
}

void run_types(const ExperimentConfig& cfg, const Instance& inst, TrialRecord& rec) {
  types::TypesInstance ti;
  ti.d = inst.n;
  ti.t = cfg.types_t;
  ti.agents_per_type.assign(inst.n, 1);
  ti.values = inst.values;
  const std::int64_t bound = types::types_threshold(ti);
  const auto per_type = static_cast<std::int64_t>((inst.m + ti.t - 1) / ti.t);
  ti.items_per_type.assign(ti.t, std::max(per_type, bound));
  ti.nu = bound;
  const auto alloc = types::allocate_types(ti);
  const auto ef = types::counts_envy_check(ti, alloc);
  rec.typical = per_type >= bound;
  rec.ef = ef.envy_free;
  rec.min_em = ef.min_margin;
  rec.min_fem = kNaN;
  rec.fem_lower = kNaN;
  rec.extra = "nu=" + std::to_string(bound) + ";items_per_type=" +
              std::to_string(ti.items_per_type[0]);
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kPlain: return "plain";
    case Mode::kWeighted: return "weighted";
    case Mode::kGroups: return "groups";
    case Mode::kTypes: return "types";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  if (name == "plain") return Mode::kPlain;
  if (name == "weighted") return Mode::kWeighted;
  if (name == "groups") return Mode::kGroups;
  if (name == "types") return Mode::kTypes;
  throw Error(ErrorCode::kInvalidParam, "unknown mode '" + name + "'");
}

std::vector<std::size_t> ExperimentConfig::resolved_m() const {
  if (!m_values.empty()) return m_values;
  if (!m_coefficient) return {};
  const double nd = static_cast<double>(n);
  return {static_cast<std::size_t>(std::ceil(*m_coefficient * nd * std::log(nd)))};
}

void ExperimentConfig::validate() const {
  dist::validate(spec);
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "n must be positive");
  if (trials == 0) throw Error(ErrorCode::kInvalidParam, "trials must be at least 1");
  const auto ms = resolved_m();
  if (ms.empty()) throw Error(ErrorCode::kInvalidParam, "no m values configured");
  for (std::size_t m : ms) {
    if (m == 0) throw Error(ErrorCode::kInvalidParam, "m values must be positive");
  }
  if (weights) {
    if (weights->size() != n) throw Error(ErrorCode::kInvalidParam, "one weight per agent");
    for (double w : *weights) {
      if (!(w > 0.0)) throw Error(ErrorCode::kNonpositiveWeight, "weights must be positive");
    }
  }
  if (mode == Mode::kWeighted && !weights) {
    throw Error(ErrorCode::kInvalidParam, "weighted mode needs weights");
  }
  if (groups && groups->size() != n) {
    throw Error(ErrorCode::kInvalidParam, "one group index per agent");
  }
  if (mode == Mode::kTypes && types_t == 0) {
    throw Error(ErrorCode::kInvalidParam, "types mode needs types_t >= 1");
  }
}

Model resolve_model(const ExperimentConfig& cfg) {
  cfg.validate();
  Model model;
  const auto analytic = dist::analytic_moments(cfg.spec);
  std::optional<dist::MomentEstimate> estimate;
  if (!analytic || !analytic->delta) {
    estimate = dist::estimate_moments(cfg.spec, std::max<std::size_t>(cfg.n, 2), kMomentSamples,
                                      derive_key(cfg.seed, kMomentsLabel));
  }
  if (analytic) {
    model.mu.assign(cfg.n, analytic->mu);
  } else {
    model.mu.assign(estimate->mu.begin(), estimate->mu.begin() + static_cast<long>(cfg.n));
  }
  model.delta = cfg.overrides.delta.value_or(analytic && analytic->delta ? *analytic->delta
                                                                         : estimate->delta_hat);
  if (!(model.delta > 0.0)) throw Error(ErrorCode::kInvalidSpec, "distribution has delta = 0");
  model.mu_l = cfg.overrides.mu_l.value_or(*std::min_element(model.mu.begin(), model.mu.end()));

  if (cfg.mode == Mode::kGroups) {
    Instance shape;
    shape.n = cfg.n;
    shape.groups = cfg.groups;
    shape.weights = cfg.weights;
    const auto gs = groups::GroupStructure::from_instance(shape);
    const double mu = mean_of(model.mu);
    const auto defaults = groups::group_defaults(model.delta, mu);
    model.group_l = cfg.overrides.l.value_or(defaults.l);
    model.group_epsilon = cfg.overrides.epsilon.value_or(defaults.epsilon);
    const double floor = (model.group_l / gs.beta) * mu * (1.0 - model.group_epsilon / gs.beta);
    model.mu_f = groups::estimate_mu_f(cfg.spec, floor, kMuFSamples,
                                       derive_key(cfg.seed, kMuFLabel)).mean;
  }
  return model;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial, std::size_t m) {
  return derive_key(master, trial, m);
}

TrialRecord run_trial(const ExperimentConfig& cfg, const Model& model, std::size_t m,
                      std::size_t trial) {
  TrialRecord rec;
  rec.n = cfg.n;
  rec.m = m;
  rec.trial = trial;
  rec.seed = trial_seed(cfg.seed, trial, m);
  rec.mode = to_string(cfg.mode);
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto inst = dist::sample_instance(cfg.spec, cfg.n, m, rec.seed);
    switch (cfg.mode) {
      case Mode::kPlain:
      case Mode::kWeighted: run_plain(cfg, model, inst, rec.seed, rec); break;
      case Mode::kGroups: run_groups(cfg, model, inst, rec.seed, rec); break;
      case Mode::kTypes: run_types(cfg, inst, rec); break;
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.typical = false;
    rec.ef = false;
    rec.min_em = rec.min_fem = rec.fem_lower = kNaN;
    rec.extra = "error:" + sanitize(e.what());
  }
  if (cfg.timing) {
    rec.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  }
  return rec;
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  const auto model = resolve_model(cfg);
  return run_trial(cfg, model, cfg.resolved_m().front(), trial);
}

Interval wilson_interval(std::size_t successes, std::size_t total, double z) {
  if (total == 0) return {0.0, 1.0};
  const double N = static_cast<double>(total);
  const double p = static_cast<double>(successes) / N;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / N;
  const double centre = (p + z2 / (2.0 * N)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / N + z2 / (4.0 * N * N)) / denom;
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == total ? 1.0 : std::min(1.0, centre + half)};
}

std::vector<MSummary> summarize(const std::vector<TrialRecord>& records) {
  std::vector<MSummary> out;
  for (const auto& r : records) {
    if (out.empty() || out.back().m != r.m) {
      out.push_back({});
      out.back().m = r.m;
    }
    MSummary& s = out.back();
    ++s.trials;
    if (r.failed) ++s.failed;
    if (r.ef) ++s.ef;
    if (r.typical) ++s.typical;
    if (r.typical && !std::isnan(r.fem_lower) && r.min_fem < r.fem_lower - 1e-9) {
      ++s.fem_violations;
    }
  }
  for (auto& s : out) {
    const double N = static_cast<double>(s.trials);
    s.ef_rate = static_cast<double>(s.ef) / N;
    s.ef_ci = wilson_interval(s.ef, s.trials);
    s.typical_rate = static_cast<double>(s.typical) / N;
    s.typical_ci = wilson_interval(s.typical, s.trials);
  }
  return out;
}

McResult monte_carlo(const ExperimentConfig& cfg) {
  const auto model = resolve_model(cfg);
  auto ms = cfg.resolved_m();
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  McResult res;
  res.records.resize(ms.size() * cfg.trials);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t job = next++; job < res.records.size(); job = next++) {
      res.records[job] = run_trial(cfg, model, ms[job / cfg.trials], job % cfg.trials);
    }
  };
  std::size_t workers = cfg.workers == 0 ? std::thread::hardware_concurrency() : cfg.workers;
  workers = std::clamp<std::size_t>(workers, 1, res.records.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  res.summary = summarize(res.records);
  if (!cfg.output.empty()) {
    write_text(cfg.output, to_csv(res.records));
    write_text(cfg.output + ".summary.csv", summary_csv(res.summary));
  }
  return res;
}

std::string to_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.n << ',' << r.m << ',' << r.trial << ',' << r.seed << ',' << (r.typical ? 1 : 0)
       << ',' << (r.ef ? 1 : 0) << ',' << format_double(r.min_em) << ','
       << format_double(r.min_fem) << ',' << format_double(r.fem_lower) << ','
       << format_double(r.runtime_ms) << ',' << r.mode << ',' << sanitize(r.extra) << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<MSummary>& summary) {
  std::ostringstream os;
  os << "m,trials,failed,ef,ef_rate,ef_lo,ef_hi,typical,typical_rate,typical_lo,typical_hi,"
        "fem_violations\n";
  for (const auto& s : summary) {
    os << s.m << ',' << s.trials << ',' << s.failed << ',' << s.ef << ','
       << format_double(s.ef_rate) << ',' << format_double(s.ef_ci.lo) << ','
       << format_double(s.ef_ci.hi) << ',' << s.typical << ',' << format_double(s.typical_rate)
       << ',' << format_double(s.typical_ci.lo) << ',' << format_double(s.typical_ci.hi) << ','
       << s.fem_violations << '\n';
  }
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path + "' failed");
}

}  // namespace prd::harness
