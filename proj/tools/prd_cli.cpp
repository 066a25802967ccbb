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

// prd: command-line front end.
//
//   prd gen     --n 5 --m 200 [--spec dist.json] --seed 7 --out inst.json
//   prd run     --in inst.json [--mode plain|weighted|groups] --seed 7 --out res.json
//   prd mc      --config cfg.json [--out sweep.csv] [--trials N] [--seed S] [--mode M]
//   prd deviate --in inst.json --agent 0 --family random --count 1000
//   prd types   --in types.json --out alloc.json
//   prd oracle  --in inst.json --tool ef|min-envy
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "prd/distributions.hpp"
#include "prd/groups.hpp"
#include "prd/harness.hpp"
#include "prd/io.hpp"
#include "prd/mechanism.hpp"
#include "prd/metrics.hpp"
#include "prd/oracle.hpp"
#include "prd/types_ext.hpp"

namespace {

using prd::io::Json;

struct ParamFlags {
  std::optional<double> l, mu_l, delta, epsilon;
};

void add_param_flags(CLI::App* app, ParamFlags& p) {
  app->add_option("--l", p.l, "bid floor constant l");
  app->add_option("--mu-l", p.mu_l, "lower bound on agents' mean values");
  app->add_option("--delta", p.delta, "distinctness constant");
  app->add_option("--epsilon", p.epsilon, "typicality tolerance");
}

void emit(const std::string& out, const Json& j) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    prd::io::write_json_file(out, j);
  }
}

// Row mean as a stand-in for mu, and the smallest pairwise disagreement per
// item as a stand-in for delta, both read off the instance itself.
struct InstanceMoments {
  std::vector<double> mu;
  double delta = 0.0;
};

InstanceMoments instance_moments(const prd::Instance& inst) {
  InstanceMoments out;
  const double m = static_cast<double>(inst.m);
  for (std::size_t i = 0; i < inst.n; ++i) {
    double s = 0.0;
    for (double v : inst.values.row(i)) s += v;
    out.mu.push_back(s / m);
  }
  double best = 1.0;
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (std::size_t k = i + 1; k < inst.n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < inst.m; ++j) {
        s += std::abs(inst.values(i, j) / out.mu[i] - inst.values(k, j) / out.mu[k]);
      }
      best = std::min(best, s / m);
    }
  }
  out.delta = std::clamp(best, 1e-3, 0.999);
  return out;
}

prd::MechanismParams params_for(const prd::Instance& inst, const ParamFlags& flags,
                                double beta = 1.0) {
  const auto est = instance_moments(inst);
  const double delta = flags.delta.value_or(est.delta);
  const double mu_l =
      flags.mu_l.value_or(std::clamp(*std::min_element(est.mu.begin(), est.mu.end()), 1e-6, 1.0));
  const double l = flags.l.value_or(delta / 25.0);
  return prd::MechanismParams::from_bounds(l, mu_l, delta, inst.m, beta);
}

int exit_code(const prd::Error& e) { return e.code() == prd::ErrorCode::kIoError ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proportional response with dummy: envy-free allocation toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out;
  std::string in;
  ParamFlags params;

  // gen
  auto* gen = app.add_subcommand("gen", "sample an instance to JSON");
  std::size_t gen_n = 5, gen_m = 100;
  std::string spec_path;
  gen->add_option("--n", gen_n, "agents")->check(CLI::PositiveNumber);
  gen->add_option("--m", gen_m, "items")->check(CLI::PositiveNumber);
  gen->add_option("--spec", spec_path, "distribution JSON (default uniform on [0,1])");
  gen->add_option("--seed", seed, "seed");
  gen->add_option("--out", out, "output path (stdout if omitted)");

  // run
  auto* run = app.add_subcommand("run", "allocate an instance");
  std::string mode = "plain";
  run->add_option("--in", in, "instance JSON")->required();
  run->add_option("--mode", mode, "plain | weighted | groups")
      ->check(CLI::IsMember({"plain", "weighted", "groups"}));
  run->add_option("--seed", seed, "rounding seed");
  run->add_option("--out", out, "output path (stdout if omitted)");
  add_param_flags(run, params);

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo sweep to CSV");
  std::string config_path;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> mc_seed;
  std::optional<std::string> mc_mode;
  std::optional<std::size_t> workers;
  mc->add_option("--config", config_path, "config JSON")->required();
  mc->add_option("--out", out, "CSV output path (overrides the config)");
  mc->add_option("--trials", trials, "trials per m value");
  mc->add_option("--seed", mc_seed, "master seed");
  mc->add_option("--mode", mc_mode, "plain | weighted | groups | types");
  mc->add_option("--workers", workers, "worker threads (0: all cores)");
  add_param_flags(mc, params);

  // deviate
  auto* dev = app.add_subcommand("deviate", "truthfulness audit for one agent");
  std::size_t agent = 0, count = 1000;
  std::string family = "random";
  dev->add_option("--in", in, "instance JSON")->required();
  dev->add_option("--agent", agent, "agent index");
  dev->add_option("--family", family, "grid | random | scaling | swap")
      ->check(CLI::IsMember({"grid", "random", "scaling", "swap"}));
  dev->add_option("--count", count, "random misreports");
  dev->add_option("--seed", seed, "seed for random misreports");
  dev->add_option("--out", out, "output path (stdout if omitted)");
  add_param_flags(dev, params);

  // types
  auto* typ = app.add_subcommand("types", "agent-type / good-type allocation");
  typ->add_option("--in", in, "types instance JSON")->required();
  typ->add_option("--out", out, "output path (stdout if omitted)");

  // oracle
  auto* orc = app.add_subcommand("oracle", "exhaustive checks on small instances");
  std::string tool = "ef";
  orc->add_option("--in", in, "instance JSON")->required();
  orc->add_option("--tool", tool, "ef | min-envy")->check(CLI::IsMember({"ef", "min-envy"}));
  orc->add_option("--out", out, "output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) {
      const auto spec = spec_path.empty() ? prd::dist::uniform()
                                          : prd::io::spec_from_json(prd::io::read_json_file(spec_path));
      emit(out, prd::io::to_json(prd::dist::sample_instance(spec, gen_n, gen_m, seed)));
    } else if (*run) {
      auto inst = prd::io::instance_from_json(prd::io::read_json_file(in));
      if (mode == "groups") {
        const auto gs = prd::groups::GroupStructure::from_instance(inst);
        const auto p = params_for(inst, params, gs.beta);
        inst.weights.reset();
        emit(out, prd::io::to_json(prd::groups::wefg_allocate(inst, gs, p, seed)));
      } else {
        if (mode == "plain") inst.weights.reset();
        if (mode == "weighted" && !inst.weights) {
          throw prd::Error(prd::ErrorCode::kInvalidInstance, "weighted mode needs weights");
        }
        emit(out, prd::io::to_json(prd::mech::run_prd(inst, params_for(inst, params), seed)));
      }
    } else if (*mc) {
      auto cfg = prd::io::config_from_json(prd::io::read_json_file(config_path));
      if (!out.empty()) cfg.output = out;
      if (trials) cfg.trials = *trials;
      if (mc_seed) cfg.seed = *mc_seed;
      if (mc_mode) cfg.mode = prd::harness::mode_from_string(*mc_mode);
      if (workers) cfg.workers = *workers;
      if (params.l) cfg.overrides.l = params.l;
      if (params.mu_l) cfg.overrides.mu_l = params.mu_l;
      if (params.delta) cfg.overrides.delta = params.delta;
      if (params.epsilon) cfg.overrides.epsilon = params.epsilon;
      const auto res = prd::harness::monte_carlo(cfg);
      if (cfg.output.empty()) std::cout << prd::harness::to_csv(res.records);
      std::cerr << prd::harness::summary_csv(res.summary);
    } else if (*dev) {
      const auto inst = prd::io::instance_from_json(prd::io::read_json_file(in));
      auto fam = prd::oracle::AuditFamily{prd::oracle::family_from_string(family), count, seed};
      emit(out, prd::io::to_json(
                    prd::oracle::deviation_audit(inst, params_for(inst, params), agent, fam)));
    } else if (*typ) {
      const auto ti = prd::io::types_from_json(prd::io::read_json_file(in));
      emit(out, prd::io::to_json(prd::types::allocate_types(ti)));
    } else if (*orc) {
      const auto inst = prd::io::instance_from_json(prd::io::read_json_file(in));
      if (tool == "ef") {
        emit(out, prd::io::to_json(prd::oracle::brute_force_ef_exists(inst)));
      } else {
        emit(out, prd::io::to_json(prd::oracle::exhaustive_min_envy(inst)));
      }
    }
  } catch (const prd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
