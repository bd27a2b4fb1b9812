// Copyright 2026 The twotier Authors. All Rights Reserved.
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
// =============================================================================

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "twotier/experiment.hpp"

namespace {

using namespace twotier;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

/// The default campaign, shared by several criteria.
struct DefaultCampaign {
  CampaignConfig config;
  CampaignOutcome outcome;
  std::string results_csv;
  std::size_t objective_calls = 0;
  double seconds = 0.0;
};

DefaultCampaign run_default_campaign(unsigned threads) {
  DefaultCampaign d;
  d.config = parse_config_text("");
  d.config.threads = threads;
  auto calls = std::make_shared<std::atomic<std::size_t>>(0);
  const auto start = std::chrono::steady_clock::now();
  d.outcome = run_campaign_in_memory(d.config, [calls](const TuningConfig& tc) {
    return [calls, inner = CartPoleObjective{tc.episodes, tc.rl}](const HyperParamPoint& p, std::uint64_t seed) {
      ++*calls;
      return inner(p, seed);
    };
  });
  d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  d.objective_calls = *calls;
  d.results_csv = format_results(d.outcome.rows);
  return d;
}

double mean_final_incumbent(const CampaignOutcome& out, const std::string& opt) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : out.reports) {
    if (r.optimizer == opt) {
      sum += r.incumbent.back();
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : -1e300;
}

Check fig1_reproduction(const DefaultCampaign& d) {
  Check c;
  c.expect(d.outcome.failures.empty(), "campaign failures");
  const double two = mean_final_incumbent(d.outcome, "two_tier");
  const double rnd = mean_final_incumbent(d.outcome, "random");
  const double mono = mean_final_incumbent(d.outcome, "mono_bo");
  char buf[256];
  std::snprintf(buf, sizeof buf, "two_tier=%.3f random=%.3f mono_bo=%.3f wall=%.1fs", two, rnd, mono, d.seconds);
  c.expect(two >= std::max(rnd, mono) - 5.0, "two-tier below best baseline - 5");
  c.expect(d.seconds < 30 * 60, "wall time above 30 minutes");
  if (c.ok) c.detail = buf;
  else c.detail += std::string(" (") + buf + ")";
  return c;
}

Check budget_accounting(const DefaultCampaign& d) {
  Check c;
  const std::size_t expected_reports = d.config.optimizers.size() * d.config.repetitions;
  c.expect(d.outcome.reports.size() == expected_reports, "missing reports");
  c.expect(d.objective_calls == expected_reports * 30, "objective called " + std::to_string(d.objective_calls) + " times");
  for (const auto& r : d.outcome.reports) {
    c.expect(r.evaluations.size() == 30, r.optimizer + " evaluated " + std::to_string(r.evaluations.size()));
    if (r.optimizer == "two_tier") {
      c.expect(r.structural_proposals == 10 && r.ei_proposals == 20, "two-tier proposal split");
    }
    if (r.optimizer == "mono_bo") c.expect(r.ei_proposals == 25, "mono-BO proposal count");
  }
  if (c.ok) c.detail = std::to_string(d.objective_calls) + " evaluations, 30 per campaign, two-tier 10 + 20";
  return c;
}

Check bocs_oracle() {
  Check c;
  auto trial = [](std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd coef(static_cast<Eigen::Index>(n_features(d)));
    for (Eigen::Index i = 0; i < coef.size(); ++i) coef[i] = standard_normal(rng);
    const Bits x = sa_maximize(coef, d, rng);
    return std::abs(quadratic_value(coef, x) - testing::exhaustive_max(coef, d)) < 1e-12;
  };
  int hits4 = 0, hits10 = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    hits4 += trial(4, 5000 + s);
    hits10 += trial(10, 9000 + s);
  }
  c.expect(hits4 == 100, "d=4 " + std::to_string(hits4) + "/100");
  c.expect(hits10 >= 95, "d=10 " + std::to_string(hits10) + "/100");
  if (c.ok) c.detail = "d=4 " + std::to_string(hits4) + "/100, d=10 " + std::to_string(hits10) + "/100";
  return c;
}

Check gp_suite() {
  Check c;
  Rng rng(2024);
  const BoxSpace line({{"x", 0.0, 1.0, false}});
  {
    std::vector<VectorXd> xs;
    std::vector<double> ys;
    for (int i = 0; i < 8; ++i) {
      xs.push_back(VectorXd::Constant(1, uniform01(rng)));
      ys.push_back(uniform(rng, -5, 5));
    }
    GpOptions o;
    o.fixed = KernelParams{{0.1}, 1.0, 1e-8};
    const GpModel m = GpModel::fit(line, xs, ys, o);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(m.posterior(xs[i]).mean - ys[i]));
    c.expect(worst < 1e-3, "interpolation error " + std::to_string(worst));
  }
  c.expect(expected_improvement(0.5, 0.0, 1.0) == 0.0 && expected_improvement(1.0, 0.0, 1.0) == 0.0, "EI with sigma=0");
  c.expect(std::abs(expected_improvement(3.0, 1.0, 3.0) - 0.3989423) <= 1e-6, "EI(mu=f_best, sigma=1)");

  const BoxSpace box({{"a", 0, 1, false}, {"b", 0, 1, false}, {"c", -1, 1, false}});
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<VectorXd> xs;
    std::vector<double> ys;
    for (int i = 0; i < 20; ++i) {
      xs.push_back(box.sample(rng));
      ys.push_back(uniform(rng, -100, 100));
    }
    const GpModel m = GpModel::fit(box, xs, ys);
    Eigen::MatrixXd xu(20, 3);
    Eigen::VectorXd ystd(20);
    for (int i = 0; i < 20; ++i) {
      xu.row(i) = box.to_unit(xs[i]).transpose();
      ystd[i] = (ys[i] - m.offset()) / m.scale();
    }
    for (int q = 0; q < 20; ++q) {
      const VectorXd x = box.sample(rng);
      const auto ref = testing::dense_gp_predict(xu, ystd, m.kernel().length_scales, m.kernel().signal_variance,
                                                 m.kernel().noise_variance + m.jitter(), box.to_unit(x));
      const Prediction p = m.posterior(x);
      worst = std::max(worst, std::abs((p.mean - m.offset()) / m.scale() - ref.mean));
      worst = std::max(worst, std::abs(p.variance / (m.scale() * m.scale()) - std::max(ref.variance - m.jitter(), 0.0)));
    }
  }
  c.expect(worst <= 1e-8, "dense-solve mismatch " + std::to_string(worst));
  if (c.ok) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "interpolation, EI closed forms, dense-solve max diff %.2e", worst);
    c.detail = buf;
  }
  return c;
}

Check rl_correctness() {
  Check c;
  const double gamma = 0.6;
  const auto optimal = testing::chain_optimal_policy(gamma);
  int matches = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AlgorithmParams p;
    p.alpha = 0.1;
    p.epsilon = 0.2;
    p.gamma = gamma;
    Agent agent({Algorithm::QLearning, false, Policy::EpsilonGreedy, false}, p, testing::ChainEnv::kStates, 2);
    testing::ChainEnv env;
    Rng rng(100 + seed);
    for (int ep = 0; ep < 2000; ++ep) run_episode(env, agent, rng);
    bool same = true;
    for (std::size_t s = 1; s <= 3; ++s) same &= (agent.q(s, 1) > agent.q(s, 0) ? 1u : 0u) == optimal[s - 1];
    matches += same;
  }
  c.expect(matches == 10, "chain policy matched " + std::to_string(matches) + "/10");

  bool identical = true;
  for (Algorithm alg : {Algorithm::QLearning, Algorithm::Sarsa}) {
    Rng rng(55);
    QTable plain(8, 2), traced(8, 2);
    TraceTable e1(8, 2), e2(8, 2);
    AlgorithmParams p;
    p.lambda = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Transition t{uniform_index(rng, 8), uniform_index(rng, 2), uniform(rng, -200, 1), uniform_index(rng, 8),
                         uniform_index(rng, 2), uniform01(rng) < 0.05};
      td_update(plain, e1, t, {alg, false, Policy::EpsilonGreedy, false}, p);
      td_update(traced, e2, t, {alg, true, Policy::EpsilonGreedy, false}, p);
    }
    identical &= std::memcmp(plain.flat().data(), traced.flat().data(), 16 * sizeof(double)) == 0;
  }
  c.expect(identical, "lambda=0 traced update differs from untraced");
  if (c.ok) c.detail = "chain 10/10 seeds, lambda=0 bitwise identical";
  return c;
}

Check physics_oracle() {
  Check c;
  const CartPoleStep r = CartPole::transition({0, 0, 0, 0}, Push::Right, 0, 200);
  c.expect(std::abs(r.state.x) <= 1e-10 && std::abs(r.state.theta) <= 1e-10, "position/angle moved");
  c.expect(std::abs(r.state.x_dot - 0.1951219512195122) <= 1e-10, "x_dot");
  c.expect(std::abs(r.state.theta_dot + 0.2926829268292683) <= 1e-10, "theta_dot");
  c.expect(r.reward == 1.0 && !r.terminal && !r.truncated, "surviving step reward");

  const CartPoleStep fail = CartPole::transition({0, 0, 0.214, 0.1}, Push::Left, 0, 200);
  c.expect(fail.reward == -200.0 && fail.terminal, "failure reward");
  const CartPoleStep last = CartPole::transition({0, 0, 0, 0}, Push::Left, 199, 200);
  c.expect(last.reward == 1.0 && last.truncated && !last.terminal, "truncation at step 200");

  // A constant push fails; its return is (surviving steps) - 200.
  CartPole env;
  Rng rng(3);
  env.reset(rng);
  double total = 0.0;
  int steps = 0;
  CartPoleStep s;
  do {
    s = env.step(Push::Left);
    total += s.reward;
    ++steps;
  } while (!s.terminal && !s.truncated);
  c.expect(s.terminal && total == (steps - 1) - 200.0, "failing episode return");
  if (c.ok) c.detail = "Euler step within 1e-10, +1 / -200 / 200-step truncation";
  return c;
}

Check determinism(const DefaultCampaign& d) {
  Check c;
  const DefaultCampaign again = run_default_campaign(1);
  const DefaultCampaign parallel = run_default_campaign(4);
  c.expect(again.results_csv == d.results_csv, "rerun differs");
  c.expect(parallel.results_csv == d.results_csv, "4-thread run differs");
  c.expect(format_summary(parallel.outcome.summary) == format_summary(d.outcome.summary), "summary differs");
  c.expect(format_summary(summarize(parse_results(d.results_csv))) == format_summary(d.outcome.summary),
           "summary not reproducible from results.csv");
  if (c.ok) c.detail = "results.csv byte-identical over 3 runs (threads 1, 1, 4), " + std::to_string(d.results_csv.size()) + " bytes";
  return c;
}

Check monotonicity(const DefaultCampaign& d) {
  Check c;
  std::size_t checked = 0;
  for (const auto& r : d.outcome.reports) {
    for (std::size_t i = 1; i < r.incumbent.size(); ++i) {
      c.expect(r.incumbent[i] >= r.incumbent[i - 1], r.optimizer + " seed " + std::to_string(r.seed));
    }
    ++checked;
  }
  if (c.ok) c.detail = std::to_string(checked) + " incumbent traces non-decreasing";
  return c;
}

}  // namespace

int main() {
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  const DefaultCampaign campaign = run_default_campaign(threads);

  const std::pair<const char*, std::function<Check()>> criteria[] = {
      {"fig1-qualitative-reproduction", [&] { return fig1_reproduction(campaign); }},
      {"budget-accounting", [&] { return budget_accounting(campaign); }},
      {"bocs-oracle-equivalence", bocs_oracle},
      {"gp-analytic-suite", gp_suite},
      {"rl-correctness", rl_correctness},
      {"physics-oracle", physics_oracle},
      {"determinism", [&] { return determinism(campaign); }},
      {"incumbent-monotonicity", [&] { return monotonicity(campaign); }},
  };

  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << name << " : " << c.detail << std::endl;
    failed += !c.ok;
  }
  std::cout << (failed ? "acceptance: FAILED" : "acceptance: all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
