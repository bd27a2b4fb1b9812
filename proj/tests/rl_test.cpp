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

#include <gtest/gtest.h>

#include <cstring>

#include "oracles.hpp"
#include "twotier/rl.hpp"

namespace twotier {
namespace {

StructuralParams structure(Algorithm alg, bool traces = false, Policy pol = Policy::EpsilonGreedy, bool decay = false) {
  return {alg, traces, pol, decay};
}

TEST(Softmax, EqualValuesGiveUniform) {
  const std::vector<double> q{0.0, 0.0};
  for (double tau : {0.05, 1.0, 5.0}) {
    const auto p = softmax_probabilities(q, tau);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
  }
}

TEST(Softmax, MatchesBoltzmannFormula) {
  const std::vector<double> q{1.0, 0.0};
  const auto p = softmax_probabilities(q, 0.1);
  EXPECT_NEAR(p[0], 0.9999546021312976, 1e-12);
}

TEST(Softmax, ProbabilitiesFormADistribution) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> q(2 + uniform_index(rng, 5));
    for (double& v : q) v = uniform(rng, -1.0, 1.0);
    const double tau = uniform(rng, 0.05, 5.0);
    const auto p = softmax_probabilities(q, tau);
    double total = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, SamplingFollowsDistribution) {
  QTable q(1, 3);
  q(0, 0) = 0.5;
  q(0, 1) = -0.2;
  q(0, 2) = 0.1;
  const auto p = softmax_probabilities(q.row(0), 0.7);
  Rng rng(3);
  std::array<int, 3> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[select_action(q, 0, structure(Algorithm::QLearning, false, Policy::Softmax), 0.0, 0.7, {}, rng)];
  for (std::size_t a = 0; a < 3; ++a) {
    const double se = std::sqrt(p[a] * (1 - p[a]) / n);
    EXPECT_NEAR(counts[a] / double(n), p[a], 4 * se);
  }
}

TEST(EpsilonGreedy, ZeroEpsilonIsGreedy) {
  QTable q(1, 2);
  q(0, 0) = 5.0;
  q(0, 1) = 1.0;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(select_action(q, 0, structure(Algorithm::QLearning), 0.0, 1.0, {}, rng), 0u);
}

TEST(EpsilonGreedy, GreedyFrequencyIsOneMinusEpsilon) {
  for (std::size_t n_actions : {2u, 4u}) {
    QTable q(1, n_actions);
    q(0, 1) = 2.0;
    Rng rng(7);
    const double eps = 0.3;
    const int n = 100000;
    int greedy = 0;
    for (int i = 0; i < n; ++i) greedy += select_action(q, 0, structure(Algorithm::Sarsa), eps, 1.0, {}, rng) == 1;
    const double se = std::sqrt(eps * (1 - eps) / n);
    EXPECT_NEAR(greedy / double(n), 1 - eps, 3 * se) << n_actions << " actions";
  }
}

TEST(EpsilonGreedy, ExplorationExcludesGreedyActionByDefault) {
  QTable q(1, 2);
  q(0, 0) = 1.0;
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(select_action(q, 0, structure(Algorithm::QLearning), 1.0, 1.0, {}, rng), 1u);

  RlOptions inclusive;
  inclusive.greedy_in_exploration = true;
  int zeros = 0;
  for (int i = 0; i < 10000; ++i) zeros += select_action(q, 0, structure(Algorithm::QLearning), 1.0, 1.0, inclusive, rng) == 0;
  EXPECT_NEAR(zeros / 10000.0, 0.5, 0.03);
}

TEST(EpsilonGreedy, TiesBrokenUniformly) {
  QTable q(1, 2);
  Rng rng(9);
  int zeros = 0;
  for (int i = 0; i < 10000; ++i) zeros += greedy_action(q, 0, rng) == 0;
  EXPECT_NEAR(zeros / 10000.0, 0.5, 0.03);
}

TEST(TdUpdate, ZeroBootstrapFromZeroTable) {
  for (Algorithm alg : {Algorithm::QLearning, Algorithm::Sarsa}) {
    QTable q(2, 2);
    TraceTable e(2, 2);
    AlgorithmParams p;
    p.alpha = 0.5;
    p.gamma = 0.9;
    td_update(q, e, {0, 1, 1.0, 1, 0, false}, structure(alg), p);
    EXPECT_DOUBLE_EQ(q(0, 1), 0.5);
  }
}

TEST(TdUpdate, ZeroLearningRateLeavesTableUnchanged) {
  QTable q(2, 2);
  q(0, 0) = 0.3;
  q(1, 1) = -2.0;
  const QTable before = q;
  TraceTable e(2, 2);
  AlgorithmParams p;
  p.alpha = 0.0;
  for (bool traces : {false, true}) {
    td_update(q, e, {0, 0, 5.0, 1, 1, false}, structure(Algorithm::Sarsa, traces), p);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(q.flat()[i], before.flat()[i]);
  }
}

TEST(TdUpdate, QLearningAndSarsaTargets) {
  AlgorithmParams p;
  p.alpha = 0.1;
  p.gamma = 0.5;
  for (auto [alg, expected] : {std::pair{Algorithm::QLearning, 0.1}, std::pair{Algorithm::Sarsa, -0.05}}) {
    QTable q(2, 2);
    q(1, 0) = 2.0;
    q(1, 1) = -1.0;
    TraceTable e(2, 2);
    td_update(q, e, {0, 0, 0.0, 1, 1, false}, structure(alg), p);
    EXPECT_NEAR(q(0, 0), expected, 1e-15);
  }
}

TEST(TdUpdate, TerminalDropsBootstrap) {
  QTable q(2, 2);
  q(1, 0) = 100.0;
  q(1, 1) = 100.0;
  TraceTable e(2, 2);
  AlgorithmParams p;
  p.alpha = 1.0;
  p.gamma = 0.9;
  td_update(q, e, {0, 0, -200.0, 1, 0, true}, structure(Algorithm::QLearning), p);
  EXPECT_DOUBLE_EQ(q(0, 0), -200.0);
}

TEST(TdUpdate, TargetsCoincideOnGreedyNextAction) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    QTable base(3, 3);
    for (double& v : base.flat()) v = uniform(rng, -5, 5);
    const std::size_t s = uniform_index(rng, 3), a = uniform_index(rng, 3), sn = uniform_index(rng, 3);
    const auto row = base.row(sn);
    const std::size_t greedy = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    AlgorithmParams p;
    p.alpha = uniform(rng, 0.01, 0.99);
    p.gamma = uniform(rng, 0.01, 0.99);
    QTable q1 = base, q2 = base;
    TraceTable e1(3, 3), e2(3, 3);
    const Transition t{s, a, uniform(rng, -1, 1), sn, greedy, false};
    td_update(q1, e1, t, structure(Algorithm::QLearning), p);
    td_update(q2, e2, t, structure(Algorithm::Sarsa), p);
    EXPECT_EQ(q1(s, a), q2(s, a));
  }
}

TEST(TdUpdate, NonFiniteErrorIsAnInvariantViolation) {
  QTable q(2, 2);
  q(1, 0) = std::numeric_limits<double>::infinity();
  TraceTable e(2, 2);
  EXPECT_THROW(td_update(q, e, {0, 0, 0.0, 1, 0, false}, structure(Algorithm::QLearning), AlgorithmParams{}),
               InvariantViolation);
}

TEST(Traces, LambdaZeroMatchesUntracedBitwise) {
  for (Algorithm alg : {Algorithm::QLearning, Algorithm::Sarsa}) {
    Rng rng(77);
    QTable plain(6, 2), traced(6, 2);
    TraceTable e_plain(6, 2), e_traced(6, 2);
    AlgorithmParams p;
    p.alpha = 0.37;
    p.gamma = 0.91;
    p.lambda = 0.0;
    for (int step = 0; step < 5000; ++step) {
      const Transition t{uniform_index(rng, 6), uniform_index(rng, 2), uniform(rng, -3, 3), uniform_index(rng, 6),
                         uniform_index(rng, 2), uniform01(rng) < 0.1};
      td_update(plain, e_plain, t, structure(alg, false), p);
      td_update(traced, e_traced, t, structure(alg, true), p);
    }
    EXPECT_EQ(std::memcmp(plain.flat().data(), traced.flat().data(), sizeof(double) * 12), 0);
  }
}

TEST(Traces, ReplacingTracesStayNonNegativeAndBounded) {
  Rng rng(4);
  QTable q(4, 2);
  TraceTable e(4, 2);
  AlgorithmParams p;
  p.alpha = 0.2;
  p.gamma = 0.99;
  p.lambda = 1.0;
  RlOptions o;
  o.watkins_cutoff = false;
  for (int step = 0; step < 200; ++step) {
    // Revisit the same pair: a replacing trace never exceeds one.
    td_update(q, e, {0, 0, 1.0, 0, 0, false}, structure(Algorithm::Sarsa, true), p, o);
    for (double v : e.flat()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Traces, CreditFlowsToEarlierPairs) {
  QTable q(3, 1);
  TraceTable e(3, 1);
  AlgorithmParams p;
  p.alpha = 1.0;
  p.gamma = 0.5;
  p.lambda = 1.0;
  const auto s = structure(Algorithm::Sarsa, true);
  td_update(q, e, {0, 0, 0.0, 1, 0, false}, s, p);
  td_update(q, e, {1, 0, 1.0, 2, 0, true}, s, p);
  EXPECT_DOUBLE_EQ(q(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(q(0, 0), 0.5);  // trace 1 decayed once by gamma * lambda
}

TEST(Traces, WatkinsCutoffAfterExploratoryAction) {
  QTable q(3, 2);
  q(1, 0) = 1.0;  // greedy at state 1 is action 0
  TraceTable e(3, 2);
  AlgorithmParams p;
  p.lambda = 0.9;
  td_update(q, e, {0, 0, 0.0, 1, 1, false}, structure(Algorithm::QLearning, true), p);
  EXPECT_TRUE(e.active().empty());
  td_update(q, e, {0, 0, 0.0, 1, 0, false}, structure(Algorithm::QLearning, true), p);
  EXPECT_FALSE(e.active().empty());
}

TEST(DecayEpsilon, Examples) {
  AlgorithmParams p;
  p.epsilon_decay_rate = 0.99;
  EXPECT_DOUBLE_EQ(decay_epsilon(0.5, structure(Algorithm::QLearning, false, Policy::EpsilonGreedy, true), p), 0.495);
  EXPECT_EQ(decay_epsilon(0.5, structure(Algorithm::QLearning, false, Policy::EpsilonGreedy, false), p), 0.5);
  EXPECT_EQ(decay_epsilon(0.5, structure(Algorithm::QLearning, false, Policy::Softmax, true), p), 0.5);
  p.epsilon_decay_rate = 0.5;
  EXPECT_DOUBLE_EQ(decay_epsilon(0.011, structure(Algorithm::QLearning, false, Policy::EpsilonGreedy, true), p), 0.01);
}

TEST(RunEpisode, FailureRewardSum) {
  for (int k : {0, 1, 17}) {
    testing::ScriptedEnv env(k, true);
    Agent agent(structure(Algorithm::QLearning), AlgorithmParams{}, 1, 2);
    Rng rng(1);
    const auto out = run_episode(env, agent, rng);
    EXPECT_DOUBLE_EQ(out.total_reward, k * 1.0 - 200.0);
    EXPECT_EQ(out.steps, k + 1);
    EXPECT_TRUE(out.failed);
  }
}

TEST(RunEpisode, TruncationAfter200Steps) {
  testing::ScriptedEnv env(200, false);
  Agent agent(structure(Algorithm::Sarsa), AlgorithmParams{}, 1, 2);
  Rng rng(1);
  const auto out = run_episode(env, agent, rng);
  EXPECT_DOUBLE_EQ(out.total_reward, 200.0);
  EXPECT_EQ(out.steps, 200);
  EXPECT_FALSE(out.failed);
}

TEST(RunEpisode, EpsilonDecaysOncePerEpisode) {
  AlgorithmParams p;
  p.epsilon = 0.5;
  p.epsilon_decay_rate = 0.9;
  Agent agent(structure(Algorithm::QLearning, false, Policy::EpsilonGreedy, true), p, 5, 2);
  testing::ChainEnv env;
  Rng rng(2);
  for (int i = 0; i < 3; ++i) run_episode(env, agent, rng);
  EXPECT_NEAR(agent.epsilon, 0.3645, 1e-15);
}

TEST(RunEpisode, QLearningFindsValueIterationPolicyOnChain) {
  const double gamma = 0.6;
  const auto optimal = testing::chain_optimal_policy(gamma);
  EXPECT_EQ(optimal, (std::array<std::size_t, 3>{0, 1, 1}));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AlgorithmParams p;
    p.alpha = 0.1;
    p.epsilon = 0.2;
    p.gamma = gamma;
    Agent agent(structure(Algorithm::QLearning), p, testing::ChainEnv::kStates, 2);
    testing::ChainEnv env;
    Rng rng(seed);
    for (int ep = 0; ep < 2000; ++ep) run_episode(env, agent, rng);
    for (double v : agent.q.flat()) EXPECT_LE(std::abs(v), 1.0 / (1.0 - gamma));
    for (std::size_t s = 1; s <= 3; ++s) {
      const std::size_t greedy = agent.q(s, 1) > agent.q(s, 0) ? 1 : 0;
      EXPECT_EQ(greedy, optimal[s - 1]) << "seed " << seed << " state " << s;
    }
  }
}

TEST(AlgorithmParams, ValidationRejectsOutOfRange) {
  AlgorithmParams p;
  EXPECT_NO_THROW(p.validate());
  p.alpha = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.n_bins = 4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.tau = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace twotier
