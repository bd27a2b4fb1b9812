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

// Tabular value-based agents: Q-learning and SARSA with optional replacing
// eligibility traces, under epsilon-greedy or Boltzmann (softmax) exploration.

#ifndef TWOTIER_RL_HPP
#define TWOTIER_RL_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twotier/random.hpp"

namespace twotier {

enum class Algorithm : std::uint8_t { QLearning = 0, Sarsa = 1 };
enum class Policy : std::uint8_t { EpsilonGreedy = 0, Softmax = 1 };

/// The categorical shape of the learner. epsilon_decay is stored for every
/// policy so that all 16 combinations are representable, but only takes
/// effect under EpsilonGreedy.
struct StructuralParams {
  Algorithm algorithm = Algorithm::QLearning;
  bool eligibility_traces = false;
  Policy policy = Policy::EpsilonGreedy;
  bool epsilon_decay = false;

  friend bool operator==(const StructuralParams&, const StructuralParams&) = default;
};

/// Real-valued (and bin-count) hyper-parameters. `epsilon` is the initial
/// exploration rate; agents carry their own decayed copy.
struct AlgorithmParams {
  double alpha = 0.5;
  double epsilon = 0.1;
  double gamma = 0.95;
  double tau = 1.0;
  double lambda = 0.9;
  double epsilon_decay_rate = 0.99;
  int n_bins = 10;
  int n_bins_angle = 10;

  friend bool operator==(const AlgorithmParams&, const AlgorithmParams&) = default;

  /// Throws std::invalid_argument naming the first out-of-range field.
  void validate() const {
    auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open01(alpha)) throw std::invalid_argument("alpha must lie in (0,1), got " + std::to_string(alpha));
    if (!open01(epsilon)) throw std::invalid_argument("epsilon must lie in (0,1), got " + std::to_string(epsilon));
    if (!open01(gamma)) throw std::invalid_argument("gamma must lie in (0,1), got " + std::to_string(gamma));
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive, got " + std::to_string(tau));
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0,1], got " + std::to_string(lambda));
    if (!(epsilon_decay_rate > 0.0 && epsilon_decay_rate <= 1.0))
      throw std::invalid_argument("epsilon_decay_rate must lie in (0,1], got " + std::to_string(epsilon_decay_rate));
    if (n_bins < 5 || n_bins > 20) throw std::invalid_argument("n_bins must lie in [5,20], got " + std::to_string(n_bins));
    if (n_bins_angle < 5 || n_bins_angle > 20)
      throw std::invalid_argument("n_bins_angle must lie in [5,20], got " + std::to_string(n_bins_angle));
  }
};

/// Knobs that are not searched over.
struct RlOptions {
  /// When true the exploratory branch of epsilon-greedy draws from all
  /// actions; by default it draws only from the non-greedy ones.
  bool greedy_in_exploration = false;
  double epsilon_min = 0.01;
  /// Zero Q-learning traces after an exploratory action.
  bool watkins_cutoff = true;
  /// Trace entries below this are dropped to zero.
  double trace_prune = 1e-12;
};

/// Raised when a numerical invariant of the learner breaks (non-finite TD
/// error, for example).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class QTable {
 public:
  QTable() = default;
  QTable(std::size_t n_states, std::size_t n_actions, double init = 0.0)
      : n_states_(n_states), n_actions_(n_actions), values_(n_states * n_actions, init) {}

  double& operator()(std::size_t s, std::size_t a) { return values_[s * n_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * n_actions_ + a]; }

  std::span<const double> row(std::size_t s) const { return {values_.data() + s * n_actions_, n_actions_}; }
  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
};

/// Dense eligibility table plus the list of currently non-zero entries, so
/// a traced update costs O(active) rather than O(|S||A|).
class TraceTable {
 public:
  TraceTable() = default;
  TraceTable(std::size_t n_states, std::size_t n_actions)
      : n_actions_(n_actions), values_(n_states * n_actions, 0.0) {}

  double operator()(std::size_t s, std::size_t a) const { return values_[s * n_actions_ + a]; }

  void replace(std::size_t s, std::size_t a) {
    const std::size_t idx = s * n_actions_ + a;
    if (values_[idx] == 0.0) active_.push_back(idx);
    values_[idx] = 1.0;
  }

  void reset() {
    for (std::size_t idx : active_) values_[idx] = 0.0;
    active_.clear();
  }

  const std::vector<std::size_t>& active() const { return active_; }
  std::span<const double> flat() const { return values_; }

  // Q += step * e, then e *= decay; entries falling under `prune` are zeroed.
  void apply_and_decay(std::span<double> q, double step, double decay, double prune) {
    std::size_t kept = 0;
    for (std::size_t idx : active_) {
      q[idx] += step * values_[idx];
      values_[idx] *= decay;
      if (values_[idx] > prune) {
        active_[kept++] = idx;
      } else {
        values_[idx] = 0.0;
      }
    }
    active_.resize(kept);
  }

 private:
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
  std::vector<std::size_t> active_;
};

/// Argmax over Q(s,.) with uniform random tie-breaking.
inline std::size_t greedy_action(const QTable& q, std::size_t s, Rng& rng) {
  const auto row = q.row(s);
  const double best = *std::max_element(row.begin(), row.end());
  std::size_t n_best = 0;
  for (double v : row) n_best += (v == best);
  std::size_t pick = n_best == 1 ? 0 : uniform_index(rng, n_best);
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (row[a] == best && pick-- == 0) return a;
  }
  return 0;
}

/// Boltzmann distribution over one row of Q. The row maximum is subtracted
/// before exponentiating.
inline std::vector<double> softmax_probabilities(std::span<const double> q_row, double tau) {
  const double top = *std::max_element(q_row.begin(), q_row.end());
  std::vector<double> p(q_row.size());
  double total = 0.0;
  for (std::size_t a = 0; a < q_row.size(); ++a) {
    p[a] = std::exp((q_row[a] - top) / tau);
    total += p[a];
  }
  for (double& v : p) v /= total;
  return p;
}

/// Picks an action at state `s`. `epsilon` is the agent's current
/// (possibly decayed) exploration rate.
inline std::size_t select_action(const QTable& q, std::size_t s, const StructuralParams& structure, double epsilon,
                                 double tau, const RlOptions& options, Rng& rng) {
  const std::size_t n = q.n_actions();
  if (structure.policy == Policy::Softmax) {
    const auto p = softmax_probabilities(q.row(s), tau);
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      acc += p[a];
      if (u < acc) return a;
    }
    return n - 1;
  }

  if (uniform01(rng) >= epsilon) return greedy_action(q, s, rng);
  if (options.greedy_in_exploration) return uniform_index(rng, n);

  const auto row = q.row(s);
  const double best = *std::max_element(row.begin(), row.end());
  std::size_t n_other = 0;
  for (double v : row) n_other += (v != best);
  if (n_other == 0) return uniform_index(rng, n);
  std::size_t pick = uniform_index(rng, n_other);
  for (std::size_t a = 0; a < n; ++a) {
    if (row[a] != best && pick-- == 0) return a;
  }
  return n - 1;
}

struct Transition {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::size_t next_state = 0;
  /// Action actually chosen at next_state; SARSA's bootstrap action.
  std::size_t next_action = 0;
  /// True only on failure: the bootstrap term is dropped. Truncated
  /// episodes still bootstrap.
  bool terminal = false;
};

/// One temporal-difference step. Returns the TD error.
inline double td_update(QTable& q, TraceTable& traces, const Transition& t, const StructuralParams& structure,
                        const AlgorithmParams& params, const RlOptions& options = {}) {
  double target = 0.0;
  bool next_is_greedy = true;
  if (!t.terminal) {
    const auto next = q.row(t.next_state);
    const double best = *std::max_element(next.begin(), next.end());
    next_is_greedy = next[t.next_action] == best;
    target = structure.algorithm == Algorithm::QLearning ? best : next[t.next_action];
  }
  const double delta = t.reward + params.gamma * target - q(t.state, t.action);
  if (!std::isfinite(delta)) {
    throw InvariantViolation("non-finite TD error at state " + std::to_string(t.state) + ", action " +
                             std::to_string(t.action));
  }

  if (!structure.eligibility_traces) {
    q(t.state, t.action) += params.alpha * delta;
    return delta;
  }

  traces.replace(t.state, t.action);
  traces.apply_and_decay(q.flat(), params.alpha * delta, params.gamma * params.lambda, options.trace_prune);
  if (structure.algorithm == Algorithm::QLearning && options.watkins_cutoff && !next_is_greedy) traces.reset();
  return delta;
}

/// End-of-episode exploration decay, clamped at options.epsilon_min.
inline double decay_epsilon(double epsilon, const StructuralParams& structure, const AlgorithmParams& params,
                            const RlOptions& options = {}) {
  if (structure.policy != Policy::EpsilonGreedy || !structure.epsilon_decay) return epsilon;
  if (epsilon <= options.epsilon_min) return epsilon;
  return std::max(epsilon * params.epsilon_decay_rate, options.epsilon_min);
}

/// Outcome of a single environment transition.
struct StepResult {
  std::size_t state = 0;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
};

/// A discrete-state episodic environment.
template <class E>
concept EpisodicEnvironment = requires(E env, Rng& rng, std::size_t action) {
  { env.reset(rng) } -> std::convertible_to<std::size_t>;
  { env.step(action) } -> std::same_as<StepResult>;
  { env.n_states() } -> std::convertible_to<std::size_t>;
  { env.n_actions() } -> std::convertible_to<std::size_t>;
};

/// Learner state for one training run. Constructed fresh per meta-episode.
struct Agent {
  StructuralParams structure;
  AlgorithmParams params;
  RlOptions options;
  QTable q;
  TraceTable traces;
  double epsilon = 0.0;

  Agent(const StructuralParams& s, const AlgorithmParams& p, std::size_t n_states, std::size_t n_actions,
        const RlOptions& o = {})
      : structure(s), params(p), options(o), q(n_states, n_actions), traces(n_states, n_actions), epsilon(p.epsilon) {}

  std::size_t act(std::size_t s, Rng& rng) const {
    return select_action(q, s, structure, epsilon, params.tau, options, rng);
  }
};

struct EpisodeOutcome {
  double total_reward = 0.0;
  int steps = 0;
  bool failed = false;
};

/// Trains `agent` for one episode and returns the undiscounted return.
template <EpisodicEnvironment Env>
EpisodeOutcome run_episode(Env& env, Agent& agent, Rng& rng) {
  agent.traces.reset();
  EpisodeOutcome out;
  std::size_t s = env.reset(rng);
  std::size_t a = agent.act(s, rng);
  while (true) {
    const StepResult r = env.step(a);
    out.total_reward += r.reward;
    ++out.steps;
    Transition t{s, a, r.reward, r.state, 0, r.terminal};
    if (r.terminal) {
      td_update(agent.q, agent.traces, t, agent.structure, agent.params, agent.options);
      out.failed = true;
      break;
    }
    t.next_action = agent.act(r.state, rng);
    td_update(agent.q, agent.traces, t, agent.structure, agent.params, agent.options);
    if (r.truncated) break;
    s = r.state;
    a = t.next_action;
  }
  agent.epsilon = decay_epsilon(agent.epsilon, agent.structure, agent.params, agent.options);
  return out;
}

}  // namespace twotier

#endif  // TWOTIER_RL_HPP
