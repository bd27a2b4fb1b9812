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

#ifndef TWOTIER_CARTPOLE_HPP
#define TWOTIER_CARTPOLE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>

#include "twotier/random.hpp"
#include "twotier/rl.hpp"

namespace twotier {

struct EnvState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

enum class Push : std::size_t { Left = 0, Right = 1 };

/// Classic cart-pole physics with explicit Euler integration.
struct CartPolePhysics {
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kTotalMass = kCartMass + kPoleMass;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kPoleMass * kHalfLength;
  static constexpr double kForce = 10.0;
  static constexpr double kDt = 0.02;
  static constexpr double kThetaLimit = 12.0 * 2.0 * std::numbers::pi / 360.0;
  static constexpr double kXLimit = 2.4;

  struct Accel {
    double x_acc;
    double theta_acc;
  };

  /// Accelerations under an arbitrary horizontal force.
  static Accel dynamics(const EnvState& s, double force) {
    const double cos_t = std::cos(s.theta);
    const double sin_t = std::sin(s.theta);
    const double temp = (force + kPoleMassLength * s.theta_dot * s.theta_dot * sin_t) / kTotalMass;
    const double theta_acc =
        (kGravity * sin_t - cos_t * temp) / (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
    return {x_acc, theta_acc};
  }

  static EnvState integrate(const EnvState& s, double force) {
    const Accel acc = dynamics(s, force);
    return {s.x + kDt * s.x_dot, s.x_dot + kDt * acc.x_acc, s.theta + kDt * s.theta_dot,
            s.theta_dot + kDt * acc.theta_acc};
  }

  static bool out_of_bounds(const EnvState& s) {
    return s.x < -kXLimit || s.x > kXLimit || s.theta < -kThetaLimit || s.theta > kThetaLimit;
  }
};

struct CartPoleStep {
  EnvState state;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
};

/// Continuous-state cart-pole episode: +1 per surviving step, -200 on the
/// step that violates a bound, truncation after `max_steps`.
class CartPole {
 public:
  static constexpr int kDefaultMaxSteps = 200;
  static constexpr double kFailureReward = -200.0;

  explicit CartPole(int max_steps = kDefaultMaxSteps) : max_steps_(max_steps) {}

  EnvState reset(Rng& rng) {
    state_ = {uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05),
              uniform(rng, -0.05, 0.05)};
    steps_ = 0;
    done_ = false;
    return state_;
  }

  /// Pure transition: (state, action, steps already taken) -> outcome.
  static CartPoleStep transition(const EnvState& s, Push action, int steps_taken, int max_steps) {
    const double force = action == Push::Right ? CartPolePhysics::kForce : -CartPolePhysics::kForce;
    CartPoleStep out;
    out.state = CartPolePhysics::integrate(s, force);
    if (CartPolePhysics::out_of_bounds(out.state)) {
      out.reward = kFailureReward;
      out.terminal = true;
    } else {
      out.reward = 1.0;
      out.truncated = steps_taken + 1 >= max_steps;
    }
    return out;
  }

  CartPoleStep step(Push action) {
    if (done_) throw std::logic_error("step() called on a finished cart-pole episode");
    CartPoleStep out = transition(state_, action, steps_, max_steps_);
    state_ = out.state;
    ++steps_;
    done_ = out.terminal || out.truncated;
    return out;
  }

  const EnvState& state() const { return state_; }
  int steps() const { return steps_; }

  /// Testing hook: places the system in an arbitrary state.
  void set_state(const EnvState& s, int steps_taken = 0) {
    state_ = s;
    steps_ = steps_taken;
    done_ = false;
  }

 private:
  int max_steps_;
  EnvState state_{};
  int steps_ = 0;
  bool done_ = false;
};

struct ClipRange {
  double lower;
  double upper;
};

/// Uniform-bin discretization of the four state variables. Values outside
/// the clip range fall into the edge bins; bins are left-closed.
class Discretizer {
 public:
  Discretizer(int n_bins, int n_bins_angle, ClipRange x = {-2.4, 2.4}, ClipRange x_dot = {-3.0, 3.0},
              ClipRange theta = {-CartPolePhysics::kThetaLimit, CartPolePhysics::kThetaLimit},
              ClipRange theta_dot = {-3.5, 3.5})
      : counts_{static_cast<std::size_t>(n_bins), static_cast<std::size_t>(n_bins),
                static_cast<std::size_t>(n_bins_angle), static_cast<std::size_t>(n_bins_angle)},
        ranges_{x, x_dot, theta, theta_dot} {
    if (n_bins < 1 || n_bins_angle < 1) throw std::invalid_argument("bin counts must be positive");
    for (const auto& r : ranges_) {
      if (!(r.lower < r.upper)) throw std::invalid_argument("discretizer clip range must have lower < upper");
    }
  }

  std::size_t n_states() const { return counts_[0] * counts_[1] * counts_[2] * counts_[3]; }

  std::size_t bin(std::size_t dim, double v) const {
    const auto& r = ranges_[dim];
    const double clipped = std::clamp(v, r.lower, r.upper);
    const double scaled = (clipped - r.lower) / (r.upper - r.lower) * static_cast<double>(counts_[dim]);
    return std::min(static_cast<std::size_t>(scaled), counts_[dim] - 1);
  }

  std::array<std::size_t, 4> bins(const EnvState& s) const {
    return {bin(0, s.x), bin(1, s.x_dot), bin(2, s.theta), bin(3, s.theta_dot)};
  }

  /// Mixed-radix id, x most significant.
  std::size_t encode(const std::array<std::size_t, 4>& idx) const {
    std::size_t id = 0;
    for (std::size_t d = 0; d < 4; ++d) id = id * counts_[d] + idx[d];
    return id;
  }

  std::array<std::size_t, 4> decode(std::size_t id) const {
    std::array<std::size_t, 4> idx{};
    for (std::size_t d = 4; d-- > 0;) {
      idx[d] = id % counts_[d];
      id /= counts_[d];
    }
    return idx;
  }

  std::size_t discretize(const EnvState& s) const { return encode(bins(s)); }

  EnvState clip(const EnvState& s) const {
    return {std::clamp(s.x, ranges_[0].lower, ranges_[0].upper),
            std::clamp(s.x_dot, ranges_[1].lower, ranges_[1].upper),
            std::clamp(s.theta, ranges_[2].lower, ranges_[2].upper),
            std::clamp(s.theta_dot, ranges_[3].lower, ranges_[3].upper)};
  }

 private:
  std::array<std::size_t, 4> counts_;
  std::array<ClipRange, 4> ranges_;
};

/// Cart-pole seen through a Discretizer: the environment the tabular agents
/// actually train on.
class DiscreteCartPole {
 public:
  DiscreteCartPole(int n_bins, int n_bins_angle, int max_steps = CartPole::kDefaultMaxSteps)
      : env_(max_steps), disc_(n_bins, n_bins_angle) {}

  std::size_t reset(Rng& rng) { return disc_.discretize(env_.reset(rng)); }

  StepResult step(std::size_t action) {
    const CartPoleStep r = env_.step(action == 0 ? Push::Left : Push::Right);
    return {disc_.discretize(r.state), r.reward, r.terminal, r.truncated};
  }

  std::size_t n_states() const { return disc_.n_states(); }
  std::size_t n_actions() const { return 2; }

  CartPole& physics() { return env_; }
  const Discretizer& discretizer() const { return disc_; }

 private:
  CartPole env_;
  Discretizer disc_;
};

static_assert(EpisodicEnvironment<DiscreteCartPole>);

}  // namespace twotier

#endif  // TWOTIER_CARTPOLE_HPP
