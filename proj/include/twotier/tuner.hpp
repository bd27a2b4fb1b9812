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

// Hyper-parameter search drivers: the two-tier optimizer (structural search
// with a binary surrogate, then EI search over real values beneath the best
// structure), plus random search and single-level GP/EI baselines.

#ifndef TWOTIER_TUNER_HPP
#define TWOTIER_TUNER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "twotier/bocs.hpp"
#include "twotier/cartpole.hpp"
#include "twotier/gp.hpp"
#include "twotier/random.hpp"
#include "twotier/rl.hpp"

namespace twotier {

/// One full assignment: structure plus the real-valued settings beneath it.
struct HyperParamPoint {
  StructuralParams structural;
  AlgorithmParams algorithm;

  friend bool operator==(const HyperParamPoint&, const HyperParamPoint&) = default;
};

/// Outcome of one meta-episode: a fresh agent trained for a fixed number of
/// episodes under `point`. f_value is the mean episode reward.
struct MetaEpisodeResult {
  HyperParamPoint point;
  double f_value = 0.0;
  std::vector<double> episode_rewards;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
};

/// Append-only list of evaluated points.
class ObservationSet {
 public:
  void append(MetaEpisodeResult r) { items_.push_back(std::move(r)); }

  /// Max-f entry; the earliest wins ties. Requires a non-empty set.
  const MetaEpisodeResult& best() const {
    if (items_.empty()) throw std::logic_error("ObservationSet::best on an empty set");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < items_.size(); ++i) {
      if (items_[i].f_value > items_[arg].f_value) arg = i;
    }
    return items_[arg];
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const MetaEpisodeResult& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<MetaEpisodeResult> items_;
};

inline double mean_reward(std::span<const double> rewards) {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total / static_cast<double>(rewards.size());
}

/// Trains a fresh tabular agent on the discretized cart-pole for `episodes`
/// episodes. Fully determined by (point, seed).
inline MetaEpisodeResult evaluate_f(const HyperParamPoint& point, int episodes, std::uint64_t seed,
                                    const RlOptions& options = {}) {
  if (episodes < 1) throw std::invalid_argument("evaluate_f: episodes must be >= 1");
  point.algorithm.validate();
  const auto start = std::chrono::steady_clock::now();

  DiscreteCartPole env(point.algorithm.n_bins, point.algorithm.n_bins_angle);
  Agent agent(point.structural, point.algorithm, env.n_states(), env.n_actions(), options);
  Rng rng = make_rng(seed, {streams::kAgent});

  MetaEpisodeResult out;
  out.point = point;
  out.seed = seed;
  out.episode_rewards.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    try {
      out.episode_rewards.push_back(run_episode(env, agent, rng).total_reward);
    } catch (const InvariantViolation& err) {
      const auto& a = point.algorithm;
      throw InvariantViolation(std::string(err.what()) + " (episode " + std::to_string(e) + ", alpha=" +
                               std::to_string(a.alpha) + ", epsilon=" + std::to_string(a.epsilon) + ", gamma=" +
                               std::to_string(a.gamma) + ", tau=" + std::to_string(a.tau) + ", bits=" +
                               std::to_string(bits_to_index(encode(point.structural))) + ")");
    }
  }
  out.f_value = mean_reward(out.episode_rewards);
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Bounds of the real-valued search. Integer dimensions are bin counts.
struct SearchBox {
  Dimension alpha{"alpha", 0.01, 0.99, false};
  Dimension epsilon{"epsilon", 0.01, 0.99, false};
  Dimension gamma{"gamma", 0.01, 0.99, false};
  Dimension tau{"tau", 0.05, 5.0, false};
  Dimension n_bins{"n_bins", 5, 20, true};
  Dimension n_bins_angle{"n_bins_angle", 5, 20, true};

  std::vector<Dimension> all() const { return {alpha, epsilon, gamma, tau, n_bins, n_bins_angle}; }
};

/// The dimensions that matter under `structure`: epsilon only for
/// epsilon-greedy, tau only for softmax.
inline BoxSpace active_space(const SearchBox& box, const StructuralParams& structure) {
  std::vector<Dimension> dims{box.alpha};
  if (structure.policy == Policy::EpsilonGreedy) dims.push_back(box.epsilon);
  dims.push_back(box.gamma);
  if (structure.policy == Policy::Softmax) dims.push_back(box.tau);
  dims.push_back(box.n_bins);
  dims.push_back(box.n_bins_angle);
  return BoxSpace(std::move(dims));
}

namespace detail {

inline double* field(AlgorithmParams& p, const std::string& name) {
  if (name == "alpha") return &p.alpha;
  if (name == "epsilon") return &p.epsilon;
  if (name == "gamma") return &p.gamma;
  if (name == "tau") return &p.tau;
  return nullptr;
}

inline double get_field(const AlgorithmParams& p, const std::string& name) {
  if (name == "alpha") return p.alpha;
  if (name == "epsilon") return p.epsilon;
  if (name == "gamma") return p.gamma;
  if (name == "tau") return p.tau;
  if (name == "n_bins") return p.n_bins;
  if (name == "n_bins_angle") return p.n_bins_angle;
  throw std::invalid_argument("unknown search dimension '" + name + "'");
}

}  // namespace detail

inline VectorXd to_vector(const AlgorithmParams& p, const BoxSpace& space) {
  VectorXd v(static_cast<Eigen::Index>(space.size()));
  for (std::size_t i = 0; i < space.size(); ++i) v[static_cast<Eigen::Index>(i)] = detail::get_field(p, space[i].name);
  return v;
}

/// Copies `base` and overwrites the dimensions named in `space` with `v`.
inline AlgorithmParams with_values(AlgorithmParams base, const BoxSpace& space, const VectorXd& v) {
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double x = v[static_cast<Eigen::Index>(i)];
    const std::string& name = space[i].name;
    if (name == "n_bins") {
      base.n_bins = static_cast<int>(std::nearbyint(x));
    } else if (name == "n_bins_angle") {
      base.n_bins_angle = static_cast<int>(std::nearbyint(x));
    } else if (double* f = detail::field(base, name)) {
      *f = x;
    } else {
      throw std::invalid_argument("unknown search dimension '" + name + "'");
    }
  }
  return base;
}

struct TuningConfig {
  std::size_t budget = 30;
  std::size_t n_structural = 10;
  std::size_t n_real = 20;
  int episodes = 200;
  std::uint64_t seed = 0;
  /// Prior algorithm hyper-parameters used throughout the structural loop.
  AlgorithmParams prior{};
  /// Structure used by the single-level baselines.
  StructuralParams baseline_structure{};
  SearchBox box{};
  RlOptions rl{};
  BocsOptions bocs{};
  GpOptions gp{};
  ProposalOptions proposal{};
  std::size_t mono_init = 5;
  bool rs_fix_structural = false;

  void validate() const {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    prior.validate();
    const BoxSpace full(box.all());
    if (!full.contains(to_vector(prior, full))) throw std::invalid_argument("prior hyper-parameters lie outside the search box");
  }

  /// The two-tier split must use exactly the budget.
  void validate_two_tier() const {
    validate();
    if (n_structural < 1 || n_real < 1) throw std::invalid_argument("n_structural and n_real must be >= 1");
    if (n_structural + n_real != budget) {
      throw std::invalid_argument("n_structural + n_real (" + std::to_string(n_structural) + " + " +
                                  std::to_string(n_real) + ") must equal budget (" + std::to_string(budget) + ")");
    }
  }
};

enum class Phase : std::uint8_t { Structural, RealValued, Initial, Random };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Structural: return "structural";
    case Phase::RealValued: return "ei";
    case Phase::Initial: return "init";
    case Phase::Random: return "random";
  }
  return "?";
}

struct TuningReport {
  std::string optimizer;
  std::uint64_t seed = 0;
  /// Every objective call in order; one entry per budget unit.
  std::vector<MetaEpisodeResult> evaluations;
  std::vector<Phase> phases;
  /// Running max of f over `evaluations`.
  std::vector<double> incumbent;
  HyperParamPoint best_point{};
  double best_value = 0.0;
  /// Two-tier only: the structural history and the real-valued history
  /// (the latter starts with a copy of the structural incumbent).
  ObservationSet d1;
  ObservationSet d2;
  std::size_t structural_proposals = 0;
  std::size_t ei_proposals = 0;
  std::size_t fallback_proposals = 0;
};

/// Objective signature: (point, evaluation seed) -> result.
template <class F>
concept Objective = requires(F f, const HyperParamPoint& p, std::uint64_t seed) {
  { f(p, seed) } -> std::convertible_to<MetaEpisodeResult>;
};

/// The cart-pole meta-episode objective.
struct CartPoleObjective {
  int episodes = 200;
  RlOptions options{};

  MetaEpisodeResult operator()(const HyperParamPoint& p, std::uint64_t seed) const {
    return evaluate_f(p, episodes, seed, options);
  }
};

/// Seed of the `index`-th objective call of a campaign. Shared by all
/// optimizers so they face the same evaluation noise.
inline std::uint64_t evaluation_seed(std::uint64_t campaign_seed, std::size_t index) {
  return derive_seed(campaign_seed, {streams::kEvaluation, index});
}

namespace detail {

template <Objective F>
class Recorder {
 public:
  Recorder(TuningReport& report, F& f) : report_(report), f_(f) {}

  const MetaEpisodeResult& evaluate(const HyperParamPoint& p, Phase phase) {
    MetaEpisodeResult r = f_(p, evaluation_seed(report_.seed, report_.evaluations.size()));
    const double prev = report_.incumbent.empty() ? r.f_value : std::max(report_.incumbent.back(), r.f_value);
    if (report_.evaluations.empty() || r.f_value > report_.best_value) {
      report_.best_value = r.f_value;
      report_.best_point = r.point;
    }
    report_.incumbent.push_back(prev);
    report_.phases.push_back(phase);
    report_.evaluations.push_back(std::move(r));
    return report_.evaluations.back();
  }

 private:
  TuningReport& report_;
  F& f_;
};

inline void points_and_values(const ObservationSet& set, const BoxSpace& space, std::vector<VectorXd>& pts,
                              std::vector<double>& vals) {
  pts.clear();
  vals.clear();
  for (const auto& r : set) {
    pts.push_back(to_vector(r.point.algorithm, space));
    vals.push_back(r.f_value);
  }
}

}  // namespace detail

/// Structural search under the prior real values, then EI search over the
/// real values with the best structure frozen.
template <Objective F>
TuningReport run_two_tier(const TuningConfig& config, F&& objective) {
  config.validate_two_tier();
  TuningReport report;
  report.optimizer = "two_tier";
  report.seed = config.seed;
  detail::Recorder rec(report, objective);

  const std::uint64_t structural_seed = derive_seed(config.seed, {streams::kTwoTier, 1});
  std::vector<BocsObservation> history;
  for (std::size_t n = 0; n < config.n_structural; ++n) {
    const StructuralParams s = propose_structural(history, structural_seed, config.bocs);
    ++report.structural_proposals;
    const auto& r = rec.evaluate({s, config.prior}, Phase::Structural);
    report.d1.append(r);
    history.push_back({encode(s), r.f_value});
  }

  const MetaEpisodeResult incumbent = report.d1.best();
  report.d2.append(incumbent);
  const StructuralParams frozen = incumbent.point.structural;
  const BoxSpace space = active_space(config.box, frozen);

  Rng rng = make_rng(config.seed, {streams::kTwoTier, 2});
  std::vector<VectorXd> pts;
  std::vector<double> vals;
  for (std::size_t m = 0; m < config.n_real; ++m) {
    detail::points_and_values(report.d2, space, pts, vals);
    const Suggestion next = suggest(space, pts, vals, rng, config.gp, config.proposal);
    ++report.ei_proposals;
    report.fallback_proposals += next.fallback;
    const HyperParamPoint p{frozen, with_values(incumbent.point.algorithm, space, next.point)};
    report.d2.append(rec.evaluate(p, Phase::RealValued));
  }
  return report;
}

template <Objective F>
TuningReport run_random_search(const TuningConfig& config, F&& objective) {
  config.validate();
  TuningReport report;
  report.optimizer = "random";
  report.seed = config.seed;
  detail::Recorder rec(report, objective);

  Rng rng = make_rng(config.seed, {streams::kRandomSearch});
  const BoxSpace full(config.box.all());
  for (std::size_t i = 0; i < config.budget; ++i) {
    StructuralParams s = config.baseline_structure;
    const auto bits = static_cast<std::uint32_t>(uniform_index(rng, std::size_t{1} << kStructuralBits));
    if (!config.rs_fix_structural) s = decode(index_to_bits(bits, kStructuralBits));
    const AlgorithmParams a = with_values(config.prior, full, full.sample(rng));
    rec.evaluate({s, a}, Phase::Random);
  }
  return report;
}

/// GP/EI over the real values only, structure fixed to the baseline.
template <Objective F>
TuningReport run_monolithic_bo(const TuningConfig& config, F&& objective) {
  config.validate();
  if (config.mono_init < 1 || config.mono_init > config.budget) {
    throw std::invalid_argument("mono_init must lie in [1, budget]");
  }
  TuningReport report;
  report.optimizer = "mono_bo";
  report.seed = config.seed;
  detail::Recorder rec(report, objective);

  const StructuralParams s = config.baseline_structure;
  const BoxSpace space = active_space(config.box, s);
  Rng rng = make_rng(config.seed, {streams::kMonolithic});
  const ShiftedHalton design(space.size(), rng);

  ObservationSet seen;
  std::vector<VectorXd> pts;
  std::vector<double> vals;
  for (std::size_t i = 0; i < config.budget; ++i) {
    VectorXd x;
    Phase phase = Phase::Initial;
    if (i < config.mono_init) {
      x = space.from_unit(design(i));
    } else {
      detail::points_and_values(seen, space, pts, vals);
      const Suggestion next = suggest(space, pts, vals, rng, config.gp, config.proposal);
      ++report.ei_proposals;
      report.fallback_proposals += next.fallback;
      x = next.point;
      phase = Phase::RealValued;
    }
    seen.append(rec.evaluate({s, with_values(config.prior, space, x)}, phase));
  }
  return report;
}

inline TuningReport run_two_tier(const TuningConfig& config) {
  return run_two_tier(config, CartPoleObjective{config.episodes, config.rl});
}
inline TuningReport run_random_search(const TuningConfig& config) {
  return run_random_search(config, CartPoleObjective{config.episodes, config.rl});
}
inline TuningReport run_monolithic_bo(const TuningConfig& config) {
  return run_monolithic_bo(config, CartPoleObjective{config.episodes, config.rl});
}

/// Dispatch by name: "two_tier", "random" or "mono_bo".
template <Objective F>
TuningReport run_optimizer(const std::string& name, const TuningConfig& config, F&& objective) {
  if (name == "two_tier") return run_two_tier(config, objective);
  if (name == "random") return run_random_search(config, objective);
  if (name == "mono_bo") return run_monolithic_bo(config, objective);
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

inline TuningReport run_optimizer(const std::string& name, const TuningConfig& config) {
  return run_optimizer(name, config, CartPoleObjective{config.episodes, config.rl});
}

}  // namespace twotier

#endif  // TWOTIER_TUNER_HPP
