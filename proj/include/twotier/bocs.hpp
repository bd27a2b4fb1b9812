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

// Structural tier: Bayesian optimization over binary vectors with a
// second-order (pairwise interaction) Bayesian linear surrogate, Thompson
// sampling of its coefficients and simulated-annealing maximization.

#ifndef TWOTIER_BOCS_HPP
#define TWOTIER_BOCS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "twotier/random.hpp"
#include "twotier/rl.hpp"

namespace twotier {

using Bits = std::vector<std::uint8_t>;

inline constexpr std::size_t kStructuralBits = 4;

class EncodingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bit layout: b0 algorithm (1 = SARSA), b1 eligibility traces,
/// b2 policy (1 = Softmax), b3 epsilon decay.
inline Bits encode(const StructuralParams& p) {
  return {static_cast<std::uint8_t>(p.algorithm == Algorithm::Sarsa), static_cast<std::uint8_t>(p.eligibility_traces),
          static_cast<std::uint8_t>(p.policy == Policy::Softmax), static_cast<std::uint8_t>(p.epsilon_decay)};
}

inline StructuralParams decode(const Bits& bits) {
  if (bits.size() != kStructuralBits) {
    throw EncodingError("structural bit vector must have length 4, got " + std::to_string(bits.size()));
  }
  for (auto b : bits) {
    if (b > 1) throw EncodingError("structural bit vector entries must be 0 or 1");
  }
  return {bits[0] ? Algorithm::Sarsa : Algorithm::QLearning, bits[1] != 0, bits[2] ? Policy::Softmax : Policy::EpsilonGreedy,
          bits[3] != 0};
}

/// Integer view of a bit vector, b0 least significant.
inline std::uint32_t bits_to_index(const Bits& bits) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) v |= static_cast<std::uint32_t>(bits[i] & 1u) << i;
  return v;
}

inline Bits index_to_bits(std::uint32_t v, std::size_t d) {
  Bits b(d);
  for (std::size_t i = 0; i < d; ++i) b[i] = static_cast<std::uint8_t>((v >> i) & 1u);
  return b;
}

inline std::size_t n_features(std::size_t d) { return 1 + d + d * (d - 1) / 2; }

/// [1, x_1..x_d, x_i x_j for i < j] in lexicographic (i, j) order.
inline Eigen::VectorXd features(const Bits& x) {
  const std::size_t d = x.size();
  Eigen::VectorXd phi(static_cast<Eigen::Index>(n_features(d)));
  Eigen::Index k = 0;
  phi[k++] = 1.0;
  for (std::size_t i = 0; i < d; ++i) phi[k++] = x[i];
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) phi[k++] = static_cast<double>(x[i] * x[j]);
  }
  return phi;
}

/// Value of the quadratic model `coef` at `x`.
inline double quadratic_value(const Eigen::VectorXd& coef, const Bits& x) { return features(x).dot(coef); }

struct BocsObservation {
  Bits bits;
  double value = 0.0;
};

struct BocsOptions {
  double lambda_reg = 1.0;
  double noise_floor = 1e-4;
  std::size_t n_init = 4;
  double sa_initial_temperature = 1.0;
  double sa_cooling = 0.95;
  int sa_sweeps = 100;
};

/// Gaussian posterior over the surrogate coefficients, in standardized
/// target units (original = offset + scale * standardized).
struct BocsModel {
  std::size_t dim = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double noise_variance = 1.0;
  double offset = 0.0;
  double scale = 1.0;

  /// Posterior predictive mean on the original scale.
  double predict(const Bits& x) const { return offset + scale * features(x).dot(mean); }
};

/// Conjugate Bayesian linear regression with a ridge prior:
/// coef ~ N(0, s2 / lambda_reg I), noise variance s2 estimated from the
/// residuals (floored).
inline BocsModel fit_bocs(const std::vector<BocsObservation>& obs, const BocsOptions& options = {}) {
  if (obs.empty()) throw std::invalid_argument("fit_bocs needs at least one observation");
  const std::size_t d = obs.front().bits.size();
  const auto n = static_cast<Eigen::Index>(obs.size());
  const auto p = static_cast<Eigen::Index>(n_features(d));

  Eigen::MatrixXd phi(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    if (o.bits.size() != d) throw EncodingError("fit_bocs: inconsistent bit-vector lengths");
    phi.row(i) = features(o.bits).transpose();
    y[i] = o.value;
  }

  BocsModel m;
  m.dim = d;
  m.offset = y.mean();
  const double var = n > 1 ? (y.array() - m.offset).square().sum() / static_cast<double>(n - 1) : 0.0;
  m.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd ys = (y.array() - m.offset) / m.scale;

  Eigen::MatrixXd precision = phi.transpose() * phi;
  precision.diagonal().array() += options.lambda_reg;
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  m.mean = llt.solve(phi.transpose() * ys);
  const double rss = (ys - phi * m.mean).squaredNorm();
  m.noise_variance = std::max(rss / static_cast<double>(n), options.noise_floor);
  m.covariance = m.noise_variance * llt.solve(Eigen::MatrixXd::Identity(p, p));
  m.covariance = (0.5 * (m.covariance + m.covariance.transpose())).eval();
  return m;
}

/// One Thompson draw of the coefficient vector. Falls back to the posterior
/// mean if the covariance cannot be factorized.
inline Eigen::VectorXd sample_acquisition(const BocsModel& m, Rng& rng) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m.covariance);
  if (llt.info() != Eigen::Success) return m.mean;
  Eigen::VectorXd z(m.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = standard_normal(rng);
  return m.mean + llt.matrixL() * z;
}

/// Simulated annealing over {0,1}^d with single-bit flips and geometric
/// cooling. Returns the best vector visited; ties keep the earliest.
inline Bits sa_maximize(const Eigen::VectorXd& coef, std::size_t d, Rng& rng, const BocsOptions& options = {}) {
  if (d == 0) throw std::invalid_argument("sa_maximize: dimension must be >= 1");
  if (static_cast<std::size_t>(coef.size()) != n_features(d)) {
    throw std::invalid_argument("sa_maximize: coefficient vector does not match dimension");
  }
  Bits x(d);
  for (auto& b : x) b = static_cast<std::uint8_t>(uniform_index(rng, 2));
  double fx = quadratic_value(coef, x);
  Bits best = x;
  double f_best = fx;

  double temperature = options.sa_initial_temperature;
  for (int sweep = 0; sweep < options.sa_sweeps; ++sweep) {
    for (std::size_t i = 0; i < d; ++i) {
      x[i] ^= 1u;
      const double fy = quadratic_value(coef, x);
      const double gain = fy - fx;
      const double u = uniform01(rng);
      if (gain >= 0.0 || u < std::exp(gain / temperature)) {
        fx = fy;
        if (fx > f_best) {
          f_best = fx;
          best = x;
        }
      } else {
        x[i] ^= 1u;
      }
    }
    temperature *= options.sa_cooling;
  }
  return best;
}

/// Seeded permutation of all 2^d vectors, used to warm-start the search.
inline std::vector<std::uint32_t> initial_design(std::uint64_t seed, std::size_t d = kStructuralBits) {
  std::vector<std::uint32_t> perm(std::size_t{1} << d);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng = make_rng(seed, {0x1d});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

/// Next structural configuration given the history so far. The first
/// `n_init` proposals walk the seeded permutation, skipping tried vectors;
/// afterwards the surrogate is fitted, a coefficient vector sampled, and
/// annealing maximizes it. Deterministic in (history, seed).
inline StructuralParams propose_structural(const std::vector<BocsObservation>& history, std::uint64_t seed,
                                          const BocsOptions& options = {}) {
  if (history.size() < options.n_init) {
    for (std::uint32_t v : initial_design(seed)) {
      const bool tried = std::any_of(history.begin(), history.end(),
                                     [&](const BocsObservation& o) { return bits_to_index(o.bits) == v; });
      if (!tried) return decode(index_to_bits(v, kStructuralBits));
    }
  }
  Rng rng = make_rng(seed, {0xb0c5, history.size()});
  const BocsModel model = fit_bocs(history, options);
  const Eigen::VectorXd coef = sample_acquisition(model, rng);
  return decode(sa_maximize(coef, kStructuralBits, rng, options));
}

}  // namespace twotier

#endif  // TWOTIER_BOCS_HPP
