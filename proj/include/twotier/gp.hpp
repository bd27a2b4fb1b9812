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

// Gaussian-process regression over a bounded box and the expected
// improvement acquisition used by the real-valued search tier.

#ifndef TWOTIER_GP_HPP
#define TWOTIER_GP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "twotier/random.hpp"

namespace twotier {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool integer = false;
};

/// Axis-aligned search box. Points are stored in original coordinates;
/// the GP works on the unit cube.
class BoxSpace {
 public:
  BoxSpace() = default;
  explicit BoxSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    for (const auto& d : dims_) {
      if (!(d.lower < d.upper)) throw std::invalid_argument("dimension '" + d.name + "': lower >= upper");
    }
  }

  std::size_t size() const { return dims_.size(); }
  const Dimension& operator[](std::size_t i) const { return dims_[i]; }
  const std::vector<Dimension>& dims() const { return dims_; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i].name == name) return i;
    }
    return std::nullopt;
  }

  VectorXd to_unit(const VectorXd& x) const {
    VectorXd u(x.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      u[i] = (x[i] - dims_[i].lower) / (dims_[i].upper - dims_[i].lower);
    }
    return u;
  }

  /// Maps back from the unit cube; integer dimensions are rounded half to
  /// even and clamped into the box.
  VectorXd from_unit(const VectorXd& u) const {
    VectorXd x(u.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      x[i] = dims_[i].lower + std::clamp(u[i], 0.0, 1.0) * (dims_[i].upper - dims_[i].lower);
      if (dims_[i].integer) x[i] = std::clamp(std::nearbyint(x[i]), dims_[i].lower, dims_[i].upper);
    }
    return x;
  }

  VectorXd sample(Rng& rng) const {
    VectorXd u(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) u[i] = uniform01(rng);
    return from_unit(u);
  }

  bool contains(const VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (!(x[i] >= dims_[i].lower && x[i] <= dims_[i].upper)) return false;
    }
    return true;
  }

 private:
  std::vector<Dimension> dims_;
};

/// Halton sequence with a Cranley-Patterson random shift.
class ShiftedHalton {
 public:
  ShiftedHalton(std::size_t dim, Rng& rng) : shift_(dim) {
    static constexpr std::size_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (dim > std::size(kPrimes)) throw std::invalid_argument("ShiftedHalton supports at most 16 dimensions");
    bases_.assign(kPrimes, kPrimes + dim);
    for (double& s : shift_) s = uniform01(rng);
  }

  VectorXd operator()(std::size_t index) const {
    VectorXd u(bases_.size());
    for (std::size_t d = 0; d < bases_.size(); ++d) {
      double f = 1.0, r = 0.0;
      for (std::size_t i = index + 1; i > 0; i /= bases_[d]) {
        f /= static_cast<double>(bases_[d]);
        r += f * static_cast<double>(i % bases_[d]);
      }
      u[d] = r + shift_[d];
      if (u[d] >= 1.0) u[d] -= 1.0;
    }
    return u;
  }

 private:
  std::vector<std::size_t> bases_;
  std::vector<double> shift_;
};

struct KernelParams {
  /// Per-dimension length-scales in unit-cube coordinates.
  std::vector<double> length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

/// Squared-exponential kernel with one length-scale per dimension.
inline double se_kernel(const VectorXd& a, const VectorXd& b, const KernelParams& k) {
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / k.length_scales[static_cast<std::size_t>(i)];
    r2 += d * d;
  }
  return k.signal_variance * std::exp(-0.5 * r2);
}

inline std::vector<double> default_length_grid() {
  std::vector<double> g(8);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = 0.05 * std::pow(2.0 / 0.05, static_cast<double>(i) / 7.0);
  }
  return g;
}

struct GpOptions {
  /// When set, skip the marginal-likelihood search and use these values.
  std::optional<KernelParams> fixed;
  /// Standardize targets to zero mean / unit variance before fitting.
  bool standardize = true;
  std::vector<double> length_grid = default_length_grid();
  std::vector<double> noise_grid = {1e-6, 1e-4, 1e-2};
  /// Coordinate-wise per-dimension length-scale passes after the shared
  /// length-scale grid.
  int ard_passes = 2;
};

class DegenerateModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

class GpModel {
 public:
  /// Fits a GP to `points` (original coordinates, all inside `space`).
  /// Throws DegenerateModel if K + noise cannot be factorized even with
  /// the largest jitter.
  static GpModel fit(const BoxSpace& space, const std::vector<VectorXd>& points, const std::vector<double>& values,
                     const GpOptions& options = {}) {
    if (points.empty()) throw std::invalid_argument("GpModel::fit needs at least one observation");
    if (points.size() != values.size()) throw std::invalid_argument("GpModel::fit: points/values size mismatch");

    GpModel m;
    m.space_ = space;
    const auto n = static_cast<Eigen::Index>(points.size());
    const auto d = static_cast<Eigen::Index>(space.size());
    m.x_.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!space.contains(points[static_cast<std::size_t>(i)])) {
        throw std::invalid_argument("GpModel::fit: observation outside the box");
      }
      m.x_.row(i) = space.to_unit(points[static_cast<std::size_t>(i)]).transpose();
    }

    VectorXd y = Eigen::Map<const VectorXd>(values.data(), n);
    if (options.standardize) {
      m.offset_ = y.mean();
      const double var = n > 1 ? (y.array() - m.offset_).square().sum() / static_cast<double>(n - 1) : 0.0;
      m.scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    m.y_ = (y.array() - m.offset_) / m.scale_;

    if (options.fixed) {
      m.kernel_ = *options.fixed;
      if (m.kernel_.length_scales.size() == 1 && d > 1) m.kernel_.length_scales.assign(static_cast<std::size_t>(d), m.kernel_.length_scales[0]);
      if (!m.factorize()) throw DegenerateModel("GP factorization failed at maximum jitter");
      return m;
    }

    m.select_hyperparameters(options);
    return m;
  }

  /// Posterior at `x` (original coordinates), on the original target scale.
  /// The variance is that of a new noisy observation.
  Prediction posterior(const VectorXd& x) const { return posterior_unit(space_.to_unit(x)); }

  Prediction posterior_unit(const VectorXd& u) const {
    const auto n = x_.rows();
    VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = se_kernel(x_.row(i).transpose(), u, kernel_);
    const double mean = k.dot(weights_);
    const VectorXd v = chol_.matrixL().solve(k);
    double var = kernel_.signal_variance + kernel_.noise_variance - v.squaredNorm();
    var = std::max(var, 0.0);
    return {offset_ + scale_ * mean, scale_ * scale_ * var};
  }

  const BoxSpace& space() const { return space_; }
  const KernelParams& kernel() const { return kernel_; }
  double log_marginal_likelihood() const { return log_marginal_; }
  double jitter() const { return jitter_; }
  /// Target standardization: original = offset + scale * standardized.
  double offset() const { return offset_; }
  double scale() const { return scale_; }
  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }

 private:
  static constexpr double kJitterStart = 1e-10;
  static constexpr double kJitterMax = 1e-4;

  bool factorize() {
    const auto n = x_.rows();
    MatrixXd kmat(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        kmat(i, j) = kmat(j, i) = se_kernel(x_.row(i).transpose(), x_.row(j).transpose(), kernel_);
      }
    }
    kmat.diagonal().array() += kernel_.noise_variance;
    jitter_ = 0.0;
    chol_.compute(kmat);
    while (chol_.info() != Eigen::Success) {
      jitter_ = jitter_ == 0.0 ? kJitterStart : jitter_ * 10.0;
      if (jitter_ > kJitterMax * 1.0000001) return false;
      MatrixXd jittered = kmat;
      jittered.diagonal().array() += jitter_;
      chol_.compute(jittered);
    }
    weights_ = chol_.solve(y_);
    const auto& lmat = chol_.matrixLLT();
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det_half += std::log(lmat(i, i));
    log_marginal_ = -0.5 * y_.dot(weights_) - log_det_half - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return std::isfinite(log_marginal_);
  }

  // Grid search over a shared length-scale and the noise level, followed
  // by coordinate-wise refinement of each length-scale on the same grid.
  // Ties keep the earlier candidate.
  void select_hyperparameters(const GpOptions& options) {
    const auto d = static_cast<std::size_t>(x_.cols());
    KernelParams best;
    double best_lml = -std::numeric_limits<double>::infinity();
    auto consider = [&](const KernelParams& cand) {
      kernel_ = cand;
      if (factorize() && log_marginal_ > best_lml) {
        best_lml = log_marginal_;
        best = cand;
      }
    };
    for (double ell : options.length_grid) {
      for (double noise : options.noise_grid) consider({std::vector<double>(d, ell), 1.0, noise});
    }
    if (!std::isfinite(best_lml)) throw DegenerateModel("no kernel on the grid gives a factorizable GP");

    if (d > 1) {
      for (int pass = 0; pass < options.ard_passes; ++pass) {
        for (std::size_t dim = 0; dim < d; ++dim) {
          const KernelParams base = best;
          for (double ell : options.length_grid) {
            for (double noise : options.noise_grid) {
              KernelParams cand = base;
              cand.length_scales[dim] = ell;
              cand.noise_variance = noise;
              consider(cand);
            }
          }
        }
      }
    }
    kernel_ = best;
    if (!factorize()) throw DegenerateModel("GP factorization failed at maximum jitter");
  }

  BoxSpace space_;
  MatrixXd x_;
  VectorXd y_;
  double offset_ = 0.0;
  double scale_ = 1.0;
  KernelParams kernel_;
  Eigen::LLT<MatrixXd> chol_;
  VectorXd weights_;
  double jitter_ = 0.0;
  double log_marginal_ = 0.0;
};

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Expected improvement over `f_best` for a maximization problem.
inline double expected_improvement(double mean, double sd, double f_best) {
  const double gain = mean - f_best;
  if (!(sd > 0.0)) return std::max(gain, 0.0);
  const double z = gain / sd;
  return std::max(gain * normal_cdf(z) + sd * normal_pdf(z), 0.0);
}

inline double expected_improvement(const GpModel& m, const VectorXd& x, double f_best) {
  const Prediction p = m.posterior(x);
  return expected_improvement(p.mean, std::sqrt(p.variance), f_best);
}

struct ProposalOptions {
  std::size_t n_candidates = 2048;
  std::size_t n_refine = 16;
  double initial_step = 0.1;
  double min_step = 1e-3;
  int max_passes = 200;
  /// Continuous-dimension nudge (fraction of the range) applied when the
  /// proposal coincides with an observed point.
  double collision_step = 1e-3;
};

namespace detail {

inline double ei_unit(const GpModel& m, const VectorXd& u, double f_best) {
  const Prediction p = m.posterior_unit(u);
  return expected_improvement(p.mean, std::sqrt(p.variance), f_best);
}

inline bool same_point(const VectorXd& a, const VectorXd& b) { return a.size() == b.size() && a == b; }

inline bool collides(const VectorXd& x, const std::vector<VectorXd>& observed) {
  return std::any_of(observed.begin(), observed.end(), [&](const VectorXd& o) { return same_point(x, o); });
}

inline VectorXd avoid_observed(VectorXd x, const BoxSpace& space, const std::vector<VectorXd>& observed,
                               double step_fraction) {
  if (!collides(x, observed)) return x;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const Dimension& dim = space[i];
    const double step = dim.integer ? 1.0 : step_fraction * (dim.upper - dim.lower);
    for (double sign : {1.0, -1.0}) {
      VectorXd y = x;
      y[static_cast<Eigen::Index>(i)] += sign * step;
      if (y[static_cast<Eigen::Index>(i)] < dim.lower || y[static_cast<Eigen::Index>(i)] > dim.upper) continue;
      if (!collides(y, observed)) return y;
    }
  }
  return x;
}

}  // namespace detail

/// Maximizes EI over `space`: quasi-random candidates, then coordinate-wise
/// hill climbing from the best few. The result is rounded on integer
/// dimensions and nudged off any point in `observed`.
inline VectorXd propose_next(const GpModel& m, const BoxSpace& space, double f_best, Rng& rng,
                             const std::vector<VectorXd>& observed = {}, const ProposalOptions& opt = {}) {
  ShiftedHalton halton(space.size(), rng);
  std::vector<VectorXd> cand(opt.n_candidates);
  std::vector<double> score(opt.n_candidates);
  for (std::size_t i = 0; i < opt.n_candidates; ++i) {
    cand[i] = halton(i);
    score[i] = detail::ei_unit(m, cand[i], f_best);
  }

  std::vector<std::size_t> order(opt.n_candidates);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  const std::size_t n_refine = std::min(opt.n_refine, order.size());
  for (std::size_t r = 0; r < n_refine; ++r) {
    const std::size_t idx = order[r];
    VectorXd u = cand[idx];
    double best = score[idx];
    double step = opt.initial_step;
    for (int pass = 0; pass < opt.max_passes && step >= opt.min_step; ++pass) {
      bool improved = false;
      for (Eigen::Index d = 0; d < u.size(); ++d) {
        for (double sign : {1.0, -1.0}) {
          VectorXd trial = u;
          trial[d] = std::clamp(trial[d] + sign * step, 0.0, 1.0);
          const double s = detail::ei_unit(m, trial, f_best);
          if (s > best) {
            best = s;
            u = std::move(trial);
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    cand[idx] = u;
    score[idx] = best;
  }

  std::size_t arg = 0;
  for (std::size_t i = 1; i < score.size(); ++i) {
    if (score[i] > score[arg]) arg = i;
  }
  return detail::avoid_observed(space.from_unit(cand[arg]), space, observed, opt.collision_step);
}

struct Suggestion {
  VectorXd point;
  /// True when the GP could not be built and the point was drawn uniformly.
  bool fallback = false;
};

/// Fit-then-propose with uniform-random fallback on a degenerate model.
/// Maximization: the incumbent is the largest observed value.
inline Suggestion suggest(const BoxSpace& space, const std::vector<VectorXd>& points, const std::vector<double>& values,
                          Rng& rng, const GpOptions& gp = {}, const ProposalOptions& prop = {}) {
  try {
    const GpModel m = GpModel::fit(space, points, values, gp);
    const double f_best = *std::max_element(values.begin(), values.end());
    return {propose_next(m, space, f_best, rng, points, prop), false};
  } catch (const DegenerateModel&) {
    return {space.sample(rng), true};
  }
}

}  // namespace twotier

#endif  // TWOTIER_GP_HPP
