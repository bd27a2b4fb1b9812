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

// Campaign runner: configuration parsing, multi-seed execution of the
// optimizers, CSV persistence and the per-meta-episode summary statistics.

#ifndef TWOTIER_EXPERIMENT_HPP
#define TWOTIER_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "twotier/tuner.hpp"

namespace twotier {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class IntervalKind { Normal, StudentT };

struct CampaignConfig {
  std::vector<std::string> optimizers{"two_tier", "random", "mono_bo"};
  std::size_t repetitions = 10;
  std::uint64_t base_seed = 0;
  std::string out_dir = "results";
  unsigned threads = 1;
  IntervalKind interval = IntervalKind::Normal;
  TuningConfig tuning{};
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Applies `key = value` settings to a CampaignConfig. Every key is tracked
/// with the line it came from so validation errors can point at it.
class ConfigBuilder {
 public:
  ConfigBuilder() { register_keys(); }
  ConfigBuilder(const ConfigBuilder&) = delete;
  ConfigBuilder& operator=(const ConfigBuilder&) = delete;

  void set(const std::string& key, const std::string& value, int line = 0) {
    const auto it = setters_.find(key);
    if (it == setters_.end()) throw ConfigError("unknown key '" + key + "'", line);
    try {
      it->second(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': " + e.what(), line);
    }
    lines_[key] = line;
  }

  /// Parses `key = value` lines; `#` starts a comment.
  void parse_text(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find('#');
      const std::string line = detail::trim(std::string_view(raw).substr(0, hash));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("malformed line, expected 'key = value'", line_no);
      const std::string key = detail::trim(std::string_view(line).substr(0, eq));
      const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
      if (key.empty() || value.empty()) throw ConfigError("malformed line, expected 'key = value'", line_no);
      set(key, value, line_no);
    }
  }

  void parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    parse_text(buf.str());
  }

  /// Cross-field validation, then returns the finished config.
  CampaignConfig build() const {
    const auto& t = cfg_.tuning;
    check_dimension(t.box.alpha, 0.0, 1.0, true);
    check_dimension(t.box.epsilon, 0.0, 1.0, true);
    check_dimension(t.box.gamma, 0.0, 1.0, true);
    check_dimension(t.box.tau, 0.0, std::numeric_limits<double>::infinity(), true);
    check_dimension(t.box.n_bins, 5.0, 20.0, false);
    check_dimension(t.box.n_bins_angle, 5.0, 20.0, false);
    if (cfg_.repetitions < 1) throw ConfigError("repetitions must be >= 1", line_of("repetitions"));
    if (cfg_.optimizers.empty()) throw ConfigError("at least one optimizer is required", line_of("optimizers"));
    if (t.n_structural + t.n_real != t.budget) {
      throw ConfigError("n_structural + n_real (" + std::to_string(t.n_structural) + " + " + std::to_string(t.n_real) +
                            ") must equal budget (" + std::to_string(t.budget) + ")",
                        std::max({line_of("n_structural"), line_of("n_real"), line_of("budget")}));
    }
    try {
      const bool two_tier =
          std::find(cfg_.optimizers.begin(), cfg_.optimizers.end(), "two_tier") != cfg_.optimizers.end();
      if (two_tier) {
        t.validate_two_tier();
      } else {
        t.validate();
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return cfg_;
  }

  CampaignConfig& raw() { return cfg_; }

 private:
  int line_of(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

  void check_dimension(const Dimension& d, double lo, double hi, bool open) const {
    const int line = std::max(line_of(d.name + "_lower"), line_of(d.name + "_upper"));
    if (!(d.lower < d.upper)) {
      throw ConfigError(d.name + ": lower >= upper (" + detail::format_double(d.lower) + " >= " +
                            detail::format_double(d.upper) + ")",
                        line);
    }
    const bool inside = open ? (d.lower > lo && d.upper < hi) : (d.lower >= lo && d.upper <= hi);
    if (!inside) throw ConfigError(d.name + ": bounds outside the legal range", line);
  }

  void add(const std::string& key, std::function<void(const std::string&)> fn) { setters_[key] = std::move(fn); }

  void add_double(const std::string& key, double& target) {
    add(key, [&target](const std::string& v) { target = detail::parse_double(v); });
  }

  void add_size(const std::string& key, std::size_t& target) {
    add(key, [&target](const std::string& v) { target = static_cast<std::size_t>(detail::parse_uint(v)); });
  }

  void add_int(const std::string& key, int& target) {
    add(key, [&target](const std::string& v) {
      const auto x = detail::parse_uint(v);
      if (x > 1000000000ULL) throw std::invalid_argument("value too large");
      target = static_cast<int>(x);
    });
  }

  void add_bool(const std::string& key, bool& target) {
    add(key, [&target](const std::string& v) { target = detail::parse_bool(v); });
  }

  void register_keys() {
    auto& t = cfg_.tuning;
    add_size("budget", t.budget);
    add_size("n_structural", t.n_structural);
    add_size("n_real", t.n_real);
    add_size("repetitions", cfg_.repetitions);
    add_size("mono_init", t.mono_init);
    add_size("bocs_n_init", t.bocs.n_init);
    add_int("episodes", t.episodes);
    add("seed", [this](const std::string& v) { cfg_.base_seed = detail::parse_uint(v); });
    add("threads", [this](const std::string& v) {
      const auto n = detail::parse_uint(v);
      if (n < 1 || n > 1024) throw std::invalid_argument("threads must lie in [1, 1024]");
      cfg_.threads = static_cast<unsigned>(n);
    });
    add("out", [this](const std::string& v) { cfg_.out_dir = v; });
    add("optimizers", [this](const std::string& v) { cfg_.optimizers = parse_optimizers(v); });
    add("interval", [this](const std::string& v) {
      if (v == "normal") cfg_.interval = IntervalKind::Normal;
      else if (v == "t") cfg_.interval = IntervalKind::StudentT;
      else throw std::invalid_argument("interval must be 'normal' or 't'");
    });
    add_bool("rs_fix_structural", t.rs_fix_structural);

    for (Dimension* d : {&t.box.alpha, &t.box.epsilon, &t.box.gamma, &t.box.tau, &t.box.n_bins, &t.box.n_bins_angle}) {
      add_double(d->name + "_lower", d->lower);
      add_double(d->name + "_upper", d->upper);
    }

    add_double("prior_alpha", t.prior.alpha);
    add_double("prior_epsilon", t.prior.epsilon);
    add_double("prior_gamma", t.prior.gamma);
    add_double("prior_tau", t.prior.tau);
    add_double("prior_lambda", t.prior.lambda);
    add_double("prior_epsilon_decay_rate", t.prior.epsilon_decay_rate);
    add_int("prior_n_bins", t.prior.n_bins);
    add_int("prior_n_bins_angle", t.prior.n_bins_angle);

    add("baseline_algorithm", [&t](const std::string& v) {
      if (v == "q_learning") t.baseline_structure.algorithm = Algorithm::QLearning;
      else if (v == "sarsa") t.baseline_structure.algorithm = Algorithm::Sarsa;
      else throw std::invalid_argument("expected 'q_learning' or 'sarsa'");
    });
    add_bool("baseline_eligibility_traces", t.baseline_structure.eligibility_traces);
    add("baseline_policy", [&t](const std::string& v) {
      if (v == "epsilon_greedy") t.baseline_structure.policy = Policy::EpsilonGreedy;
      else if (v == "softmax") t.baseline_structure.policy = Policy::Softmax;
      else throw std::invalid_argument("expected 'epsilon_greedy' or 'softmax'");
    });
    add_bool("baseline_epsilon_decay", t.baseline_structure.epsilon_decay);

    add_double("epsilon_min", t.rl.epsilon_min);
    add_bool("exploration_includes_greedy", t.rl.greedy_in_exploration);
    add_bool("watkins_cutoff", t.rl.watkins_cutoff);
    add_double("bocs_lambda_reg", t.bocs.lambda_reg);
  }

 public:
  static std::vector<std::string> parse_optimizers(const std::string& v) {
    std::vector<std::string> out;
    for (const auto& part : detail::split(v, ',')) {
      const std::string name = detail::trim(part);
      if (name != "two_tier" && name != "random" && name != "mono_bo") {
        throw std::invalid_argument("unknown optimizer '" + name + "'");
      }
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    }
    return out;
  }

 private:
  CampaignConfig cfg_;
  std::map<std::string, std::function<void(const std::string&)>> setters_;
  std::map<std::string, int> lines_;
};

inline CampaignConfig parse_config_text(const std::string& text) {
  ConfigBuilder b;
  b.parse_text(text);
  return b.build();
}

inline CampaignConfig parse_config_file(const std::filesystem::path& path) {
  ConfigBuilder b;
  b.parse_file(path);
  return b.build();
}

/// One line of results.csv.
struct ResultRow {
  std::string optimizer;
  std::uint64_t seed = 0;
  std::size_t eval_index = 0;
  std::string phase;
  std::uint64_t eval_seed = 0;
  HyperParamPoint point{};
  double f_value = 0.0;
  double incumbent = 0.0;
  double wall_time = 0.0;

  friend bool operator==(const ResultRow& a, const ResultRow& b) {
    return a.optimizer == b.optimizer && a.seed == b.seed && a.eval_index == b.eval_index && a.phase == b.phase &&
           a.eval_seed == b.eval_seed && a.point == b.point && a.f_value == b.f_value && a.incumbent == b.incumbent;
  }
};

inline constexpr std::string_view kResultsHeader =
    "optimizer,seed,eval_index,phase,eval_seed,algorithm,eligibility_traces,policy,epsilon_decay,alpha,epsilon,gamma,"
    "tau,lambda,epsilon_decay_rate,n_bins,n_bins_angle,f_value,incumbent";

inline constexpr std::string_view kSummaryHeader =
    "optimizer,eval_index,n_seeds,incumbent_mean,incumbent_ci_half_width,cumulative_mean,cumulative_ci_half_width";

inline constexpr std::string_view kTimingsHeader = "optimizer,seed,eval_index,wall_time";

inline std::vector<ResultRow> rows_from_report(const TuningReport& r) {
  std::vector<ResultRow> rows;
  rows.reserve(r.evaluations.size());
  for (std::size_t i = 0; i < r.evaluations.size(); ++i) {
    const auto& e = r.evaluations[i];
    rows.push_back({r.optimizer, r.seed, i, to_string(r.phases[i]), e.seed, e.point, e.f_value, r.incumbent[i],
                    e.wall_time});
  }
  return rows;
}

inline std::string format_row(const ResultRow& r) {
  using detail::format_double;
  const auto& s = r.point.structural;
  const auto& a = r.point.algorithm;
  std::ostringstream out;
  out << r.optimizer << ',' << r.seed << ',' << r.eval_index << ',' << r.phase << ',' << r.eval_seed << ','
      << (s.algorithm == Algorithm::Sarsa) << ',' << s.eligibility_traces << ',' << (s.policy == Policy::Softmax) << ','
      << s.epsilon_decay << ',' << format_double(a.alpha) << ',' << format_double(a.epsilon) << ','
      << format_double(a.gamma) << ',' << format_double(a.tau) << ',' << format_double(a.lambda) << ','
      << format_double(a.epsilon_decay_rate) << ',' << a.n_bins << ',' << a.n_bins_angle << ','
      << format_double(r.f_value) << ',' << format_double(r.incumbent);
  return out.str();
}

inline std::string format_results(const std::vector<ResultRow>& rows) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += format_row(r);
    out += '\n';
  }
  return out;
}

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check_header(const std::string& line, std::string_view expected) {
  const auto got = detail::split(detail::trim(line), ',');
  const auto want = detail::split(expected, ',');
  for (std::size_t i = 0; i < std::max(got.size(), want.size()); ++i) {
    if (i >= got.size()) throw SchemaError("missing column '" + want[i] + "'");
    if (i >= want.size()) throw SchemaError("unexpected column '" + got[i] + "'");
    if (got[i] != want[i]) throw SchemaError("column " + std::to_string(i) + " is '" + got[i] + "', expected '" + want[i] + "'");
  }
}

inline std::vector<ResultRow> parse_results(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty results file");
  check_header(line, kResultsHeader);
  const auto names = detail::split(kResultsHeader, ',');
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(detail::trim(line), ',');
    if (f.size() != names.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
                        " fields, got " + std::to_string(f.size()));
    }
    std::size_t col = 0;
    try {
      ResultRow r;
      r.optimizer = f[col++];
      r.seed = detail::parse_uint(f[col++]);
      r.eval_index = static_cast<std::size_t>(detail::parse_uint(f[col++]));
      r.phase = f[col++];
      r.eval_seed = detail::parse_uint(f[col++]);
      auto& s = r.point.structural;
      s.algorithm = detail::parse_bool(f[col++]) ? Algorithm::Sarsa : Algorithm::QLearning;
      s.eligibility_traces = detail::parse_bool(f[col++]);
      s.policy = detail::parse_bool(f[col++]) ? Policy::Softmax : Policy::EpsilonGreedy;
      s.epsilon_decay = detail::parse_bool(f[col++]);
      auto& a = r.point.algorithm;
      a.alpha = detail::parse_double(f[col++]);
      a.epsilon = detail::parse_double(f[col++]);
      a.gamma = detail::parse_double(f[col++]);
      a.tau = detail::parse_double(f[col++]);
      a.lambda = detail::parse_double(f[col++]);
      a.epsilon_decay_rate = detail::parse_double(f[col++]);
      a.n_bins = static_cast<int>(detail::parse_uint(f[col++]));
      a.n_bins_angle = static_cast<int>(detail::parse_uint(f[col++]));
      r.f_value = detail::parse_double(f[col++]);
      r.incumbent = detail::parse_double(f[col++]);
      rows.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw SchemaError("line " + std::to_string(line_no) + ", column '" + names[col - 1] + "': " + e.what());
    }
  }
  return rows;
}

struct SummaryRow {
  std::string optimizer;
  std::size_t eval_index = 0;
  std::size_t n_seeds = 0;
  double incumbent_mean = 0.0;
  double incumbent_half_width = 0.0;
  double cumulative_mean = 0.0;
  double cumulative_half_width = 0.0;
};

/// Mean and 95% half-width across seeds. The half-width is 0 for a single
/// seed.
inline std::pair<double, double> mean_and_half_width(const std::vector<double>& xs, IntervalKind kind) {
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  double crit = 1.96;
  if (kind == IntervalKind::StudentT) {
    crit = boost::math::quantile(boost::math::students_t(n - 1.0), 0.975);
  }
  return {mean, crit * sd / std::sqrt(n)};
}

/// Per (optimizer, evaluation index) statistics across seeds of the running
/// max and the running sum of f. Optimizers keep their first-appearance
/// order; seeds are taken in ascending order.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows, IntervalKind kind = IntervalKind::Normal) {
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.optimizer) == order.end()) order.push_back(r.optimizer);
  }
  std::vector<SummaryRow> out;
  for (const auto& opt : order) {
    std::map<std::uint64_t, std::map<std::size_t, double>> by_seed;
    for (const auto& r : rows) {
      if (r.optimizer == opt) by_seed[r.seed][r.eval_index] = r.f_value;
    }
    std::map<std::size_t, std::vector<double>> inc, cum;
    for (const auto& [seed, series] : by_seed) {
      double running_max = -std::numeric_limits<double>::infinity();
      double running_sum = 0.0;
      for (const auto& [idx, f] : series) {
        running_max = std::max(running_max, f);
        running_sum += f;
        inc[idx].push_back(running_max);
        cum[idx].push_back(running_sum);
      }
    }
    for (const auto& [idx, values] : inc) {
      const auto [im, ih] = mean_and_half_width(values, kind);
      const auto [cm, ch] = mean_and_half_width(cum[idx], kind);
      out.push_back({opt, idx, values.size(), im, ih, cm, ch});
    }
  }
  return out;
}

inline std::string format_summary(const std::vector<SummaryRow>& rows) {
  using detail::format_double;
  std::string out(kSummaryHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.optimizer + ',' + std::to_string(r.eval_index) + ',' + std::to_string(r.n_seeds) + ',' +
           format_double(r.incumbent_mean) + ',' + format_double(r.incumbent_half_width) + ',' +
           format_double(r.cumulative_mean) + ',' + format_double(r.cumulative_half_width) + '\n';
  }
  return out;
}

inline std::string format_timings(const std::vector<ResultRow>& rows) {
  std::string out(kTimingsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.optimizer + ',' + std::to_string(r.seed) + ',' + std::to_string(r.eval_index) + ',' +
           detail::format_double(r.wall_time) + '\n';
  }
  return out;
}

inline std::string describe(const HyperParamPoint& p) {
  using detail::format_double;
  const auto& s = p.structural;
  const auto& a = p.algorithm;
  std::ostringstream out;
  out << "algorithm=" << (s.algorithm == Algorithm::Sarsa ? "sarsa" : "q_learning")
      << " eligibility_traces=" << (s.eligibility_traces ? "true" : "false")
      << " policy=" << (s.policy == Policy::Softmax ? "softmax" : "epsilon_greedy")
      << " epsilon_decay=" << (s.epsilon_decay ? "true" : "false") << " alpha=" << format_double(a.alpha)
      << " epsilon=" << format_double(a.epsilon) << " gamma=" << format_double(a.gamma)
      << " tau=" << format_double(a.tau) << " lambda=" << format_double(a.lambda)
      << " epsilon_decay_rate=" << format_double(a.epsilon_decay_rate) << " n_bins=" << a.n_bins
      << " n_bins_angle=" << a.n_bins_angle;
  return out.str();
}

struct CampaignFailure {
  std::string optimizer;
  std::uint64_t seed = 0;
  std::string message;
};

struct CampaignOutcome {
  /// Successful reports in (optimizer, repetition) order.
  std::vector<TuningReport> reports;
  std::vector<CampaignFailure> failures;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
};

/// best.txt: per optimizer, the best point over all repetitions and the
/// mean final incumbent.
inline std::string format_best(const CampaignConfig& cfg, const CampaignOutcome& outcome) {
  std::ostringstream out;
  for (const auto& opt : cfg.optimizers) {
    const TuningReport* best = nullptr;
    double final_sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : outcome.reports) {
      if (r.optimizer != opt) continue;
      final_sum += r.incumbent.back();
      ++count;
      if (best == nullptr || r.best_value > best->best_value) best = &r;
    }
    if (best == nullptr) continue;
    out << "optimizer=" << opt << " repetitions=" << count
        << " mean_final_incumbent=" << detail::format_double(final_sum / static_cast<double>(count))
        << " best_f=" << detail::format_double(best->best_value) << " seed=" << best->seed << ' '
        << describe(best->best_point) << '\n';
  }
  return out.str();
}

/// Runs every (optimizer, repetition) pair with seed = base_seed + rep.
/// Work is spread over `cfg.threads` workers; output order does not depend
/// on the thread count.
template <class MakeObjective>
CampaignOutcome run_campaign_in_memory(const CampaignConfig& cfg, MakeObjective&& make_objective) {
  struct Task {
    std::string optimizer;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& opt : cfg.optimizers) {
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) tasks.push_back({opt, cfg.base_seed + rep});
  }
  std::vector<std::optional<TuningReport>> reports(tasks.size());
  std::vector<std::string> errors(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      TuningConfig tc = cfg.tuning;
      tc.seed = tasks[i].seed;
      try {
        reports[i] = run_optimizer(tasks[i].optimizer, tc, make_objective(tc));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  CampaignOutcome out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (reports[i]) {
      auto rows = rows_from_report(*reports[i]);
      out.rows.insert(out.rows.end(), rows.begin(), rows.end());
      out.reports.push_back(std::move(*reports[i]));
    } else {
      out.failures.push_back({tasks[i].optimizer, tasks[i].seed, errors[i]});
    }
  }
  out.summary = summarize(out.rows, cfg.interval);
  return out;
}

inline CampaignOutcome run_campaign_in_memory(const CampaignConfig& cfg) {
  return run_campaign_in_memory(cfg, [](const TuningConfig& tc) { return CartPoleObjective{tc.episodes, tc.rl}; });
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Runs the campaign and writes results.csv, summary.csv, best.txt and
/// timings.csv into cfg.out_dir. Returns the process exit status.
inline int run_campaign(const CampaignConfig& cfg, std::ostream& log) {
  const CampaignOutcome outcome = run_campaign_in_memory(cfg);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "results.csv", format_results(outcome.rows));
  write_text(dir / "summary.csv", format_summary(outcome.summary));
  write_text(dir / "best.txt", format_best(cfg, outcome));
  write_text(dir / "timings.csv", format_timings(outcome.rows));
  for (const auto& f : outcome.failures) {
    log << "campaign " << f.optimizer << " seed " << f.seed << " aborted: " << f.message << '\n';
  }
  return outcome.failures.empty() ? 0 : 1;
}

/// Recomputes summary.csv from a results.csv file.
inline void summarize_file(const std::filesystem::path& in, const std::filesystem::path& out,
                           IntervalKind kind = IntervalKind::Normal) {
  write_text(out, format_summary(summarize(parse_results(read_text(in)), kind)));
}

}  // namespace twotier

#endif  // TWOTIER_EXPERIMENT_HPP
