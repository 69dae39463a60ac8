#pragma once

// Metrics and statistics for the offline protocol: running/global accuracy,
// convergence time, regret, the strategy-level average across policies, and
// the two nonparametric tests (Kruskal-Wallis, Wilcoxon signed-rank) with
// their supporting special functions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace combandit {

// ============================================================================
// Accuracy / regret metrics
// ============================================================================

// Acc(1..T): running mean of the reward stream.
inline std::vector<double> running_accuracy(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("empty reward stream");
  std::vector<double> acc(rewards.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    sum += rewards[t];
    acc[t] = sum / static_cast<double>(t + 1);
  }
  return acc;
}

inline double global_accuracy(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("empty reward stream");
  const double sum = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  return sum / static_cast<double>(rewards.size());
}

// Smallest round t (1-based) such that the running accuracy stays within
// +/- delta of its final value from t onward; 1 when the whole trajectory
// already sits inside the band.
inline std::uint64_t convergence_time(std::span<const double> trajectory,
                                      double delta = 0.01) {
  if (trajectory.empty()) throw std::invalid_argument("empty accuracy trajectory");
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
  const double final_acc = trajectory.back();
  // Scan backwards for the last violation; convergence starts right after it.
  for (std::size_t i = trajectory.size(); i-- > 0;) {
    if (std::abs(trajectory[i] - final_acc) > delta)
      return static_cast<std::uint64_t>(i) + 2;
  }
  return 1;
}

// rho_T = T * oracle_p - sum(r_t). Satisfies Acc(T)*T + rho_T = T*oracle_p.
inline double cumulative_regret(std::span<const double> rewards, double oracle_p) {
  if (!(oracle_p >= 0.0 && oracle_p <= 1.0))
    throw std::invalid_argument("oracle probability must be in [0, 1]");
  const double sum = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  return static_cast<double>(rewards.size()) * oracle_p - sum;
}

// Strategy-level aggregate: plain arithmetic mean over the policy set,
// accumulated left to right (the exact summation order is part of the
// reproducibility contract).
inline double strategy_average(std::span<const double> per_policy_values) {
  if (per_policy_values.empty())
    throw std::invalid_argument("strategy_average: empty value set");
  const double sum =
      std::accumulate(per_policy_values.begin(), per_policy_values.end(), 0.0);
  return sum / static_cast<double>(per_policy_values.size());
}

inline double mean_of(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of empty set");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

// Sample (n-1) standard deviation; 0 by convention when n < 2.
inline double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (const double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

// ============================================================================
// Special functions
// ============================================================================

namespace detail {

// Lower regularized incomplete gamma by power series; converges fast for
// x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by modified Lentz continued fraction;
// converges fast for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x). Series/continued-fraction
// hybrid, relative accuracy better than 1e-10 over the tested range.
inline double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("gamma: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("gamma: x must be >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_continued_fraction(a, x);
}

// Survival function of the chi-square distribution with df degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi-square: df must be > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("chi-square: x must be >= 0");
  return regularized_gamma_q(df / 2.0, x / 2.0);
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// ============================================================================
// Rank machinery
// ============================================================================

// 1-based ranks with ties sharing their average (mid) rank.
inline std::vector<double> midranks(std::span<const double> values) {
  for (const double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("midranks: non-finite value");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share the average of ranks i+1..j+1
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = shared;
    i = j + 1;
  }
  return ranks;
}

// ============================================================================
// Kruskal-Wallis
// ============================================================================

struct KruskalWallisResult {
  double h = 0.0;         // tie-corrected statistic
  double p_value = 1.0;   // chi-square survival, df = groups - 1
  std::size_t df = 0;
  bool degenerate = false;  // every pooled value identical
};

inline KruskalWallisResult kruskal_wallis(
    const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2)
    throw std::invalid_argument("kruskal_wallis: need at least 2 groups");
  std::vector<double> pooled;
  std::vector<std::size_t> tags;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty())
      throw std::invalid_argument("kruskal_wallis: empty group");
    for (const double v : groups[g]) {
      pooled.push_back(v);
      tags.push_back(g);
    }
  }
  const auto n_total = static_cast<double>(pooled.size());
  if (pooled.size() < 3)
    throw std::invalid_argument("kruskal_wallis: need at least 3 observations");

  KruskalWallisResult result;
  result.df = groups.size() - 1;

  const std::vector<double> ranks = midranks(pooled);
  std::vector<double> rank_sums(groups.size(), 0.0);
  for (std::size_t i = 0; i < pooled.size(); ++i) rank_sums[tags[i]] += ranks[i];

  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g)
    h += rank_sums[g] * rank_sums[g] / static_cast<double>(groups[g].size());
  h = 12.0 / (n_total * (n_total + 1.0)) * h - 3.0 * (n_total + 1.0);

  // Tie correction: 1 - sum(t^3 - t) / (N^3 - N) over tied-value runs.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  const double correction = 1.0 - tie_sum / (n_total * n_total * n_total - n_total);
  if (correction <= 0.0) {
    // Every observation identical: no information, no evidence.
    result.h = 0.0;
    result.p_value = 1.0;
    result.degenerate = true;
    return result;
  }
  h /= correction;
  if (h < 0.0) h = 0.0;  // guard the float dust of a perfectly tied statistic
  result.h = h;
  result.p_value = chi_square_sf(h, static_cast<double>(result.df));
  return result;
}

// ============================================================================
// Wilcoxon signed-rank
// ============================================================================

enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
  double w = 0.0;          // min(W+, W-)
  double p_value = 1.0;    // two-sided
  std::size_t n_used = 0;  // pairs remaining after zero removal
  bool exact = false;
  bool degenerate = false;  // no nonzero differences
};

namespace detail {

// Exact two-sided p: distribution of W = min(W+, W-) over all 2^n sign
// assignments, computed by subset-sum DP over doubled midranks (doubling
// makes every rank an exact integer).
inline double wilcoxon_exact_p(const std::vector<double>& ranks, double w_observed) {
  std::uint64_t total2 = 0;
  std::vector<std::uint64_t> doubled;
  doubled.reserve(ranks.size());
  for (const double r : ranks) {
    const double twice = 2.0 * r;
    const auto rounded = static_cast<std::uint64_t>(std::llround(twice));
    doubled.push_back(rounded);
    total2 += rounded;
  }
  // ways[s] = number of sign assignments with doubled W+ equal to s. Counts
  // stay below 2^n, exact in a double for any n this path will ever see.
  std::vector<double> ways(total2 + 1, 0.0);
  ways[0] = 1.0;
  for (const std::uint64_t r : doubled)
    for (std::uint64_t s = total2; s + 1 > r; --s) ways[s] += ways[s - r];

  const auto w2 = static_cast<std::uint64_t>(std::llround(2.0 * w_observed));
  double favorable = 0.0;
  for (std::uint64_t s = 0; s <= total2; ++s)
    if (std::min(s, total2 - s) <= w2) favorable += ways[s];
  const double p = favorable / std::pow(2.0, static_cast<double>(ranks.size()));
  return p > 1.0 ? 1.0 : p;
}

// Normal approximation with tie-corrected variance and 0.5 continuity
// correction toward the mean.
inline double wilcoxon_normal_p(const std::vector<double>& abs_diffs,
                                double w_observed) {
  const auto n = static_cast<double>(abs_diffs.size());
  const double mean = n * (n + 1.0) / 4.0;
  double tie_sum = 0.0;
  std::vector<double> sorted = abs_diffs;
  std::sort(sorted.begin(), sorted.end());
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_sum / 48.0;
  if (!(variance > 0.0)) return 1.0;
  const double z = (w_observed - mean + 0.5) / std::sqrt(variance);
  const double p = 2.0 * normal_cdf(z);
  return p > 1.0 ? 1.0 : p;
}

}  // namespace detail

inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> paired_diffs,
                                           WilcoxonMethod method = WilcoxonMethod::Auto) {
  if (paired_diffs.empty())
    throw std::invalid_argument("wilcoxon: empty difference list");

  std::vector<double> nonzero;
  nonzero.reserve(paired_diffs.size());
  for (const double d : paired_diffs) {
    if (!std::isfinite(d)) throw std::invalid_argument("wilcoxon: non-finite difference");
    if (d != 0.0) nonzero.push_back(d);
  }

  WilcoxonResult result;
  result.n_used = nonzero.size();
  if (nonzero.empty()) {
    result.degenerate = true;
    result.exact = true;
    return result;  // W = 0, p = 1: no information at all
  }

  std::vector<double> abs_diffs(nonzero.size());
  for (std::size_t i = 0; i < nonzero.size(); ++i) abs_diffs[i] = std::abs(nonzero[i]);
  const std::vector<double> ranks = midranks(abs_diffs);

  double w_plus = 0.0, total = 0.0;
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    total += ranks[i];
    if (nonzero[i] > 0.0) w_plus += ranks[i];
  }
  const double w_minus = total - w_plus;
  result.w = std::min(w_plus, w_minus);

  const bool use_exact = method == WilcoxonMethod::Exact ||
                         (method == WilcoxonMethod::Auto && nonzero.size() <= 20);
  if (use_exact) {
    result.exact = true;
    result.p_value = detail::wilcoxon_exact_p(ranks, result.w);
  } else {
    result.exact = false;
    result.p_value = detail::wilcoxon_normal_p(abs_diffs, result.w);
  }
  return result;
}

}  // namespace combandit
