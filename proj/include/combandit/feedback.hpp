#pragma once

// User-feedback strategies: what the policy gets to learn from one round.
//
//   bandit       — one cumulative reward for the whole recommendation, fed
//                  back to every recommended arm (bandit-kind).
//   semi-bandit  — each recommended arm's own payout (semi-bandit-kind).
//   pbsb-*       — the partial middle ground: the simulated user only reveals
//                  min(psi, k) of the k arms. Those revealed payouts are
//                  averaged into a cumulative twin reward applied to the whole
//                  super-arm (bandit-kind), then fed individually to the
//                  revealed arms (semi-bandit-kind). psi = 0 reveals nothing
//                  and the policy learns nothing that round.
//
// The pbsb variants differ only in which arms get revealed: re = the highest
// current estimates, oe = the least individually observed, rd = uniform.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "combandit/core.hpp"
#include "combandit/policies.hpp"

namespace combandit {

enum class StrategyKind { Bandit, SemiBandit, PbsbRe, PbsbOe, PbsbRd };

inline bool is_partial(StrategyKind kind) {
  return kind == StrategyKind::PbsbRe || kind == StrategyKind::PbsbOe ||
         kind == StrategyKind::PbsbRd;
}

inline std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Bandit: return "bandit";
    case StrategyKind::SemiBandit: return "semi-bandit";
    case StrategyKind::PbsbRe: return "pbsb-re";
    case StrategyKind::PbsbOe: return "pbsb-oe";
    case StrategyKind::PbsbRd: return "pbsb-rd";
  }
  throw std::invalid_argument("unknown strategy kind");
}

inline StrategyKind parse_strategy(std::string_view name) {
  if (name == "bandit") return StrategyKind::Bandit;
  if (name == "semi-bandit" || name == "semibandit") return StrategyKind::SemiBandit;
  if (name == "pbsb-re") return StrategyKind::PbsbRe;
  if (name == "pbsb-oe") return StrategyKind::PbsbOe;
  if (name == "pbsb-rd") return StrategyKind::PbsbRd;
  throw std::invalid_argument(
      "unknown strategy '" + std::string(name) +
      "' (expected one of: bandit, semi-bandit, pbsb-re, pbsb-oe, pbsb-rd)");
}

// How the bandit-kind cumulative reward is formed from the revealed payouts:
// normalized divides by the subset size (always legal); raw passes the plain
// sum through, which the policies reject the moment it exceeds 1 — usable
// only where at most one recommended arm can pay out per round.
enum class BanditRewardMode { Normalized, Raw };

namespace detail {
inline void check_round_inputs(const SuperArm& super, const RealRewardVector& hidden) {
  if (super.arms.empty()) throw std::invalid_argument("empty super-arm");
  for (const ArmId a : super.arms) {
    if (a >= hidden.size())
      throw std::invalid_argument("reward vector is missing a recommended arm");
    if (hidden[a] != 0.0 && hidden[a] != 1.0)
      throw std::invalid_argument("hidden rewards must be 0 or 1");
  }
}
}  // namespace detail

// Picks the subset of `super` the user reveals this round: min(psi, k) arms,
// chosen per the pbsb variant. Ties (equal estimates, equal observation
// counts) break uniformly at random.
inline std::vector<ArmId> select_partial_subset(StrategyKind kind,
                                                const SuperArm& super,
                                                const Policy& policy,
                                                const ContextVector& context,
                                                std::int64_t psi, RngStream& rng) {
  if (!is_partial(kind))
    throw std::invalid_argument("select_partial_subset: not a partial strategy");
  if (psi < 0) throw std::invalid_argument("patience must be non-negative");

  const std::size_t k = super.arms.size();
  const std::size_t take =
      std::min(static_cast<std::size_t>(psi), k);
  std::vector<ArmId> subset;
  if (take == 0) return subset;
  subset.reserve(take);

  if (kind == StrategyKind::PbsbRd) {
    // Partial Fisher-Yates: uniform without replacement, selection order kept.
    std::vector<ArmId> pool = super.arms;
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.next_below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      subset.push_back(pool[i]);
    }
    return subset;
  }

  // re / oe: repeated randomized arg-max over a per-slot score.
  std::vector<double> scores(k);
  for (std::size_t i = 0; i < k; ++i) {
    const ArmId a = super.arms[i];
    scores[i] = kind == StrategyKind::PbsbRe
                    ? policy.estimate(a, context)
                    : -static_cast<double>(policy.observation_count(a));
  }
  std::vector<char> used(k, 0);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t slot = argmax_tiebreak(scores, used, rng);
    used[slot] = 1;
    subset.push_back(super.arms[slot]);
  }
  return subset;
}

// Applies the partial updates for an already-chosen revealed subset: the
// averaged (or raw) cumulative twin reward to every recommended arm, then the
// individual payouts to the revealed arms. Split out from apply_strategy so
// the update arithmetic can be driven with a fixed subset.
inline PartialSubset apply_partial_updates(Policy& policy, const ContextVector& context,
                                           const SuperArm& super,
                                           const RealRewardVector& hidden,
                                           std::span<const ArmId> revealed,
                                           BanditRewardMode mode) {
  detail::check_round_inputs(super, hidden);
  PartialSubset observed;
  if (revealed.empty()) return observed;

  double sum = 0.0;
  for (const ArmId a : revealed) {
    if (!super.contains(a))
      throw std::invalid_argument("revealed arm is not part of the super-arm");
    sum += hidden[a];
  }
  const double twin = mode == BanditRewardMode::Normalized
                          ? sum / static_cast<double>(revealed.size())
                          : sum;
  for (const ArmId a : super.arms)
    policy.update(a, context, twin, UpdateKind::BanditKind);
  observed.entries.reserve(revealed.size());
  for (const ArmId a : revealed) {
    policy.update(a, context, hidden[a], UpdateKind::SemiBanditKind);
    observed.entries.push_back({a, hidden[a]});
  }
  return observed;
}

// Runs one round of the chosen feedback strategy: selects what gets revealed,
// feeds the policy its updates, and returns the individually revealed subset
// (empty for the pure bandit strategy, the whole super-arm for semi-bandit).
// `psi` is ignored by the two classic strategies.
inline PartialSubset apply_strategy(StrategyKind kind, Policy& policy,
                                    const ContextVector& context,
                                    const SuperArm& super,
                                    const RealRewardVector& hidden,
                                    std::int64_t psi, RngStream& rng,
                                    BanditRewardMode mode = BanditRewardMode::Normalized) {
  detail::check_round_inputs(super, hidden);

  if (kind == StrategyKind::Bandit) {
    double sum = 0.0;
    for (const ArmId a : super.arms) sum += hidden[a];
    const double cumulative =
        mode == BanditRewardMode::Normalized
            ? sum / static_cast<double>(super.arms.size())
            : sum;
    for (const ArmId a : super.arms)
      policy.update(a, context, cumulative, UpdateKind::BanditKind);
    // The cumulative signal reveals no per-arm payout, so nothing counts as
    // individually observed.
    return PartialSubset{};
  }

  if (kind == StrategyKind::SemiBandit) {
    PartialSubset observed;
    observed.entries.reserve(super.arms.size());
    for (const ArmId a : super.arms) {
      policy.update(a, context, hidden[a], UpdateKind::SemiBanditKind);
      observed.entries.push_back({a, hidden[a]});
    }
    return observed;
  }

  const std::vector<ArmId> revealed =
      select_partial_subset(kind, super, policy, context, psi, rng);
  return apply_partial_updates(policy, context, super, hidden, revealed, mode);
}

}  // namespace combandit
