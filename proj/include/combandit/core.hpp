#pragma once

// Shared vocabulary types for the recommendation loop, plus the two tiny
// primitives everything else leans on: the patience draw and the randomized
// arg-max.

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "combandit/rng.hpp"

namespace combandit {

using ArmId = std::size_t;

// Feature vector for one round. Empty means "no context" (the non-contextual
// policies ignore it either way).
using ContextVector = std::vector<double>;

// Hidden per-arm payouts for one round, indexed by arm; entries are 0 or 1.
using RealRewardVector = std::vector<double>;

// The k distinct arms recommended in one round, in selection order.
struct SuperArm {
  std::vector<ArmId> arms;

  std::size_t size() const { return arms.size(); }
  bool contains(ArmId a) const {
    for (ArmId x : arms)
      if (x == a) return true;
    return false;
  }
};

// One individually revealed reward: which arm, and what it paid.
struct ObservedReward {
  ArmId arm = 0;
  double reward = 0.0;
};

// The subset of a round's super-arm whose rewards the simulated user actually
// revealed, in reveal order.
struct PartialSubset {
  std::vector<ObservedReward> entries;
  std::size_t size() const { return entries.size(); }
};

// Patience for one round: uniform on the integers {0, ..., psi_max}.
inline std::uint64_t sample_patience(RngStream& rng, std::uint64_t psi_max) {
  return rng.next_below(psi_max + 1);
}

// Scores closer than this are treated as tied by argmax_tiebreak.
inline constexpr double kTieTolerance = 1e-12;

// Index of the highest score among non-excluded entries; ties (within
// kTieTolerance) are broken uniformly at random. +infinity is a legal score
// and always wins. `excluded` is either empty (nothing excluded) or one flag
// per score. Throws std::invalid_argument when no entry is eligible.
inline ArmId argmax_tiebreak(std::span<const double> scores,
                             std::span<const char> excluded, RngStream& rng) {
  if (scores.empty()) throw std::invalid_argument("argmax_tiebreak: no scores");
  if (!excluded.empty() && excluded.size() != scores.size())
    throw std::invalid_argument("argmax_tiebreak: exclusion mask size mismatch");

  const auto allowed = [&](std::size_t i) {
    return excluded.empty() || !excluded[i];
  };

  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!allowed(i)) continue;
    any = true;
    if (scores[i] > best) best = scores[i];
  }
  if (!any) throw std::invalid_argument("argmax_tiebreak: every arm excluded");

  // Collect the tie set. With best = +inf the subtraction would poison the
  // comparison, so infinities match exactly instead.
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!allowed(i)) continue;
    const bool tied = std::isinf(best) ? scores[i] == best
                                       : scores[i] >= best - kTieTolerance;
    if (tied) ties.push_back(i);
  }
  return ties[rng.next_below(ties.size())];
}

}  // namespace combandit
