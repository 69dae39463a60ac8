#pragma once

// Multiple-play recommendation: a super-arm is built by k successive
// single-play selections, each excluding the arms already chosen, and the
// round succeeds when any recommended arm would have paid out.

#include <span>
#include <stdexcept>
#include <vector>

#include "combandit/core.hpp"
#include "combandit/policies.hpp"

namespace combandit {

// Builds the round's recommendation. Policy state is read-only here — no
// learning happens until the feedback strategy runs.
inline SuperArm build_super_arm(const Policy& policy, const ContextVector& context,
                                std::size_t k, RngStream& rng) {
  const std::size_t m = policy.arm_count();
  if (k < 1 || k > m)
    throw std::invalid_argument("super-arm size must satisfy 1 <= k <= arm count");
  std::vector<char> excluded(m, 0);
  SuperArm super;
  super.arms.reserve(k);
  for (std::size_t slot = 0; slot < k; ++slot) {
    const ArmId a = policy.select_next(context, excluded, rng);
    excluded[a] = 1;
    super.arms.push_back(a);
  }
  return super;
}

// 1 when at least one recommended arm has hidden payout 1, else 0. This is
// the evaluation-side success signal; feedback strategies compute what the
// policy sees separately.
inline double overall_reward(const SuperArm& super, const RealRewardVector& hidden) {
  for (const ArmId a : super.arms) {
    if (a >= hidden.size())
      throw std::invalid_argument("overall_reward: arm missing from reward vector");
    if (hidden[a] != 0.0) return 1.0;
  }
  return 0.0;
}

}  // namespace combandit
