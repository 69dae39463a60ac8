#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "combandit/combinatorial.hpp"
#include "combandit/policies.hpp"

using namespace combandit;

namespace {
const ContextVector kNoContext{};
}

TEST_CASE("a full-width super-arm is a permutation of all arms", "[combinatorial]") {
  ThompsonSamplingPolicy policy(3);
  RngStream rng(101);
  const SuperArm super = build_super_arm(policy, kNoContext, 3, rng);
  REQUIRE(super.size() == 3);
  REQUIRE(std::set<ArmId>(super.arms.begin(), super.arms.end()) ==
          std::set<ArmId>{0, 1, 2});
}

TEST_CASE("greedy super-arms list arms in descending estimate order",
          "[combinatorial]") {
  EpsilonGreedyPolicy policy(4, 0.0);
  const std::vector<double> means{0.9, 0.1, 0.5, 0.7};
  for (ArmId a = 0; a < 4; ++a)
    policy.update(a, kNoContext, means[a], UpdateKind::SemiBanditKind);
  RngStream rng(103);
  const SuperArm super = build_super_arm(policy, kNoContext, 2, rng);
  REQUIRE(super.arms == std::vector<ArmId>{0, 3});
  const SuperArm wider = build_super_arm(policy, kNoContext, 4, rng);
  REQUIRE(wider.arms == std::vector<ArmId>{0, 3, 2, 1});
}

TEST_CASE("no policy ever recommends the same arm twice in a round",
          "[combinatorial]") {
  const std::size_t m = 6, k = 3, dim = 2;
  for (const char* name : {"epsilon-greedy", "ts", "ucb1", "ucb2", "linucb", "lints"}) {
    PolicyConfig pc;
    pc.name = name;
    pc.epsilon = 0.3;
    const auto policy = make_policy(pc, m, dim);
    RngStream rng(107);
    const ContextVector ctx{0.4, -0.6};
    for (int round = 0; round < 200; ++round) {
      const SuperArm super = build_super_arm(*policy, ctx, k, rng);
      REQUIRE(super.size() == k);
      std::set<ArmId> unique(super.arms.begin(), super.arms.end());
      REQUIRE(unique.size() == k);
      for (const ArmId a : super.arms) REQUIRE(a < m);
      // Keep the state moving so the property is not tested on a fresh policy only.
      policy->update(super.arms[round % k], ctx, (round % 2) ? 1.0 : 0.0,
                     UpdateKind::SemiBanditKind);
    }
  }
}

TEST_CASE("building a super-arm does not touch policy state", "[combinatorial]") {
  Ucb1Policy policy(5);
  RngStream train(109);
  for (int i = 0; i < 25; ++i)
    policy.update(train.next_below(5), kNoContext, train.next_double(),
                  UpdateKind::SemiBanditKind);
  const auto before = policy.clone();
  RngStream rng(113);
  (void)build_super_arm(policy, kNoContext, 4, rng);
  REQUIRE(policy.state_equals(*before));
}

TEST_CASE("overall reward fires when any recommended arm pays", "[combinatorial]") {
  const RealRewardVector hidden{0.0, 1.0, 0.0, 1.0};
  REQUIRE(overall_reward(SuperArm{{0, 2}}, hidden) == 0.0);
  REQUIRE(overall_reward(SuperArm{{1, 2}}, hidden) == 1.0);
  REQUIRE(overall_reward(SuperArm{{3}}, hidden) == 1.0);
  REQUIRE(overall_reward(SuperArm{{2, 0, 1}}, hidden) == 1.0);
}

TEST_CASE("overall reward agrees with a brute-force OR", "[combinatorial]") {
  RngStream rng(127);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.next_below(6);
    RealRewardVector hidden(m);
    for (auto& y : hidden) y = static_cast<double>(rng.next_below(2));
    const std::size_t k = 1 + rng.next_below(m);
    // Random k-subset via partial shuffle.
    std::vector<ArmId> pool(m);
    for (std::size_t i = 0; i < m; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i)
      std::swap(pool[i], pool[i + rng.next_below(m - i)]);
    SuperArm super{{pool.begin(), pool.begin() + static_cast<long>(k)}};
    double expect = 0.0;
    for (const ArmId a : super.arms)
      if (hidden[a] == 1.0) expect = 1.0;
    REQUIRE(overall_reward(super, hidden) == expect);
  }
}

TEST_CASE("malformed rounds are rejected", "[combinatorial]") {
  ThompsonSamplingPolicy policy(3);
  RngStream rng(131);
  REQUIRE_THROWS_AS(build_super_arm(policy, kNoContext, 0, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(build_super_arm(policy, kNoContext, 4, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(overall_reward(SuperArm{{5}}, RealRewardVector{1.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("super-arm membership helper", "[combinatorial]") {
  const SuperArm super{{4, 1, 2}};
  REQUIRE(super.contains(1));
  REQUIRE(super.contains(4));
  REQUIRE_FALSE(super.contains(0));
  REQUIRE_FALSE(super.contains(3));
}
