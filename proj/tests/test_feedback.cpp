#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <set>
#include <tuple>
#include <vector>

#include "combandit/feedback.hpp"
#include "combandit/policies.hpp"

using namespace combandit;

namespace {

const ContextVector kNoContext{};

// Minimal policy that records every update it receives, for asserting the
// exact sequence a feedback strategy produces.
class RecordingPolicy final : public Policy {
 public:
  struct Entry {
    ArmId arm;
    double reward;
    UpdateKind kind;
    bool operator==(const Entry&) const = default;
  };

  explicit RecordingPolicy(std::size_t arms) : arms_(arms), obs_(arms, 0) {}

  std::string_view name() const override { return "recording"; }
  std::size_t arm_count() const override { return arms_; }

  ArmId select_next(const ContextVector&, std::span<const char> excluded,
                    RngStream& rng) const override {
    const std::vector<double> scores(arms_, 0.0);
    return argmax_tiebreak(scores, excluded, rng);
  }

  double estimate(ArmId, const ContextVector&) const override { return 0.5; }

  void update(ArmId arm, const ContextVector&, double reward,
              UpdateKind kind) override {
    check_arm(arm, arms_);
    check_reward(reward);
    log.push_back({arm, reward, kind});
    if (kind == UpdateKind::SemiBanditKind) obs_[arm] += 1;
  }

  std::uint64_t observation_count(ArmId arm) const override { return obs_[arm]; }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<RecordingPolicy>(*this);
  }

  bool state_equals(const Policy& other) const override {
    auto* p = dynamic_cast<const RecordingPolicy*>(&other);
    return p != nullptr && log == p->log && obs_ == p->obs_;
  }

  std::vector<Entry> log;

 private:
  std::size_t arms_;
  std::vector<std::uint64_t> obs_;
};

std::vector<std::unique_ptr<Policy>> all_policies(std::size_t arms) {
  std::vector<std::unique_ptr<Policy>> out;
  for (const char* name : {"epsilon-greedy", "ts", "ucb1", "ucb2", "linucb", "lints"}) {
    PolicyConfig pc;
    pc.name = name;
    out.push_back(make_policy(pc, arms, 2));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// strategy names
// ---------------------------------------------------------------------------

TEST_CASE("strategy names round-trip through the parser", "[feedback]") {
  for (const StrategyKind kind :
       {StrategyKind::Bandit, StrategyKind::SemiBandit, StrategyKind::PbsbRe,
        StrategyKind::PbsbOe, StrategyKind::PbsbRd}) {
    REQUIRE(parse_strategy(strategy_name(kind)) == kind);
  }
  REQUIRE(parse_strategy("semibandit") == StrategyKind::SemiBandit);
  REQUIRE_THROWS_AS(parse_strategy("pbsb"), std::invalid_argument);
  REQUIRE(is_partial(StrategyKind::PbsbOe));
  REQUIRE_FALSE(is_partial(StrategyKind::Bandit));
  REQUIRE_FALSE(is_partial(StrategyKind::SemiBandit));
}

// ---------------------------------------------------------------------------
// revealed-subset selection
// ---------------------------------------------------------------------------

TEST_CASE("re reveals the highest estimates first", "[feedback]") {
  EpsilonGreedyPolicy policy(3, 0.0);
  const std::vector<double> means{0.2, 0.9, 0.6};
  for (ArmId a = 0; a < 3; ++a)
    policy.update(a, kNoContext, means[a], UpdateKind::SemiBanditKind);
  const SuperArm super{{0, 1, 2}};
  RngStream rng(211);
  const auto subset = select_partial_subset(StrategyKind::PbsbRe, super, policy,
                                            kNoContext, 2, rng);
  REQUIRE(subset == std::vector<ArmId>{1, 2});
}

TEST_CASE("oe reveals the least observed first", "[feedback]") {
  EpsilonGreedyPolicy policy(3, 0.0);
  // Observation counts 3 / 0 / 1.
  for (int i = 0; i < 3; ++i)
    policy.update(0, kNoContext, 1.0, UpdateKind::SemiBanditKind);
  policy.update(2, kNoContext, 1.0, UpdateKind::SemiBanditKind);
  const SuperArm super{{0, 1, 2}};
  RngStream rng(223);
  const auto subset = select_partial_subset(StrategyKind::PbsbOe, super, policy,
                                            kNoContext, 2, rng);
  REQUIRE(subset == std::vector<ArmId>{1, 2});
}

TEST_CASE("subset ordering follows the variant's score", "[feedback]") {
  RngStream rng(227);
  for (int trial = 0; trial < 50; ++trial) {
    EpsilonGreedyPolicy policy(6, 0.0);
    for (ArmId a = 0; a < 6; ++a) {
      const int pulls = 1 + static_cast<int>(rng.next_below(4));
      for (int i = 0; i < pulls; ++i)
        policy.update(a, kNoContext, rng.next_double(), UpdateKind::SemiBanditKind);
    }
    const SuperArm super{{5, 3, 1, 0}};
    const auto re = select_partial_subset(StrategyKind::PbsbRe, super, policy,
                                          kNoContext, 3, rng);
    for (std::size_t i = 1; i < re.size(); ++i)
      REQUIRE(policy.estimate(re[i - 1], kNoContext) >=
              policy.estimate(re[i], kNoContext));
    const auto oe = select_partial_subset(StrategyKind::PbsbOe, super, policy,
                                          kNoContext, 3, rng);
    for (std::size_t i = 1; i < oe.size(); ++i)
      REQUIRE(policy.observation_count(oe[i - 1]) <=
              policy.observation_count(oe[i]));
    for (const auto& subset : {re, oe}) {
      REQUIRE(subset.size() == 3);
      for (const ArmId a : subset) REQUIRE(super.contains(a));
      REQUIRE(std::set<ArmId>(subset.begin(), subset.end()).size() == 3);
    }
  }
}

TEST_CASE("full patience reveals the whole recommendation", "[feedback]") {
  ThompsonSamplingPolicy policy(5);
  const SuperArm super{{4, 0, 2}};
  RngStream rng(229);
  for (const StrategyKind kind :
       {StrategyKind::PbsbRe, StrategyKind::PbsbOe, StrategyKind::PbsbRd}) {
    const auto subset =
        select_partial_subset(kind, super, policy, kNoContext, 3, rng);
    REQUIRE(std::set<ArmId>(subset.begin(), subset.end()) ==
            std::set<ArmId>{0, 2, 4});
    // Patience beyond k cannot reveal more than k arms.
    const auto capped =
        select_partial_subset(kind, super, policy, kNoContext, 99, rng);
    REQUIRE(capped.size() == 3);
  }
}

TEST_CASE("rd reveals uniformly at patience one", "[feedback]") {
  ThompsonSamplingPolicy policy(4);
  const SuperArm super{{0, 1, 2, 3}};
  RngStream rng(233);
  std::vector<int> counts(4, 0);
  const int n = 8000;
  for (int i = 0; i < n; ++i) {
    const auto subset =
        select_partial_subset(StrategyKind::PbsbRd, super, policy, kNoContext, 1, rng);
    REQUIRE(subset.size() == 1);
    ++counts[subset[0]];
  }
  for (const int count : counts)
    REQUIRE(std::abs(count / static_cast<double>(n) - 0.25) < 0.035);
}

TEST_CASE("subset selection rejects misuse", "[feedback]") {
  ThompsonSamplingPolicy policy(3);
  const SuperArm super{{0, 1}};
  RngStream rng(239);
  REQUIRE_THROWS_AS(select_partial_subset(StrategyKind::Bandit, super, policy,
                                          kNoContext, 1, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(select_partial_subset(StrategyKind::PbsbRd, super, policy,
                                          kNoContext, -1, rng),
                    std::invalid_argument);
}

// ---------------------------------------------------------------------------
// update arithmetic
// ---------------------------------------------------------------------------

TEST_CASE("partial updates follow the twin-then-individual order", "[feedback]") {
  EpsilonGreedyPolicy policy(4, 0.0);
  const SuperArm super{{1, 2, 3}};
  const RealRewardVector hidden{0.0, 1.0, 0.0, 0.0};
  const std::vector<ArmId> revealed{1, 3};
  const auto observed = apply_partial_updates(policy, kNoContext, super, hidden,
                                              revealed, BanditRewardMode::Normalized);

  // Twin reward (1+0)/2 = 0.5 hits every recommended arm; the revealed arms
  // then get their own payouts.
  REQUIRE(policy.state.n == std::vector<std::uint64_t>{0, 2, 1, 2});
  REQUIRE(policy.state.s[1] == 1.5);
  REQUIRE(policy.state.s[2] == 0.5);
  REQUIRE(policy.state.s[3] == 0.5);
  REQUIRE(policy.state.obs == std::vector<std::uint64_t>{0, 1, 0, 1});
  REQUIRE(policy.state.t == 5);
  REQUIRE(policy.estimate(1, kNoContext) == 0.75);
  REQUIRE(policy.estimate(2, kNoContext) == 0.5);
  REQUIRE(policy.estimate(3, kNoContext) == 0.25);

  REQUIRE(observed.size() == 2);
  REQUIRE(observed.entries[0].arm == 1);
  REQUIRE(observed.entries[0].reward == 1.0);
  REQUIRE(observed.entries[1].arm == 3);
  REQUIRE(observed.entries[1].reward == 0.0);
}

TEST_CASE("exact update sequence for a partial round", "[feedback]") {
  RecordingPolicy policy(5);
  const SuperArm super{{4, 1, 3}};
  const RealRewardVector hidden{0.0, 1.0, 0.0, 1.0, 0.0};
  const std::vector<ArmId> revealed{3, 1};
  apply_partial_updates(policy, kNoContext, super, hidden, revealed,
                        BanditRewardMode::Normalized);
  const std::vector<RecordingPolicy::Entry> expected{
      {4, 1.0, UpdateKind::BanditKind},      // twin (1+1)/2 in recommendation order
      {1, 1.0, UpdateKind::BanditKind},
      {3, 1.0, UpdateKind::BanditKind},
      {3, 1.0, UpdateKind::SemiBanditKind},  // then the revealed arms, subset order
      {1, 1.0, UpdateKind::SemiBanditKind},
  };
  REQUIRE(policy.log == expected);
}

TEST_CASE("semi-bandit feeds each arm its own payout", "[feedback]") {
  EpsilonGreedyPolicy policy(3, 0.0);
  const SuperArm super{{0, 2}};
  const RealRewardVector hidden{1.0, 0.0, 0.0};
  RngStream rng(241);
  const auto observed = apply_strategy(StrategyKind::SemiBandit, policy, kNoContext,
                                       super, hidden, 0, rng);
  REQUIRE(policy.state.n == std::vector<std::uint64_t>{1, 0, 1});
  REQUIRE(policy.state.s[0] == 1.0);
  REQUIRE(policy.state.s[2] == 0.0);
  REQUIRE(policy.state.obs == std::vector<std::uint64_t>{1, 0, 1});
  REQUIRE(observed.size() == 2);
}

TEST_CASE("bandit feeds one normalized cumulative reward to all arms", "[feedback]") {
  EpsilonGreedyPolicy policy(4, 0.0);
  const SuperArm super{{0, 1, 2}};
  const RealRewardVector hidden{1.0, 0.0, 1.0, 1.0};
  RngStream rng(251);
  const auto observed = apply_strategy(StrategyKind::Bandit, policy, kNoContext,
                                       super, hidden, 0, rng);
  for (const ArmId a : super.arms) {
    REQUIRE(policy.state.n[a] == 1);
    REQUIRE(policy.state.s[a] == 2.0 / 3.0);
    REQUIRE(policy.state.obs[a] == 0);  // no individual observations
  }
  REQUIRE(policy.state.n[3] == 0);
  // Nothing is individually revealed by a cumulative signal.
  REQUIRE(observed.size() == 0);
}

TEST_CASE("raw cumulative rewards only work when at most one arm pays",
          "[feedback]") {
  EpsilonGreedyPolicy policy(3, 0.0);
  const SuperArm super{{0, 1}};
  RngStream rng(257);
  apply_strategy(StrategyKind::Bandit, policy, kNoContext, super,
                 RealRewardVector{1.0, 0.0, 0.0}, 0, rng, BanditRewardMode::Raw);
  REQUIRE(policy.state.s[0] == 1.0);  // plain sum, not divided by k
  REQUIRE(policy.state.s[1] == 1.0);
  REQUIRE_THROWS_AS(
      apply_strategy(StrategyKind::Bandit, policy, kNoContext, super,
                     RealRewardVector{1.0, 1.0, 0.0}, 0, rng, BanditRewardMode::Raw),
      std::invalid_argument);
}

TEST_CASE("zero patience leaves every policy untouched", "[feedback]") {
  const SuperArm super{{0, 2, 1}};
  const RealRewardVector hidden{1.0, 1.0, 0.0};
  const ContextVector ctx{0.5, -0.5};
  for (const StrategyKind kind :
       {StrategyKind::PbsbRe, StrategyKind::PbsbOe, StrategyKind::PbsbRd}) {
    for (auto& policy : all_policies(3)) {
      const auto before = policy->clone();
      RngStream rng(263);
      const auto observed =
          apply_strategy(kind, *policy, ctx, super, hidden, 0, rng);
      REQUIRE(observed.size() == 0);
      REQUIRE(policy->state_equals(*before));
    }
  }
}

TEST_CASE("full patience makes the individual updates match semi-bandit",
          "[feedback]") {
  const SuperArm super{{3, 0, 2}};
  const RealRewardVector hidden{1.0, 0.0, 0.0, 1.0};
  for (const StrategyKind kind :
       {StrategyKind::PbsbRe, StrategyKind::PbsbOe, StrategyKind::PbsbRd}) {
    RecordingPolicy partial(4), semi(4);
    RngStream rng_a(269), rng_b(269);
    apply_strategy(kind, partial, kNoContext, super, hidden, 3, rng_a);
    apply_strategy(StrategyKind::SemiBandit, semi, kNoContext, super, hidden, 0,
                   rng_b);

    auto individual = partial.log;
    std::erase_if(individual, [](const RecordingPolicy::Entry& e) {
      return e.kind == UpdateKind::BanditKind;
    });
    auto key = [](const RecordingPolicy::Entry& e) {
      return std::pair{e.arm, e.reward};
    };
    auto by_key = [&](const auto& a, const auto& b) { return key(a) < key(b); };
    std::sort(individual.begin(), individual.end(), by_key);
    auto reference = semi.log;
    std::sort(reference.begin(), reference.end(), by_key);
    REQUIRE(individual == reference);
  }
}

TEST_CASE("twin rewards stay in the unit interval and inside the super-arm",
          "[feedback]") {
  RngStream rng(271);
  for (int round = 0; round < 400; ++round) {
    RecordingPolicy policy(8);
    const std::size_t k = 2 + rng.next_below(5);
    std::vector<ArmId> pool{0, 1, 2, 3, 4, 5, 6, 7};
    for (std::size_t i = 0; i < k; ++i)
      std::swap(pool[i], pool[i + rng.next_below(8 - i)]);
    const SuperArm super{{pool.begin(), pool.begin() + static_cast<long>(k)}};
    RealRewardVector hidden(8);
    for (auto& y : hidden) y = static_cast<double>(rng.next_below(2));
    const auto psi = static_cast<std::int64_t>(rng.next_below(k + 2));
    const StrategyKind kind = std::array{StrategyKind::PbsbRe, StrategyKind::PbsbOe,
                                         StrategyKind::PbsbRd}[rng.next_below(3)];
    apply_strategy(kind, policy, kNoContext, super, hidden, psi, rng);
    for (const auto& entry : policy.log) {
      REQUIRE(super.contains(entry.arm));
      REQUIRE(entry.reward >= 0.0);
      REQUIRE(entry.reward <= 1.0);
    }
  }
}

TEST_CASE("patience throttles how much feedback the policy consumes", "[feedback]") {
  // k = 10 with patience uniform on {0..4}: on average 2 of 10 recommended
  // arms are revealed, i.e. a 0.2 observation ratio.
  const std::size_t k = 10;
  ThompsonSamplingPolicy policy(12);
  RngStream patience(277), rng(281);
  std::uint64_t revealed = 0;
  const int rounds = 20000;
  for (int i = 0; i < rounds; ++i) {
    std::vector<ArmId> pool{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    for (std::size_t j = 0; j < k; ++j)
      std::swap(pool[j], pool[j + rng.next_below(12 - j)]);
    const SuperArm super{{pool.begin(), pool.begin() + k}};
    RealRewardVector hidden(12);
    for (auto& y : hidden) y = static_cast<double>(rng.next_below(2));
    const auto psi = static_cast<std::int64_t>(sample_patience(patience, 4));
    const auto observed =
        apply_strategy(StrategyKind::PbsbRd, policy, kNoContext, super, hidden,
                       psi, rng);
    revealed += observed.size();
  }
  const double ratio = static_cast<double>(revealed) /
                       (static_cast<double>(rounds) * static_cast<double>(k));
  REQUIRE(std::abs(ratio - 0.2) < 0.01);
}

TEST_CASE("round inputs are validated", "[feedback]") {
  EpsilonGreedyPolicy policy(3, 0.0);
  RngStream rng(283);
  REQUIRE_THROWS_AS(apply_strategy(StrategyKind::Bandit, policy, kNoContext,
                                   SuperArm{}, RealRewardVector{1.0}, 0, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(apply_strategy(StrategyKind::SemiBandit, policy, kNoContext,
                                   SuperArm{{2}}, RealRewardVector{1.0}, 0, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(apply_strategy(StrategyKind::SemiBandit, policy, kNoContext,
                                   SuperArm{{0}}, RealRewardVector{0.5}, 0, rng),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      apply_partial_updates(policy, kNoContext, SuperArm{{0, 1}},
                            RealRewardVector{1.0, 0.0, 0.0}, std::vector<ArmId>{2},
                            BanditRewardMode::Normalized),
      std::invalid_argument);
}
