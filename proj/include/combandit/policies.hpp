#pragma once

// The arm-selection policies. All of them share one small contract:
//
//   select_next  — pick one non-excluded arm; read-only on policy state, all
//                  randomness comes from the caller's stream.
//   estimate     — deterministic point estimate of an arm's expected reward.
//   update       — feed one observed reward in [0, 1]. Semi-bandit-kind
//                  updates additionally advance the arm's individual
//                  observation counter; bandit-kind ones do not.
//
// The internal clock t counts update events (t == sum of all n_a), so a round
// that produces no updates leaves a policy bit-for-bit untouched.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <typeinfo>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "combandit/core.hpp"
#include "combandit/rng.hpp"

namespace combandit {

enum class UpdateKind { BanditKind, SemiBanditKind };

// ============================================================================
// Index formulas (exposed for direct verification)
// ============================================================================

// Upper confidence index: mean + sqrt(2 ln t / n). An unpulled arm gets
// +infinity so it is tried before any pulled one.
inline double ucb1_index(double reward_sum, std::uint64_t pulls, std::uint64_t t) {
  if (pulls == 0) return std::numeric_limits<double>::infinity();
  return reward_sum / static_cast<double>(pulls) +
         std::sqrt(2.0 * std::log(static_cast<double>(t)) / static_cast<double>(pulls));
}

// Epoch length tau(r) = ceil((1 + alpha)^r) for the epoch-based variant.
inline std::uint64_t ucb2_tau(std::uint64_t epoch, double alpha) {
  return static_cast<std::uint64_t>(
      std::ceil(std::pow(1.0 + alpha, static_cast<double>(epoch))));
}

// Epoch-based index: mean + sqrt((1+alpha) ln(e t / tau(r)) / (2 tau(r))).
// Callers maintain the invariant tau(r) <= n <= t, which keeps the log
// argument >= e.
inline double ucb2_index(double reward_sum, std::uint64_t pulls, std::uint64_t t,
                         std::uint64_t epoch, double alpha) {
  if (pulls == 0) return std::numeric_limits<double>::infinity();
  const auto tau = static_cast<double>(ucb2_tau(epoch, alpha));
  const double bonus = std::sqrt(
      (1.0 + alpha) * std::log(std::numbers::e * static_cast<double>(t) / tau) /
      (2.0 * tau));
  return reward_sum / static_cast<double>(pulls) + bonus;
}

// ============================================================================
// State blocks
// ============================================================================

// Pull counts and reward sums per arm, plus the shared clock t and the
// individual-observation counters obs.
struct CountSumState {
  std::vector<std::uint64_t> n;
  std::vector<double> s;
  std::vector<std::uint64_t> obs;
  std::uint64_t t = 0;

  explicit CountSumState(std::size_t arm_count)
      : n(arm_count, 0), s(arm_count, 0.0), obs(arm_count, 0) {}

  bool operator==(const CountSumState&) const = default;
};

// Beta posterior per arm (alpha, beta >= 1 always: updates add values in [0,1]).
struct BetaState {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<std::uint64_t> obs;
  std::uint64_t t = 0;

  explicit BetaState(std::size_t arm_count)
      : alpha(arm_count, 1.0), beta(arm_count, 1.0), obs(arm_count, 0) {}

  bool operator==(const BetaState&) const = default;
};

namespace detail {
inline bool exactly_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || (a.array() == b.array()).all();
}
inline bool exactly_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  return a.size() == 0 || (a.array() == b.array()).all();
}
}  // namespace detail

// Ridge-regression block for one arm. `a_inv` is maintained incrementally by
// rank-1 (Sherman-Morrison) updates; `a` itself is kept so the inverse can be
// cross-checked or rebuilt. `chol` is the lower Cholesky factor of a_inv,
// refreshed only when posterior sampling needs it.
struct LinearArmState {
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_inv;
  Eigen::MatrixXd chol;
  Eigen::VectorXd b;
  Eigen::VectorXd theta;

  LinearArmState() = default;
  LinearArmState(std::size_t dim, double ridge)
      : a(Eigen::MatrixXd::Identity(dim, dim) * ridge),
        a_inv(Eigen::MatrixXd::Identity(dim, dim) / ridge),
        chol(Eigen::MatrixXd::Identity(dim, dim) / std::sqrt(ridge)),
        b(Eigen::VectorXd::Zero(dim)),
        theta(Eigen::VectorXd::Zero(dim)) {}

  // Absorb one observation (x, reward). Keeps a, a_inv, b, theta coherent;
  // refreshes chol only when asked.
  void absorb(const Eigen::Ref<const Eigen::VectorXd>& x, double reward,
              bool refresh_chol) {
    const Eigen::VectorXd u = a_inv * x;
    const double denom = 1.0 + x.dot(u);
    a.noalias() += x * x.transpose();
    a_inv.noalias() -= (u * u.transpose()) / denom;
    // Rank-1 arithmetic slowly erodes symmetry; restore it exactly.
    a_inv = (0.5 * (a_inv + a_inv.transpose())).eval();
    b.noalias() += reward * x;
    theta.noalias() = a_inv * b;
    if (refresh_chol) {
      Eigen::LLT<Eigen::MatrixXd> llt(a_inv);
      if (llt.info() != Eigen::Success) {
        // Numerical drift pushed a_inv off positive-definite: rebuild it from
        // the exact design matrix and retry once.
        a_inv = a.llt().solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
        a_inv = (0.5 * (a_inv + a_inv.transpose())).eval();
        theta.noalias() = a_inv * b;
        llt.compute(a_inv);
        if (llt.info() != Eigen::Success)
          throw std::runtime_error("linear model: covariance lost positive-definiteness");
      }
      chol = llt.matrixL();
    }
  }

  bool operator==(const LinearArmState& other) const {
    return detail::exactly_equal(a, other.a) &&
           detail::exactly_equal(a_inv, other.a_inv) &&
           detail::exactly_equal(chol, other.chol) &&
           detail::exactly_equal(b, other.b) &&
           detail::exactly_equal(theta, other.theta);
  }
};

struct LinearState {
  std::vector<LinearArmState> arms;
  std::vector<std::uint64_t> obs;
  std::uint64_t t = 0;

  LinearState() = default;
  LinearState(std::size_t arm_count, std::size_t dim, double ridge)
      : obs(arm_count, 0) {
    arms.reserve(arm_count);
    for (std::size_t i = 0; i < arm_count; ++i) arms.emplace_back(dim, ridge);
  }

  bool operator==(const LinearState&) const = default;
};

// ============================================================================
// Policy interface
// ============================================================================

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t arm_count() const = 0;

  // Picks one non-excluded arm. Read-only on the policy; throws
  // std::invalid_argument when every arm is excluded or the context dimension
  // does not match a contextual policy's model.
  virtual ArmId select_next(const ContextVector& context,
                            std::span<const char> excluded, RngStream& rng) const = 0;

  // Deterministic point estimate of the arm's expected reward.
  virtual double estimate(ArmId arm, const ContextVector& context) const = 0;

  // Feeds one observed reward, which must be finite and in [0, 1].
  virtual void update(ArmId arm, const ContextVector& context, double reward,
                      UpdateKind kind) = 0;

  // How many individual (semi-bandit-kind) observations this arm has received.
  virtual std::uint64_t observation_count(ArmId arm) const = 0;

  virtual std::unique_ptr<Policy> clone() const = 0;

  // True when `other` is the same concrete policy type with identical
  // learned state.
  virtual bool state_equals(const Policy& other) const = 0;

 protected:
  static void check_reward(double reward) {
    if (!(reward >= 0.0 && reward <= 1.0))
      throw std::invalid_argument("update: reward must be in [0, 1]");
  }
  static void check_arm(ArmId arm, std::size_t arm_count) {
    if (arm >= arm_count) throw std::invalid_argument("arm id out of range");
  }
  // Uniform draw over the non-excluded arms.
  static ArmId uniform_allowed(std::size_t arm_count, std::span<const char> excluded,
                               RngStream& rng) {
    if (excluded.empty()) return rng.next_below(arm_count);
    std::vector<ArmId> allowed;
    allowed.reserve(arm_count);
    for (std::size_t i = 0; i < arm_count; ++i)
      if (!excluded[i]) allowed.push_back(i);
    if (allowed.empty())
      throw std::invalid_argument("select_next: every arm excluded");
    return allowed[rng.next_below(allowed.size())];
  }
};

// ---- count-based -----------------------------------------------------------

namespace detail {
// Empirical mean with the symmetric prior 0.5 for an unpulled arm, so the
// greedy ranking is defined from the very first round.
inline double count_mean(const CountSumState& st, ArmId arm) {
  return st.n[arm] == 0 ? 0.5
                        : st.s[arm] / static_cast<double>(st.n[arm]);
}
}  // namespace detail

class EpsilonGreedyPolicy final : public Policy {
 public:
  EpsilonGreedyPolicy(std::size_t arm_count, double epsilon)
      : state(arm_count), epsilon_(epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw std::invalid_argument("epsilon must be in [0, 1]");
  }

  std::string_view name() const override { return "epsilon-greedy"; }
  std::size_t arm_count() const override { return state.n.size(); }

  ArmId select_next(const ContextVector&, std::span<const char> excluded,
                    RngStream& rng) const override {
    // The exploration coin is flipped on every slot (even with epsilon = 0)
    // so stream consumption does not depend on the exclusion pattern.
    const double coin = rng.next_double();
    if (coin < epsilon_) return uniform_allowed(arm_count(), excluded, rng);
    std::vector<double> scores(arm_count());
    for (std::size_t i = 0; i < scores.size(); ++i)
      scores[i] = detail::count_mean(state, i);
    return argmax_tiebreak(scores, excluded, rng);
  }

  double estimate(ArmId arm, const ContextVector&) const override {
    check_arm(arm, arm_count());
    return detail::count_mean(state, arm);
  }

  void update(ArmId arm, const ContextVector&, double reward, UpdateKind kind) override {
    check_arm(arm, arm_count());
    check_reward(reward);
    state.n[arm] += 1;
    state.s[arm] += reward;
    state.t += 1;
    if (kind == UpdateKind::SemiBanditKind) state.obs[arm] += 1;
  }

  std::uint64_t observation_count(ArmId arm) const override {
    check_arm(arm, arm_count());
    return state.obs[arm];
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<EpsilonGreedyPolicy>(*this);
  }

  bool state_equals(const Policy& other) const override {
    auto* p = dynamic_cast<const EpsilonGreedyPolicy*>(&other);
    return p != nullptr && state == p->state;
  }

  CountSumState state;

 private:
  double epsilon_;
};

class ThompsonSamplingPolicy final : public Policy {
 public:
  explicit ThompsonSamplingPolicy(std::size_t arm_count) : state(arm_count) {}

  std::string_view name() const override { return "ts"; }
  std::size_t arm_count() const override { return state.alpha.size(); }

  ArmId select_next(const ContextVector&, std::span<const char> excluded,
                    RngStream& rng) const override {
    std::vector<double> scores(arm_count(),
                               -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!excluded.empty() && excluded[i]) continue;  // skip excluded draws
      scores[i] = rng.next_beta(state.alpha[i], state.beta[i]);
    }
    return argmax_tiebreak(scores, excluded, rng);
  }

  double estimate(ArmId arm, const ContextVector&) const override {
    check_arm(arm, arm_count());
    return state.alpha[arm] / (state.alpha[arm] + state.beta[arm]);
  }

  void update(ArmId arm, const ContextVector&, double reward, UpdateKind kind) override {
    check_arm(arm, arm_count());
    check_reward(reward);
    state.alpha[arm] += reward;
    state.beta[arm] += 1.0 - reward;
    state.t += 1;
    if (kind == UpdateKind::SemiBanditKind) state.obs[arm] += 1;
  }

  std::uint64_t observation_count(ArmId arm) const override {
    check_arm(arm, arm_count());
    return state.obs[arm];
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<ThompsonSamplingPolicy>(*this);
  }

  bool state_equals(const Policy& other) const override {
    auto* p = dynamic_cast<const ThompsonSamplingPolicy*>(&other);
    return p != nullptr && state == p->state;
  }

  BetaState state;
};

class Ucb1Policy final : public Policy {
 public:
  explicit Ucb1Policy(std::size_t arm_count) : state(arm_count) {}

  std::string_view name() const override { return "ucb1"; }
  std::size_t arm_count() const override { return state.n.size(); }

  ArmId select_next(const ContextVector&, std::span<const char> excluded,
                    RngStream& rng) const override {
    std::vector<double> scores(arm_count());
    for (std::size_t i = 0; i < scores.size(); ++i)
      scores[i] = ucb1_index(state.s[i], state.n[i], state.t);
    return argmax_tiebreak(scores, excluded, rng);
  }

  double estimate(ArmId arm, const ContextVector&) const override {
    check_arm(arm, arm_count());
    return detail::count_mean(state, arm);
  }

  void update(ArmId arm, const ContextVector&, double reward, UpdateKind kind) override {
    check_arm(arm, arm_count());
    check_reward(reward);
    state.n[arm] += 1;
    state.s[arm] += reward;
    state.t += 1;
    if (kind == UpdateKind::SemiBanditKind) state.obs[arm] += 1;
  }

  std::uint64_t observation_count(ArmId arm) const override {
    check_arm(arm, arm_count());
    return state.obs[arm];
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<Ucb1Policy>(*this);
  }

  bool state_equals(const Policy& other) const override {
    auto* p = dynamic_cast<const Ucb1Policy*>(&other);
    return p != nullptr && state == p->state;
  }

  CountSumState state;
};

class Ucb2Policy final : public Policy {
 public:
  Ucb2Policy(std::size_t arm_count, double alpha)
      : state(arm_count), epochs(arm_count, 0), alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("ucb2 alpha must be in (0, 1)");
  }

  std::string_view name() const override { return "ucb2"; }
  std::size_t arm_count() const override { return state.n.size(); }

  ArmId select_next(const ContextVector&, std::span<const char> excluded,
                    RngStream& rng) const override {
    std::vector<double> scores(arm_count());
    for (std::size_t i = 0; i < scores.size(); ++i)
      scores[i] = ucb2_index(state.s[i], state.n[i], state.t, epochs[i], alpha_);
    return argmax_tiebreak(scores, excluded, rng);
  }

  double estimate(ArmId arm, const ContextVector&) const override {
    check_arm(arm, arm_count());
    return detail::count_mean(state, arm);
  }

  void update(ArmId arm, const ContextVector&, double reward, UpdateKind kind) override {
    check_arm(arm, arm_count());
    check_reward(reward);
    state.n[arm] += 1;
    state.s[arm] += reward;
    state.t += 1;
    if (kind == UpdateKind::SemiBanditKind) state.obs[arm] += 1;
    // Epochs advance from counts alone: keep r maximal with tau(r) <= n.
    while (ucb2_tau(epochs[arm] + 1, alpha_) <= state.n[arm]) ++epochs[arm];
  }

  std::uint64_t observation_count(ArmId arm) const override {
    check_arm(arm, arm_count());
    return state.obs[arm];
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<Ucb2Policy>(*this);
  }

  bool state_equals(const Policy& other) const override {
    auto* p = dynamic_cast<const Ucb2Policy*>(&other);
    return p != nullptr && state == p->state && epochs == p->epochs;
  }

  double alpha() const { return alpha_; }

  CountSumState state;
  std::vector<std::uint64_t> epochs;

 private:
  double alpha_;
};

// ---- contextual ------------------------------------------------------------

namespace detail {
inline Eigen::Map<const Eigen::VectorXd> as_eigen(const ContextVector& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}
}  // namespace detail

// Common plumbing for the two ridge-regression policies.
class LinearPolicyBase : public Policy {
 public:
  LinearPolicyBase(std::size_t arm_count, std::size_t dim, double ridge,
                   bool maintain_chol)
      : state(arm_count, dim, ridge), dim_(dim), maintain_chol_(maintain_chol) {
    if (!(ridge > 0.0)) throw std::invalid_argument("ridge must be > 0");
  }

  std::size_t arm_count() const override { return state.arms.size(); }
  std::size_t context_dim() const { return dim_; }

  double estimate(ArmId arm, const ContextVector& context) const override {
    check_arm(arm, arm_count());
    check_dim(context);
    if (dim_ == 0) return 0.0;
    return state.arms[arm].theta.dot(detail::as_eigen(context));
  }

  void update(ArmId arm, const ContextVector& context, double reward,
              UpdateKind kind) override {
    check_arm(arm, arm_count());
    check_reward(reward);
    check_dim(context);
    if (dim_ > 0)
      state.arms[arm].absorb(detail::as_eigen(context), reward, maintain_chol_);
    state.t += 1;
    if (kind == UpdateKind::SemiBanditKind) state.obs[arm] += 1;
  }

  std::uint64_t observation_count(ArmId arm) const override {
    check_arm(arm, arm_count());
    return state.obs[arm];
  }

  LinearState state;

 protected:
  void check_dim(const ContextVector& context) const {
    if (context.size() != dim_)
      throw std::invalid_argument("context dimension mismatch");
  }

  std::size_t dim_;
  bool maintain_chol_;
};

class LinUcbPolicy final : public LinearPolicyBase {
 public:
  LinUcbPolicy(std::size_t arm_count, std::size_t dim, double exploration,
               double ridge)
      : LinearPolicyBase(arm_count, dim, ridge, /*maintain_chol=*/false),
        exploration_(exploration) {
    if (!(exploration >= 0.0))
      throw std::invalid_argument("linucb exploration scale must be >= 0");
  }

  std::string_view name() const override { return "linucb"; }

  ArmId select_next(const ContextVector& context, std::span<const char> excluded,
                    RngStream& rng) const override {
    check_dim(context);
    std::vector<double> scores(arm_count(),
                               -std::numeric_limits<double>::infinity());
    const auto x = detail::as_eigen(context);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!excluded.empty() && excluded[i]) continue;
      if (dim_ == 0) {
        scores[i] = 0.0;
        continue;
      }
      const auto& arm = state.arms[i];
      const double width = x.dot(arm.a_inv * x);
      scores[i] = arm.theta.dot(x) +
                  exploration_ * std::sqrt(width > 0.0 ? width : 0.0);
    }
    return argmax_tiebreak(scores, excluded, rng);
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<LinUcbPolicy>(*this);
  }

  bool state_equals(const Policy& other) const override {
    auto* p = dynamic_cast<const LinUcbPolicy*>(&other);
    return p != nullptr && state == p->state;
  }

  double exploration() const { return exploration_; }

 private:
  double exploration_;
};

class LinTsPolicy final : public LinearPolicyBase {
 public:
  LinTsPolicy(std::size_t arm_count, std::size_t dim, double noise_scale,
              double ridge)
      : LinearPolicyBase(arm_count, dim, ridge, /*maintain_chol=*/true),
        noise_scale_(noise_scale) {
    if (!(noise_scale >= 0.0))
      throw std::invalid_argument("lints noise scale must be >= 0");
  }

  std::string_view name() const override { return "lints"; }

  ArmId select_next(const ContextVector& context, std::span<const char> excluded,
                    RngStream& rng) const override {
    check_dim(context);
    std::vector<double> scores(arm_count(),
                               -std::numeric_limits<double>::infinity());
    const auto x = detail::as_eigen(context);
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!excluded.empty() && excluded[i]) continue;
      if (dim_ == 0) {
        scores[i] = 0.0;
        continue;
      }
      for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.next_gaussian();
      const auto& arm = state.arms[i];
      // theta + v * L z has covariance v^2 * a_inv (chol = lower factor of a_inv).
      const Eigen::VectorXd sampled =
          arm.theta + noise_scale_ * (arm.chol * z);
      scores[i] = sampled.dot(x);
    }
    return argmax_tiebreak(scores, excluded, rng);
  }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<LinTsPolicy>(*this);
  }

  bool state_equals(const Policy& other) const override {
    auto* p = dynamic_cast<const LinTsPolicy*>(&other);
    return p != nullptr && state == p->state;
  }

  double noise_scale() const { return noise_scale_; }

 private:
  double noise_scale_;
};

// ============================================================================
// Factory
// ============================================================================

struct PolicyConfig {
  std::string name = "ts";
  double epsilon = 0.0009;   // epsilon-greedy exploration rate
  double ucb2_alpha = 0.5;   // epoch acceleration, in (0, 1)
  double lin_alpha = 1.0;    // linucb exploration scale
  double lin_v = 1.0;        // lints posterior noise scale
  double ridge = 1.0;        // linear-model regularizer
};

inline std::string canonical_policy_name(std::string_view name) {
  if (name == "epsilon-greedy" || name == "e-greedy" || name == "egreedy")
    return "epsilon-greedy";
  if (name == "ts" || name == "thompson" || name == "thompson-sampling")
    return "ts";
  if (name == "ucb1" || name == "ucb") return "ucb1";
  if (name == "ucb2") return "ucb2";
  if (name == "linucb") return "linucb";
  if (name == "lints") return "lints";
  throw std::invalid_argument(
      "unknown policy '" + std::string(name) +
      "' (expected one of: epsilon-greedy, ts, ucb1, ucb2, linucb, lints)");
}

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& config,
                                           std::size_t arm_count,
                                           std::size_t context_dim) {
  if (arm_count == 0) throw std::invalid_argument("policy needs at least one arm");
  const std::string name = canonical_policy_name(config.name);
  if (name == "epsilon-greedy")
    return std::make_unique<EpsilonGreedyPolicy>(arm_count, config.epsilon);
  if (name == "ts") return std::make_unique<ThompsonSamplingPolicy>(arm_count);
  if (name == "ucb1") return std::make_unique<Ucb1Policy>(arm_count);
  if (name == "ucb2")
    return std::make_unique<Ucb2Policy>(arm_count, config.ucb2_alpha);
  if (name == "linucb")
    return std::make_unique<LinUcbPolicy>(arm_count, context_dim,
                                          config.lin_alpha, config.ridge);
  return std::make_unique<LinTsPolicy>(arm_count, context_dim, config.lin_v,
                                       config.ridge);
}

}  // namespace combandit
