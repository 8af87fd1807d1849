#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "credlab/dist.hpp"
#include "credlab/game.hpp"

namespace credlab {

// ---------------------------------------------------------------------------
// Seller deviation strategies.  A deviation is a per-cost decision tree over
// the protocol's own message alphabet: internal nodes contact one bidder with
// one message and branch on the reply; leaves finalize an outcome.  Payments
// respect pay-as-bid discipline: a bidder can only be charged their standing
// claim (their last submitted bid / accepted price / highest stayed ask),
// except for the second-price rule, which may charge any grid level up to the
// winner's claim, and for all-pay rules, which may collect every standing bid.
// ---------------------------------------------------------------------------

enum class FinalKind {
  Keep,             // no trade, nobody pays (winner-pays variants)
  AllocateAtClaim,  // trade with `bidder` at their standing claim
  SecondPriceRule,  // trade with `bidder` at `price` <= their claim
  KeepCollect,      // all-pay only: no trade, collect every standing bid
  AllocateCollect,  // all-pay only: trade with `bidder`, collect all bids
};

struct Finalize {
  FinalKind kind = FinalKind::Keep;
  std::size_t bidder = 0;  // AllocateAtClaim / SecondPriceRule / AllocateCollect
  Rat price{0};            // SecondPriceRule
  bool operator==(const Finalize&) const = default;
};

// Sentinel child index for reply branches no bidder type can reach.
inline constexpr std::size_t kUnreachable = static_cast<std::size_t>(-1);

struct DevNode {
  std::optional<Finalize> fin;  // set on leaves
  std::size_t bidder = 0;
  Message msg;
  std::vector<std::size_t> child;  // parallel to legal_actions(msg)
};

// Plan for one seller cost; an empty node list means "follow the book".
struct DeviationPlan {
  std::vector<DevNode> nodes;  // node 0 is the root
  bool is_book() const { return nodes.empty(); }
};

struct DeviationStrategy {
  std::string name;
  std::vector<DeviationPlan> plan_per_cost;  // indexed like the cost grid
  unsigned contact_bound = 1;
};

// ---------------------------------------------------------------------------
// Safety: every bidder's observation under the deviation must admit an
// innocent explanation -- an alternative seller cost, opponent types, contact
// order, and tie branch under play-by-the-book that reproduces the identical
// observation with the bidder's own type held fixed.
// ---------------------------------------------------------------------------

struct Explanation {
  std::size_t cost_idx = 0;
  std::vector<std::size_t> profile;  // full value profile, own slot fixed
  std::vector<std::size_t> order;
  std::size_t branch = 0;
};

struct SafetyEntry {
  std::size_t bidder = 0;
  std::size_t cost_idx = 0;
  std::vector<std::size_t> profile;
  Explanation expl;
};

struct SafetyCounterexample {
  std::size_t bidder = 0;
  std::size_t cost_idx = 0;
  std::vector<std::size_t> profile;
  Observation observed;
};

enum class SafetyStatus { Safe, Unsafe, Inconclusive };

struct SafetyReport {
  SafetyStatus status = SafetyStatus::Inconclusive;
  std::vector<SafetyEntry> certificate;
  std::optional<SafetyCounterexample> counterexample;
  std::string inconclusive_dimension;
};

// ---------------------------------------------------------------------------
// Credibility verdicts.
// ---------------------------------------------------------------------------

enum class Verdict { Credible, NotCredible, Inconclusive };

struct ProfitRow {
  std::size_t cost_idx = 0;
  Rat book_profit{0};
  Rat deviation_profit{0};
};

struct SearchBounds {
  unsigned contacts_per_bidder = 0;  // 0: 1 for static, clock length otherwise
  std::uint64_t state_cap = 4'000'000;
  std::vector<Rat> side_bids;  // side-menu levels for joint deviations
  std::string describe() const;
};

struct JointDeviation {
  enum class Final { BestStanding, PartnerAtClaim, Keep };
  std::size_t seller_cost_idx = 0;
  std::size_t partner = 0;
  Message partner_msg;                  // opening side offer to the partner
  std::vector<std::size_t> mimic_cost;  // per partner reply: book cost to run
  std::vector<Final> final_rule;        // per partner reply
  StrategyProfile partner_play;         // partner replies, extended alphabet
};

struct CredibilityReport {
  Verdict verdict = Verdict::Inconclusive;
  std::optional<DeviationStrategy> witness;
  std::optional<JointDeviation> joint_witness;
  std::optional<SafetyReport> witness_safety;
  std::vector<ProfitRow> profit_table;
  std::string bounds_desc;
  std::uint64_t enumeration_count = 0;
  std::string note;
};

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

// Deterministic execution of one deviation plan: transcript, observations and
// seller profit for a realized value profile.  Throws std::logic_error if the
// plan hits an unreachable branch or finalizes inconsistently with claims.
struct DevOutcomeBranch {
  Rat prob{1};
  Outcome outcome;
  std::vector<Observation> observations;
};
std::vector<DevOutcomeBranch> run_deviation(
    const DeviationPlan& plan, const Protocol& p, const Distribution& values,
    const Distribution& costs, const StrategyProfile& book,
    std::size_t cost_idx, const std::vector<std::size_t>& profile);

SafetyReport is_safe(const DeviationStrategy& d, const Protocol& p,
                     const Distribution& values, const Distribution& costs,
                     const StrategyProfile& book,
                     std::uint64_t explanation_cap = 50'000'000);

// Expected seller profit of the deviation at one cost, over all value
// profiles (and tie branches of any book portions).
Rat deviation_profit(const DeviationStrategy& d, const Protocol& p,
                     const Distribution& values, const Distribution& costs,
                     const StrategyProfile& book, std::size_t cost_idx);

// Conditional variant: (conditional expectation, event probability) over the
// profiles accepted by the filter.
std::pair<Rat, Rat> deviation_profit_where(
    const DeviationStrategy& d, const Protocol& p, const Distribution& values,
    const Distribution& costs, const StrategyProfile& book,
    std::size_t cost_idx,
    const std::function<bool(const std::vector<std::size_t>&)>& filter);

CredibilityReport check_credibility(const Protocol& p,
                                    const Distribution& values,
                                    const Distribution& costs,
                                    const StrategyProfile& book,
                                    const SearchBounds& bounds,
                                    unsigned workers = 1);

// Named deviation constructions, each tagged and individually runnable.
struct CannedDeviation {
  DeviationStrategy strategy;
  bool applicable = true;
  std::string skip_reason;
};
std::vector<CannedDeviation> canned_deviations(const Protocol& p,
                                               const Distribution& values,
                                               const Distribution& costs,
                                               const StrategyProfile& book);

// Expected payoffs of one joint deviation: the seller's ex-ante profit at the
// deviating cost, the seller's profit conditional on each partner type, the
// partner's interim payoff per type under the prescribed replies, the best
// alternative reply payoff per type, and whether the prescription is
// incentive compatible.
struct JointDeviationEval {
  Rat seller_total{0};
  std::vector<Rat> seller_by_partner_type;
  std::vector<Rat> partner_utility;
  std::vector<Rat> partner_best_alternative;
  bool partner_ic = true;
};
JointDeviationEval evaluate_joint_deviation(const JointDeviation& jd,
                                            const Protocol& p,
                                            const Distribution& values,
                                            const Distribution& costs,
                                            const StrategyProfile& book);

CredibilityReport check_strong_credibility(const Protocol& p,
                                           const Distribution& values,
                                           const Distribution& costs,
                                           const StrategyProfile& book,
                                           const SearchBounds& bounds,
                                           unsigned workers = 1);

// Static-protocol characterization properties.
struct StaticProperties {
  bool pay_as_bid = false;
  bool winner_paying = false;
  bool symmetric = false;
  bool public_bid_distribution = false;
};
StaticProperties characterize_static(const Protocol& p,
                                     const Distribution& values,
                                     const Distribution& costs,
                                     const StrategyProfile& book);

// For ascending protocols: verifies that dropping at value is an ex post best
// response for every bidder outside the joint deviation, against every
// realized cost and opponent profile.
bool lemma_bestresponse_check(const Protocol& p, const Distribution& values,
                              const Distribution& costs,
                              const StrategyProfile& book,
                              const std::optional<JointDeviation>& joint);

}  // namespace credlab
