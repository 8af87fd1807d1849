#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "credlab/dist.hpp"

namespace credlab {

// ---------------------------------------------------------------------------
// Messages and actions of the bilateral messaging game.  The seller talks to
// one bidder at a time; a bidder only ever sees the messages addressed to
// them, their own replies, and finally whether they won and what they paid.
// ---------------------------------------------------------------------------

enum class MsgKind { BidMenu, PriceOffer, AskAtPrice };

struct Message {
  MsgKind kind = MsgKind::BidMenu;
  std::vector<Rat> bids;  // BidMenu: positive bid levels; declining is free
  Rat price{0};           // PriceOffer / AskAtPrice
  bool operator==(const Message&) const = default;
};

enum class ActKind { Decline, Bid, Accept, Stay, Quit };

struct Action {
  ActKind kind = ActKind::Decline;
  Rat bid{0};  // set for ActKind::Bid
  bool operator==(const Action&) const = default;
};

std::vector<Action> legal_actions(const Message& m);

// ---------------------------------------------------------------------------
// Protocols.  Each variant stores its cost-indexed parameters explicitly so
// play-by-the-book is a pure function of (cost index, value profile).
// ---------------------------------------------------------------------------

struct FpaMenus {
  std::vector<std::vector<Rat>> menu_per_cost;  // ascending positive levels
};
struct FpaWalkaway {
  std::vector<Rat> bid_space;  // public levels; seller keeps if max <= cost
};
struct PostedPrice {
  std::vector<Rat> price_per_cost;
};
struct Waterfall {
  std::vector<std::vector<Rat>> prices_per_cost;  // per contact position
};
struct SecondPrice {
  std::vector<Rat> reserve_per_cost;
};
struct AllPay {
  std::vector<std::vector<Rat>> menu_per_cost;  // every bidder pays own bid
};
struct Ascending {
  std::vector<std::vector<Rat>> clock_per_cost;  // ascending, starts at reserve
};
struct Dutch {
  std::vector<std::vector<Rat>> clock_per_cost;  // descending to the reserve
};

struct Protocol {
  std::variant<FpaMenus, FpaWalkaway, PostedPrice, Waterfall, SecondPrice,
               AllPay, Ascending, Dutch>
      rules;
  unsigned n_bidders = 2;

  bool is_static() const;
  bool winner_pays_only() const;
};

// Union of messages any single bidder can receive across all seller costs
// under play-by-the-book (the information-set alphabet of one bidder).  The
// value grid is needed to expand second-price solicitations into their bid
// menus.
std::vector<Message> information_sets(const Protocol& p,
                                      const Distribution& values);

// ---------------------------------------------------------------------------
// Strategies.  Book bidder strategies are memoryless: a reply depends only on
// the received message and the bidder's value.  That is enough to express
// every book strategy in this laboratory (menu assignments, threshold accept
// rules, drop-at-value clocks) and keeps interim deviations enumerable.
// ---------------------------------------------------------------------------

class StrategyProfile {
public:
  StrategyProfile() = default;
  StrategyProfile(std::vector<Message> alphabet,
                  std::vector<std::vector<Action>> table);

  const std::vector<Message>& alphabet() const { return alphabet_; }
  const Action& reply(const Message& m, std::size_t value_idx) const;
  // Rebind the reply for one (message, value) pair; used when enumerating
  // interim deviations and candidate equilibria.
  void set_reply(std::size_t msg_idx, std::size_t value_idx, Action a);
  std::optional<std::size_t> message_index(const Message& m) const;

private:
  std::vector<Message> alphabet_;
  std::vector<std::vector<Action>> table_;  // [message][value] -> action
};

// Book strategy profile for a protocol: menu assignments follow the discrete
// envelope construction, price offers are accepted up to the bidder's highest
// planned bid, and ascending clocks are dropped strictly above value.
StrategyProfile book_strategy(const Protocol& p, const Distribution& values);

// ---------------------------------------------------------------------------
// Play records.
// ---------------------------------------------------------------------------

struct ObsEvent {
  Message msg;
  Action reply;
  bool operator==(const ObsEvent&) const = default;
};

struct Observation {
  std::vector<ObsEvent> events;
  bool won = false;
  Rat payment{0};
  bool operator==(const Observation&) const = default;
};

struct Outcome {
  std::optional<std::size_t> winner;
  std::vector<Rat> payments;  // per bidder; zero unless paying
  bool trade() const { return winner.has_value(); }
};

struct Transcript {
  std::size_t cost_idx = 0;
  std::vector<std::size_t> value_profile;
  std::vector<std::size_t> order;  // contact permutation used
  std::vector<std::pair<std::size_t, ObsEvent>> log;
  Outcome outcome;
};

// One realized branch of book play (branches arise from uniform tie-breaks).
struct PlayBranch {
  Rat prob{1};
  Transcript transcript;
  std::vector<Observation> observations;
};

// Seller profit of a realized outcome.
Rat outcome_profit(const Outcome& o, const Rat& cost_value);

// Replaces one bidder's replies while everyone else follows the book; used to
// test interim deviations.
struct StrategyOverride {
  std::size_t bidder = 0;
  const StrategyProfile* strategy = nullptr;
};

// All tie-break branches of play-by-the-book at a fixed cost index and value
// profile, contacting bidders in the given order (identity order is the book
// default; explanations may posit other orders).
std::vector<PlayBranch> play_by_book_branches(
    const Protocol& p, const Distribution& values, const Distribution& costs,
    const StrategyProfile& book, std::size_t cost_idx,
    const std::vector<std::size_t>& profile, const std::vector<std::size_t>& order,
    const StrategyOverride* deviant = nullptr);

// Single sampled branch: ties resolved by the seeded uniform draw.
PlayBranch play_by_book(const Protocol& p, const Distribution& values,
                        const Distribution& costs, const StrategyProfile& book,
                        std::size_t cost_idx,
                        const std::vector<std::size_t>& profile,
                        std::uint64_t seed);

// Exact expected seller profit of book play at one cost, enumerating every
// value profile and tie-break branch.
Rat expected_profit(const Protocol& p, const Distribution& values,
                    const Distribution& costs, const StrategyProfile& book,
                    std::size_t cost_idx);

// Expected profit restricted to value profiles accepted by the filter, as a
// (conditional expectation, event probability) pair.
std::pair<Rat, Rat> expected_profit_where(
    const Protocol& p, const Distribution& values, const Distribution& costs,
    const StrategyProfile& book, std::size_t cost_idx,
    const std::function<bool(const std::vector<std::size_t>&)>& filter);

// Enumerates all value index profiles of the given length.
std::vector<std::vector<std::size_t>> all_profiles(std::size_t n_types,
                                                   unsigned n_bidders);
std::vector<std::vector<std::size_t>> all_orders(unsigned n_bidders);

}  // namespace credlab
