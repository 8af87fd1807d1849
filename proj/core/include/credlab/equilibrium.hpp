#pragma once

#include <string>

#include "credlab/game.hpp"

namespace credlab {

// ---------------------------------------------------------------------------
// Bayesian incentive compatibility on finite instances.
// ---------------------------------------------------------------------------

// Exhaustive interim check: for every value type, the book reply map is
// compared against every alternative message-contingent reply map, holding
// everyone else to the book and taking expectations over the cost prior,
// opponents' values, and tie-breaks.  `max_regret` is the largest exact gain
// any type can secure; the profile is BIC when it is non-positive.
struct BicReport {
  bool ok = true;
  Rat max_regret{0};
  std::size_t worst_value = 0;      // type achieving max_regret
  std::uint64_t strategies_checked = 0;
};
BicReport verify_bic(const Protocol& p, const Distribution& values,
                     const Distribution& costs, const StrategyProfile& book);

// Expected interim utility of `bidder` with fixed value `value_idx` when they
// play `own` and everyone else plays the book, averaged over the cost prior.
Rat interim_utility(const Protocol& p, const Distribution& values,
                    const Distribution& costs, const StrategyProfile& book,
                    std::size_t bidder, std::size_t value_idx,
                    const StrategyProfile& own);

// ---------------------------------------------------------------------------
// Threshold equilibria of first-price auctions with restricted bid spaces and
// a seller walk-away option (trade happens only at bids strictly above cost).
// ---------------------------------------------------------------------------

// A bid space with finitely many discrete levels and an optional connected
// tail [tail_floor, infinity).  The tail floor, when present, must exceed
// every cost atom so that tail bids always trade.
struct BidSpace {
  std::vector<Rat> levels;      // strictly increasing discrete bids
  std::optional<Rat> tail_floor;
  std::string label;            // for reports
};

struct ThresholdEquilibrium {
  bool converged = false;
  std::string diagnostic;
  // thresholds[k] = lowest value bidding levels[k]; if a tail is present an
  // extra final entry is the lowest value bidding inside the tail.
  std::vector<double> thresholds;
  double expected_profit = 0.0;  // over the cost prior
};

// Symmetric threshold equilibrium via Gauss-Seidel sweeps over the
// indifference conditions, on the piecewise-uniform continuization of the
// value grid.  Profit is evaluated with the virtual-value revenue identity.
ThresholdEquilibrium solve_threshold_fpa(const BidSpace& space,
                                         const Distribution& values,
                                         const Distribution& costs,
                                         unsigned n_bidders);

// ---------------------------------------------------------------------------
// Bid-space optimization.
// ---------------------------------------------------------------------------

struct BidSpaceResult {
  BidSpace space;
  ThresholdEquilibrium eq;
};
struct OptimizeReport {
  std::vector<BidSpaceResult> results;   // in candidate order
  std::size_t best = 0;                  // first argmax in canonical order
  bool best_is_connected = true;         // no discrete level below the tail
};
OptimizeReport optimize_bid_space(const std::vector<BidSpace>& candidates,
                                  const Distribution& values,
                                  const Distribution& costs,
                                  unsigned n_bidders, unsigned workers = 1);

// Highest equilibrium bid of the two-point-value Dutch/first-price menu with
// the reserve at the low value: k_n = v_hi - (v_hi - v_lo) * Q_lo / Q_hi.
Rat dutch_top_bid(const Distribution& values, unsigned n_bidders);

}  // namespace credlab
