#pragma once

#include <optional>
#include <vector>

#include "credlab/dist.hpp"

namespace credlab {

// Index of the smallest positive-mass grid value whose virtual value weakly
// exceeds the seller's cost, i.e. the optimal reserve for a regular value
// distribution.  Empty when no grid value clears the cost (no trade).
std::optional<std::size_t> optimal_reserve_index(const Distribution& values,
                                                 const Rat& cost);
std::optional<Rat> optimal_reserve(const Distribution& values, const Rat& cost);

// Interim win probability of each value type in the symmetric equilibrium of
// the optimal auction with reserve index r: opponents below the type lose,
// equal types split the win uniformly, types below the reserve never win.
std::vector<Rat> interim_win_prob(const Distribution& values,
                                  unsigned n_bidders, std::size_t reserve_idx);

// Equilibrium bid of each value type in the first-price implementation of the
// optimal auction, from the discrete envelope: the lowest participating type
// bids the reserve, and successive types are lifted by binding upward
// incentive constraints.  On fine grids this converges to
//   b(v) = v - (1/Q(v)) * Integral_r^v Q(s) ds,  Q(s) = F(s)^(n-1).
// Types below the reserve decline (no bid).
std::vector<std::optional<Rat>> menu_bids(const Distribution& values,
                                          unsigned n_bidders,
                                          std::size_t reserve_idx);

// Convenience wrapper: bid of a single grid type under the cost-optimal
// reserve; empty when the type is below the reserve or no reserve exists.
std::optional<Rat> envelope_bid(const Distribution& values, unsigned n_bidders,
                                const Rat& cost, const Rat& type);

// Winner of the optimal allocation for a realized profile of value indices:
// highest type weakly above the reserve, ties listed together.
struct Allocation {
  bool trade = false;
  std::vector<std::size_t> winners;  // bidder positions sharing the top type
};
Allocation myerson_allocation(const Distribution& values, const Rat& cost,
                              const std::vector<std::size_t>& profile);

// Full-commitment benchmark profit, per seller cost and in expectation over
// the cost distribution.  Computed by exact summation over winner-type order
// statistics (equivalently, over type profiles).
struct BenchmarkProfit {
  std::vector<double> per_cost;  // aligned with the cost grid
  std::vector<double> trade_prob;
  double expected = 0.0;
};
BenchmarkProfit benchmark_profit(const Distribution& values,
                                 const Distribution& costs,
                                 unsigned n_bidders);

// Largest violation of the profit envelope identity
//   per_cost(c) = Integral_c^max TradeProb(s) ds + per_cost(max)
// over the cost grid, with the integral evaluated by trapezoid quadrature.
double envelope_identity_gap(const Distribution& values,
                             const Distribution& costs, unsigned n_bidders);

// Case-B reserve objective: seller profit against a single remaining bidder
// when the reserve is forced to grid index r,
//   W(r) = Sum_{k >= r} (b(theta_k; r) - cost) * mass_k.
double reserve_objective_W(const Distribution& values, unsigned n_bidders,
                           const Rat& cost, std::size_t reserve_idx);

// Central finite difference of W at an interior reserve index.
double reserve_objective_dW(const Distribution& values, unsigned n_bidders,
                            const Rat& cost, std::size_t reserve_idx);

}  // namespace credlab
