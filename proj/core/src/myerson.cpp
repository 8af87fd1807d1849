#include "credlab/myerson.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace credlab {
namespace {

double binom(unsigned n, unsigned k) {
  double r = 1.0;
  for (unsigned i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// Rational binomial coefficient for the small exponents used here.
Rat binom_rat(unsigned n, unsigned k) {
  Rat r(1);
  for (unsigned i = 0; i < k; ++i) {
    r *= Rat(static_cast<std::int64_t>(n - i),
             static_cast<std::int64_t>(i + 1));
  }
  return r;
}

Rat pow_rat(const Rat& x, unsigned e) {
  Rat r(1);
  for (unsigned i = 0; i < e; ++i) r *= x;
  return r;
}

// Double-precision twin of interim_win_prob/menu_bids for quadrature-heavy
// callers (reserve objective, benchmark on fine grids).
std::vector<double> win_prob_d(const Distribution& values, unsigned n_bidders,
                               std::size_t reserve_idx) {
  std::vector<double> q(values.size(), 0.0);
  for (std::size_t k = reserve_idx; k < values.size(); ++k) {
    double below = values.cdf_below(k).to_double();
    double atom = values.mass(k).to_double();
    double sum = 0.0;
    for (unsigned j = 0; j < n_bidders; ++j) {
      sum += binom(n_bidders - 1, j) * std::pow(atom, j) *
             std::pow(below, n_bidders - 1 - j) / (j + 1);
    }
    q[k] = sum;
  }
  return q;
}

std::vector<double> menu_bids_d(const Distribution& values, unsigned n_bidders,
                                std::size_t reserve_idx) {
  std::vector<double> q = win_prob_d(values, n_bidders, reserve_idx);
  std::vector<double> bids(values.size(),
                           std::numeric_limits<double>::quiet_NaN());
  double rent = 0.0;  // information rent U(theta_k) accumulated upward
  std::ptrdiff_t prev = -1;
  for (std::size_t k = reserve_idx; k < values.size(); ++k) {
    if (values.mass(k) == Rat(0)) continue;
    if (prev >= 0) {
      rent += q[prev] *
              (values.point(k).to_double() - values.point(prev).to_double());
    }
    bids[k] = values.point(k).to_double() - (q[k] > 0.0 ? rent / q[k] : 0.0);
    prev = static_cast<std::ptrdiff_t>(k);
  }
  return bids;
}

}  // namespace

std::optional<std::size_t> optimal_reserve_index(const Distribution& values,
                                                 const Rat& cost) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values.mass(k) == Rat(0)) continue;
    if (!(virtual_value(values, k) < cost)) return k;
  }
  return std::nullopt;
}

std::optional<Rat> optimal_reserve(const Distribution& values,
                                   const Rat& cost) {
  auto idx = optimal_reserve_index(values, cost);
  if (!idx) return std::nullopt;
  return values.point(*idx);
}

std::vector<Rat> interim_win_prob(const Distribution& values,
                                  unsigned n_bidders,
                                  std::size_t reserve_idx) {
  if (n_bidders == 0) throw std::invalid_argument("need at least one bidder");
  std::vector<Rat> q(values.size(), Rat(0));
  for (std::size_t k = reserve_idx; k < values.size(); ++k) {
    Rat below = values.cdf_below(k);
    Rat atom = values.mass(k);
    Rat sum(0);
    for (unsigned j = 0; j < n_bidders; ++j) {
      sum += binom_rat(n_bidders - 1, j) * pow_rat(atom, j) *
             pow_rat(below, n_bidders - 1 - j) /
             Rat(static_cast<std::int64_t>(j + 1));
    }
    q[k] = sum;
  }
  return q;
}

std::vector<std::optional<Rat>> menu_bids(const Distribution& values,
                                          unsigned n_bidders,
                                          std::size_t reserve_idx) {
  std::vector<Rat> q = interim_win_prob(values, n_bidders, reserve_idx);
  std::vector<std::optional<Rat>> bids(values.size());
  Rat rent(0);
  std::ptrdiff_t prev = -1;
  for (std::size_t k = reserve_idx; k < values.size(); ++k) {
    if (values.mass(k) == Rat(0)) continue;
    if (prev >= 0) rent += q[prev] * (values.point(k) - values.point(prev));
    Rat bid = values.point(k);
    if (Rat(0) < q[k]) bid -= rent / q[k];
    bids[k] = bid;
    prev = static_cast<std::ptrdiff_t>(k);
  }
  return bids;
}

std::optional<Rat> envelope_bid(const Distribution& values, unsigned n_bidders,
                                const Rat& cost, const Rat& type) {
  auto r = optimal_reserve_index(values, cost);
  if (!r) return std::nullopt;
  auto k = values.index_of(type);
  if (!k) throw std::invalid_argument("type is not a grid point");
  if (*k < *r) return std::nullopt;
  return menu_bids(values, n_bidders, *r)[*k];
}

Allocation myerson_allocation(const Distribution& values, const Rat& cost,
                              const std::vector<std::size_t>& profile) {
  Allocation a;
  auto r = optimal_reserve_index(values, cost);
  if (!r) return a;
  std::size_t best = 0;
  bool found = false;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] < *r) continue;
    if (!found || profile[i] > best) {
      best = profile[i];
      found = true;
    }
  }
  if (!found) return a;
  a.trade = true;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] == best) a.winners.push_back(i);
  }
  return a;
}

BenchmarkProfit benchmark_profit(const Distribution& values,
                                 const Distribution& costs,
                                 unsigned n_bidders) {
  BenchmarkProfit out;
  out.per_cost.resize(costs.size(), 0.0);
  out.trade_prob.resize(costs.size(), 0.0);
  for (std::size_t c = 0; c < costs.size(); ++c) {
    auto r = optimal_reserve_index(values, costs.point(c));
    if (!r) continue;
    std::vector<double> bids = menu_bids_d(values, n_bidders, *r);
    double revenue = 0.0;
    for (std::size_t k = *r; k < values.size(); ++k) {
      if (values.mass(k) == Rat(0)) continue;
      // P(winning type equals theta_k): all bidders weakly below, not all
      // strictly below.
      double p_top = std::pow(values.cdf(k).to_double(), n_bidders) -
                     std::pow(values.cdf_below(k).to_double(), n_bidders);
      revenue += bids[k] * p_top;
    }
    double trade =
        1.0 - std::pow(values.cdf_below(*r).to_double(), n_bidders);
    out.trade_prob[c] = trade;
    out.per_cost[c] = revenue - costs.point(c).to_double() * trade;
    out.expected += costs.mass(c).to_double() * out.per_cost[c];
  }
  return out;
}

double envelope_identity_gap(const Distribution& values,
                             const Distribution& costs, unsigned n_bidders) {
  BenchmarkProfit bp = benchmark_profit(values, costs, n_bidders);
  std::size_t m = costs.size();
  double gap = 0.0;
  // Accumulate the trapezoid integral of TradeProb from the top cost down.
  double integral = 0.0;
  for (std::size_t c = m; c-- > 0;) {
    if (c + 1 < m) {
      double dc =
          costs.point(c + 1).to_double() - costs.point(c).to_double();
      integral += 0.5 * (bp.trade_prob[c] + bp.trade_prob[c + 1]) * dc;
    }
    double rhs = integral + bp.per_cost[m - 1];
    gap = std::max(gap, std::abs(bp.per_cost[c] - rhs));
  }
  return gap;
}

double reserve_objective_W(const Distribution& values, unsigned n_bidders,
                           const Rat& cost, std::size_t reserve_idx) {
  std::vector<double> bids = menu_bids_d(values, n_bidders, reserve_idx);
  double w = 0.0;
  for (std::size_t k = reserve_idx; k < values.size(); ++k) {
    if (values.mass(k) == Rat(0)) continue;
    w += (bids[k] - cost.to_double()) * values.mass(k).to_double();
  }
  return w;
}

double reserve_objective_dW(const Distribution& values, unsigned n_bidders,
                            const Rat& cost, std::size_t reserve_idx) {
  if (reserve_idx == 0 || reserve_idx + 1 >= values.size()) {
    throw std::invalid_argument("dW needs an interior reserve index");
  }
  double lo = reserve_objective_W(values, n_bidders, cost, reserve_idx - 1);
  double hi = reserve_objective_W(values, n_bidders, cost, reserve_idx + 1);
  double span = values.point(reserve_idx + 1).to_double() -
                values.point(reserve_idx - 1).to_double();
  return (hi - lo) / span;
}

}  // namespace credlab
