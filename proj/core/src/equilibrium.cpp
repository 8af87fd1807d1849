#include "credlab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "credlab/myerson.hpp"

namespace credlab {
namespace {

Rat utility_from_outcome(const Outcome& o, std::size_t bidder,
                         const Rat& value) {
  Rat u = -o.payments[bidder];
  if (o.winner && *o.winner == bidder) u += value;
  return u;
}

// ---------------------------------------------------------------------------
// Piecewise-uniform continuization of a value grid: each atom's mass is
// spread over its density cell.  Fine grids converge to their continuous
// counterparts at rate O(1/n).
// ---------------------------------------------------------------------------
struct ContValues {
  std::vector<double> left, right, dens, cdf_left;
  double lo = 0.0, hi = 1.0;

  static ContValues build(const Distribution& d) {
    ContValues c;
    std::size_t n = d.size();
    c.left.resize(n);
    c.right.resize(n);
    c.dens.resize(n);
    c.cdf_left.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      double p = d.point(k).to_double();
      double w = d.mass(k).to_double() / d.density(k).to_double();
      double mid_lo = (k == 0) ? p - w / 2
                               : (d.point(k).to_double() +
                                  d.point(k - 1).to_double()) /
                                     2;
      double mid_hi = (k + 1 == n) ? p + w / 2
                                   : (d.point(k).to_double() +
                                      d.point(k + 1).to_double()) /
                                         2;
      c.left[k] = (k == 0) ? mid_lo : c.right[k - 1];
      c.right[k] = mid_hi;
      c.dens[k] = d.mass(k).to_double() / (c.right[k] - c.left[k]);
      c.cdf_left[k] = (k == 0) ? 0.0 : c.cdf_left[k - 1] +
                                           d.mass(k - 1).to_double();
    }
    c.lo = c.left.front();
    c.hi = c.right.back();
    return c;
  }

  double cdf(double x) const {
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    std::size_t k =
        std::upper_bound(right.begin(), right.end(), x) - right.begin();
    if (k >= left.size()) return 1.0;
    return cdf_left[k] + dens[k] * (x - left[k]);
  }
};

double win_prob(double p_below, double p_at, unsigned n_bidders) {
  double sum = 0.0;
  double binom = 1.0;
  double at_pow = 1.0;
  for (unsigned j = 0; j < n_bidders; ++j) {
    sum += binom * at_pow * std::pow(p_below, n_bidders - 1 - j) / (j + 1);
    binom = binom * (n_bidders - 1 - j) / (j + 1);
    at_pow *= p_at;
  }
  return sum;
}

}  // namespace

Rat interim_utility(const Protocol& p, const Distribution& values,
                    const Distribution& costs, const StrategyProfile& book,
                    std::size_t bidder, std::size_t value_idx,
                    const StrategyProfile& own) {
  std::vector<std::size_t> order(p.n_bidders);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  StrategyOverride ov{bidder, &own};
  Rat total(0);
  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs.mass(c) == Rat(0)) continue;
    for (auto profile : all_profiles(values.size(), p.n_bidders)) {
      if (profile[bidder] != value_idx) continue;
      Rat prob = costs.mass(c);
      for (std::size_t i = 0; i < profile.size(); ++i) {
        if (i != bidder) prob *= values.mass(profile[i]);
      }
      if (prob == Rat(0)) continue;
      for (const auto& b : play_by_book_branches(p, values, costs, book, c,
                                                 profile, order, &ov)) {
        total += prob * b.prob *
                 utility_from_outcome(b.transcript.outcome, bidder,
                                      values.point(value_idx));
      }
    }
  }
  return total;
}

BicReport verify_bic(const Protocol& p, const Distribution& values,
                     const Distribution& costs, const StrategyProfile& book) {
  const auto& alphabet = book.alphabet();
  std::vector<std::vector<Action>> menus;
  std::uint64_t space = 1;
  for (const Message& m : alphabet) {
    menus.push_back(legal_actions(m));
    space *= menus.back().size();
    if (space > 200000) {
      throw std::invalid_argument(
          "interim strategy space too large for exhaustive BIC check");
    }
  }

  BicReport rep;
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (values.mass(v) == Rat(0)) continue;
    Rat base = interim_utility(p, values, costs, book, 0, v, book);
    StrategyProfile probe = book;
    std::vector<std::size_t> odo(alphabet.size(), 0);
    while (true) {
      for (std::size_t m = 0; m < alphabet.size(); ++m) {
        probe.set_reply(m, v, menus[m][odo[m]]);
      }
      ++rep.strategies_checked;
      Rat u = interim_utility(p, values, costs, book, 0, v, probe);
      if (rep.max_regret < u - base) {
        rep.max_regret = u - base;
        rep.worst_value = v;
      }
      std::size_t pos = 0;
      while (pos < odo.size() && ++odo[pos] == menus[pos].size()) {
        odo[pos++] = 0;
      }
      if (pos == odo.size()) break;
    }
  }
  rep.ok = !(Rat(0) < rep.max_regret);
  return rep;
}

ThresholdEquilibrium solve_threshold_fpa(const BidSpace& space,
                                         const Distribution& values,
                                         const Distribution& costs,
                                         unsigned n_bidders) {
  ThresholdEquilibrium out;
  std::size_t m = space.levels.size();
  for (std::size_t k = 0; k + 1 < m; ++k) {
    if (!(space.levels[k] < space.levels[k + 1])) {
      out.diagnostic = "bid levels must be strictly increasing";
      return out;
    }
  }
  if (space.tail_floor) {
    for (std::size_t c = 0; c < costs.size(); ++c) {
      if (costs.mass(c) == Rat(0)) continue;
      if (!(costs.point(c) < *space.tail_floor)) {
        out.diagnostic = "tail floor must exceed every cost atom";
        return out;
      }
    }
    if (m > 0 && !(space.levels.back() < *space.tail_floor)) {
      out.diagnostic = "tail floor must exceed the discrete levels";
      return out;
    }
  }
  if (m == 0 && !space.tail_floor) {
    out.diagnostic = "empty bid space";
    return out;
  }

  ContValues cv = ContValues::build(values);
  // Trade acceptance probability of a bid (strictly-above-cost walk-away).
  auto accept = [&](double bid) {
    double a = 0.0;
    for (std::size_t c = 0; c < costs.size(); ++c) {
      if (costs.point(c).to_double() < bid) a += costs.mass(c).to_double();
    }
    return a;
  };

  std::size_t n_cats = m + (space.tail_floor ? 1 : 0);
  std::vector<double> bid(n_cats);
  std::vector<double> acc(n_cats);
  for (std::size_t k = 0; k < m; ++k) {
    bid[k] = space.levels[k].to_double();
    acc[k] = accept(bid[k]);
  }
  if (space.tail_floor) {
    bid[n_cats - 1] = space.tail_floor->to_double();
    acc[n_cats - 1] = accept(bid[n_cats - 1]);
  }

  std::vector<double> t(n_cats);
  t[0] = std::clamp(bid[0], cv.lo, cv.hi);
  for (std::size_t k = 1; k < n_cats; ++k) {
    t[k] = std::clamp(std::max(bid[k], t[k - 1]), cv.lo, cv.hi);
  }

  auto upper_of = [&](std::size_t k) {
    return (k + 1 < n_cats) ? t[k + 1] : cv.hi;
  };
  // Interim surplus of a value theta bidding in category k whose pool is
  // [lo_edge, upper_of(k)).  Tail types beat exactly the opponents below
  // their own value.
  auto surplus = [&](std::size_t k, double lo_edge, double theta) {
    bool tail = space.tail_floor && k + 1 == n_cats;
    double w;
    if (tail) {
      w = std::pow(cv.cdf(theta), n_bidders - 1);
    } else {
      double below = cv.cdf(lo_edge);
      double at = std::max(cv.cdf(upper_of(k)) - below, 0.0);
      w = win_prob(below, at, n_bidders);
    }
    return (theta - bid[k]) * w * acc[k];
  };

  // Gauss-Seidel sweeps on the indifference conditions.
  bool converged = false;
  for (int sweep = 0; sweep < 2000 && !converged; ++sweep) {
    double delta = 0.0;
    for (std::size_t k = 1; k < n_cats; ++k) {
      double lo_b = t[k - 1];
      double hi_b = (k + 1 < n_cats) ? t[k + 1] : cv.hi;
      auto gap = [&](double x) {
        // Surpluses seen by the marginal type x: lower category uses
        // thresholds (t[k-1], x); own category uses (x, t[k+1]).
        double save = t[k];
        t[k] = x;
        double lower = surplus(k - 1, t[k - 1], x);
        double upper = surplus(k, x, x);
        t[k] = save;
        return lower - upper;
      };
      double f_lo = gap(lo_b);
      double f_hi = gap(hi_b);
      double x;
      if (f_lo <= 0.0 && f_hi <= 0.0) {
        x = lo_b;  // upper category dominates everywhere
      } else if (f_lo >= 0.0 && f_hi >= 0.0) {
        x = hi_b;  // lower category dominates everywhere
      } else {
        double a = lo_b, b = hi_b, fa = f_lo;
        for (int it = 0; it < 200; ++it) {
          x = 0.5 * (a + b);
          double fx = gap(x);
          if ((fx <= 0.0) == (fa <= 0.0)) {
            a = x;
            fa = fx;
          } else {
            b = x;
          }
        }
        x = 0.5 * (a + b);
      }
      delta = std::max(delta, std::abs(x - t[k]));
      t[k] = x;
    }
    converged = delta < 1e-13;
  }
  out.thresholds = t;
  out.converged = converged;
  if (!converged) {
    out.diagnostic = "threshold fixed point did not converge";
    return out;
  }

  // Revenue by the virtual-value identity: n * Integral Qbar(theta) MR(theta)
  // f(theta) dtheta, with Qbar constant on discrete pools and F^(n-1) * acc
  // on the tail.  Cellwise Gauss-Legendre (4 nodes) is exact for the
  // polynomial integrands that arise from a piecewise-linear CDF.
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                               0.6521451548625461, 0.3478548451374538};
  auto integrate = [&](double a, double b, auto&& fn) {
    if (b <= a) return 0.0;
    // split at cell boundaries so the integrand stays polynomial
    double total = 0.0;
    double x0 = a;
    for (std::size_t k = 0; k < cv.right.size(); ++k) {
      if (cv.right[k] <= a) continue;
      double x1 = std::min(b, cv.right[k]);
      if (x1 > x0) {
        double hm = (x1 - x0) / 2, cm = (x0 + x1) / 2;
        for (int g = 0; g < 4; ++g) total += gw[g] * fn(cm + hm * gx[g]) * hm;
      }
      x0 = x1;
      if (x0 >= b) break;
    }
    return total;
  };
  auto density_at = [&](double x) {
    std::size_t k =
        std::upper_bound(cv.right.begin(), cv.right.end(), x) -
        cv.right.begin();
    if (k >= cv.dens.size()) k = cv.dens.size() - 1;
    return cv.dens[k];
  };
  auto mr_f = [&](double x) {
    // MR(x) f(x) = x f(x) - (1 - F(x))
    return x * density_at(x) - (1.0 - cv.cdf(x));
  };

  double revenue = 0.0;
  for (std::size_t k = 0; k < n_cats; ++k) {
    bool tail = space.tail_floor && k + 1 == n_cats;
    double a = t[k];
    double b = upper_of(k);
    if (tail) {
      revenue += n_bidders * acc[k] *
                 integrate(a, cv.hi, [&](double x) {
                   return std::pow(cv.cdf(x), n_bidders - 1) * mr_f(x);
                 });
    } else {
      double below = cv.cdf(a);
      double at = std::max(cv.cdf(b) - below, 0.0);
      double w = win_prob(below, at, n_bidders);
      revenue += n_bidders * acc[k] * w * integrate(a, b, mr_f);
    }
  }

  // Expected cost of trading: for each cost atom, trade happens when some
  // bidder bids in a category strictly above the cost.
  double cost_term = 0.0;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    double pc = costs.mass(c).to_double();
    if (pc == 0.0) continue;
    double cval = costs.point(c).to_double();
    double no_trade_thresh = cv.hi;  // lowest type whose bid beats the cost
    bool found = false;
    for (std::size_t k = 0; k < n_cats; ++k) {
      if (cval < bid[k]) {
        no_trade_thresh = t[k];
        found = true;
        break;
      }
    }
    double p_trade =
        found ? 1.0 - std::pow(cv.cdf(no_trade_thresh), n_bidders) : 0.0;
    cost_term += pc * cval * p_trade;
  }
  out.expected_profit = revenue - cost_term;
  return out;
}

OptimizeReport optimize_bid_space(const std::vector<BidSpace>& candidates,
                                  const Distribution& values,
                                  const Distribution& costs,
                                  unsigned n_bidders, unsigned workers) {
  OptimizeReport rep;
  rep.results.resize(candidates.size());
  if (workers < 1) workers = 1;
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      rep.results[i] = BidSpaceResult{
          candidates[i],
          solve_threshold_fpa(candidates[i], values, costs, n_bidders)};
    }
  };
  if (workers == 1 || candidates.size() < 2) {
    run_range(0, candidates.size());
  } else {
    std::size_t chunk = (candidates.size() + workers - 1) / workers;
    std::vector<std::future<void>> futs;
    for (std::size_t b = 0; b < candidates.size(); b += chunk) {
      futs.push_back(std::async(std::launch::async, run_range, b,
                                std::min(b + chunk, candidates.size())));
    }
    for (auto& f : futs) f.get();
  }
  // Deterministic merge: first candidate with the highest converged profit.
  bool any = false;
  for (std::size_t i = 0; i < rep.results.size(); ++i) {
    const auto& r = rep.results[i];
    if (!r.eq.converged) continue;
    if (!any || r.eq.expected_profit >
                    rep.results[rep.best].eq.expected_profit + 1e-15) {
      rep.best = i;
      any = true;
    }
  }
  const auto& b = rep.results.empty() ? BidSpace{} : rep.results[rep.best].space;
  rep.best_is_connected = b.levels.size() + (b.tail_floor ? 1u : 0u) <= 1u;
  return rep;
}

Rat dutch_top_bid(const Distribution& values, unsigned n_bidders) {
  auto bids = menu_bids(values, n_bidders, 0);
  for (std::size_t k = values.size(); k-- > 0;) {
    if (bids[k]) return *bids[k];
  }
  throw std::invalid_argument("no participating types");
}

}  // namespace credlab
