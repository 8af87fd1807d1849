#include "credlab/game.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "credlab/myerson.hpp"

namespace credlab {
namespace {

Message menu_message(std::vector<Rat> bids) {
  std::sort(bids.begin(), bids.end());
  bids.erase(std::unique(bids.begin(), bids.end()), bids.end());
  Message m;
  m.kind = MsgKind::BidMenu;
  m.bids = std::move(bids);
  return m;
}

Message offer_message(const Rat& price) {
  Message m;
  m.kind = MsgKind::PriceOffer;
  m.price = price;
  return m;
}

Message ask_message(const Rat& price) {
  Message m;
  m.kind = MsgKind::AskAtPrice;
  m.price = price;
  return m;
}

void push_unique(std::vector<Message>& out, Message m) {
  if (std::find(out.begin(), out.end(), m) == out.end()) {
    out.push_back(std::move(m));
  }
}

Message second_price_menu(const Distribution& values, const Rat& reserve) {
  std::vector<Rat> bids;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values.point(k) < reserve)) bids.push_back(values.point(k));
  }
  return menu_message(std::move(bids));
}

// Shared state while a single (cost, profile, order) play unfolds.
struct Play {
  const Distribution* values = nullptr;
  const StrategyProfile* book = nullptr;
  const StrategyOverride* deviant = nullptr;
  Transcript transcript;
  std::vector<Observation> obs;

  Action contact(std::size_t bidder, const Message& m) {
    const StrategyProfile* src =
        (deviant && deviant->bidder == bidder) ? deviant->strategy : book;
    Action a = src->reply(m, transcript.value_profile[bidder]);
    ObsEvent ev{m, a};
    transcript.log.emplace_back(bidder, ev);
    obs[bidder].events.push_back(ev);
    return a;
  }
};

// Expands a terminal position into tie-break branches.  `winners` may be
// empty (seller keeps the object).  `base_payments` covers non-winner
// payments (all-pay); the winner additionally pays `winner_payment`.
std::vector<PlayBranch> finish(Play&& play, const std::vector<std::size_t>& winners,
                               const std::vector<Rat>& base_payments,
                               const Rat& winner_payment) {
  std::vector<PlayBranch> out;
  std::size_t n = play.obs.size();
  if (winners.empty()) {
    PlayBranch b;
    b.prob = Rat(1);
    b.transcript = play.transcript;
    b.observations = play.obs;
    b.transcript.outcome.payments = base_payments;
    for (std::size_t i = 0; i < n; ++i) {
      b.observations[i].won = false;
      b.observations[i].payment = base_payments[i];
    }
    out.push_back(std::move(b));
    return out;
  }
  Rat share(1, static_cast<std::int64_t>(winners.size()));
  for (std::size_t w : winners) {
    PlayBranch b;
    b.prob = share;
    b.transcript = play.transcript;
    b.observations = play.obs;
    b.transcript.outcome.winner = w;
    b.transcript.outcome.payments = base_payments;
    b.transcript.outcome.payments[w] += winner_payment;
    for (std::size_t i = 0; i < n; ++i) {
      b.observations[i].won = (i == w);
      b.observations[i].payment = b.transcript.outcome.payments[i];
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::size_t> argmax_positive(const std::vector<Rat>& bids) {
  std::vector<std::size_t> best;
  Rat top(0);
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (!(Rat(0) < bids[i])) continue;
    if (best.empty() || top < bids[i]) {
      best.assign(1, i);
      top = bids[i];
    } else if (bids[i] == top) {
      best.push_back(i);
    }
  }
  return best;
}

}  // namespace

std::vector<Action> legal_actions(const Message& m) {
  std::vector<Action> out;
  switch (m.kind) {
    case MsgKind::BidMenu:
      out.push_back(Action{ActKind::Decline, Rat(0)});
      for (const Rat& b : m.bids) out.push_back(Action{ActKind::Bid, b});
      break;
    case MsgKind::PriceOffer:
      out.push_back(Action{ActKind::Decline, Rat(0)});
      out.push_back(Action{ActKind::Accept, Rat(0)});
      break;
    case MsgKind::AskAtPrice:
      out.push_back(Action{ActKind::Quit, Rat(0)});
      out.push_back(Action{ActKind::Stay, Rat(0)});
      break;
  }
  return out;
}

bool Protocol::is_static() const {
  return std::holds_alternative<FpaMenus>(rules) ||
         std::holds_alternative<FpaWalkaway>(rules) ||
         std::holds_alternative<PostedPrice>(rules) ||
         std::holds_alternative<Waterfall>(rules) ||
         std::holds_alternative<SecondPrice>(rules) ||
         std::holds_alternative<AllPay>(rules);
}

bool Protocol::winner_pays_only() const {
  return !std::holds_alternative<AllPay>(rules);
}

std::vector<Message> information_sets(const Protocol& p,
                                      const Distribution& values) {
  std::vector<Message> out;
  if (auto* f = std::get_if<FpaMenus>(&p.rules)) {
    for (const auto& menu : f->menu_per_cost) push_unique(out, menu_message(menu));
  } else if (auto* f = std::get_if<FpaWalkaway>(&p.rules)) {
    push_unique(out, menu_message(f->bid_space));
  } else if (auto* f = std::get_if<PostedPrice>(&p.rules)) {
    for (const Rat& pr : f->price_per_cost) push_unique(out, offer_message(pr));
  } else if (auto* f = std::get_if<Waterfall>(&p.rules)) {
    for (const auto& prices : f->prices_per_cost) {
      for (const Rat& pr : prices) push_unique(out, offer_message(pr));
    }
  } else if (auto* f = std::get_if<SecondPrice>(&p.rules)) {
    for (const Rat& r : f->reserve_per_cost) {
      push_unique(out, second_price_menu(values, r));
    }
  } else if (auto* f = std::get_if<AllPay>(&p.rules)) {
    for (const auto& menu : f->menu_per_cost) push_unique(out, menu_message(menu));
  } else if (auto* f = std::get_if<Ascending>(&p.rules)) {
    for (const auto& clock : f->clock_per_cost) {
      for (const Rat& pr : clock) push_unique(out, ask_message(pr));
    }
  } else if (auto* f = std::get_if<Dutch>(&p.rules)) {
    for (const auto& clock : f->clock_per_cost) {
      for (const Rat& pr : clock) push_unique(out, offer_message(pr));
    }
  }
  return out;
}

StrategyProfile::StrategyProfile(std::vector<Message> alphabet,
                                 std::vector<std::vector<Action>> table)
    : alphabet_(std::move(alphabet)), table_(std::move(table)) {
  if (alphabet_.size() != table_.size()) {
    throw std::invalid_argument("strategy table does not match alphabet");
  }
}

std::optional<std::size_t> StrategyProfile::message_index(
    const Message& m) const {
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    if (alphabet_[i] == m) return i;
  }
  return std::nullopt;
}

const Action& StrategyProfile::reply(const Message& m,
                                     std::size_t value_idx) const {
  auto idx = message_index(m);
  if (!idx) throw std::invalid_argument("message outside strategy alphabet");
  return table_[*idx][value_idx];
}

void StrategyProfile::set_reply(std::size_t msg_idx, std::size_t value_idx,
                                Action a) {
  table_[msg_idx][value_idx] = std::move(a);
}

namespace {

// Menu assignment for envelope-constructed menus: the menu's lowest level is
// the reserve (a grid point); each participating type bids its envelope bid.
std::vector<Action> menu_assignment(const Message& menu,
                                    const Distribution& values,
                                    unsigned n_bidders) {
  std::vector<Action> row(values.size(), Action{ActKind::Decline, Rat(0)});
  if (menu.bids.empty()) return row;
  auto reserve = values.index_of(menu.bids.front());
  if (!reserve) {
    throw std::invalid_argument(
        "menu floor is not a grid value; supply explicit strategies");
  }
  auto bids = menu_bids(values, n_bidders, *reserve);
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!bids[k]) continue;
    if (std::find(menu.bids.begin(), menu.bids.end(), *bids[k]) ==
        menu.bids.end()) {
      throw std::invalid_argument(
          "menu is not the envelope menu of its floor; supply explicit "
          "strategies");
    }
    row[k] = Action{ActKind::Bid, *bids[k]};
  }
  return row;
}

// All-pay menus are not grid-valued, but the envelope construction makes
// them strictly increasing in type: the top |menu| types take the sorted
// levels in order, everyone below the implied reserve declines.
std::vector<Action> ordered_assignment(const Message& menu,
                                       const Distribution& values) {
  std::vector<Action> row(values.size(), Action{ActKind::Decline, Rat(0)});
  if (menu.bids.size() > values.size()) {
    throw std::invalid_argument("menu has more levels than types");
  }
  std::size_t lo = values.size() - menu.bids.size();
  for (std::size_t k = lo; k < values.size(); ++k) {
    row[k] = Action{ActKind::Bid, menu.bids[k - lo]};
  }
  return row;
}

}  // namespace

StrategyProfile book_strategy(const Protocol& p, const Distribution& values) {
  std::vector<Message> alphabet = information_sets(p, values);
  std::vector<std::vector<Action>> table;
  table.reserve(alphabet.size());

  // Dutch acceptance caps: the highest planned bid of each type across the
  // cost-indexed clocks.
  std::vector<Rat> dutch_cap(values.size(), Rat(-1));
  if (auto* d = std::get_if<Dutch>(&p.rules)) {
    for (const auto& clock : d->clock_per_cost) {
      if (clock.empty()) continue;
      Rat floor = *std::min_element(clock.begin(), clock.end());
      auto reserve = values.index_of(floor);
      if (!reserve) {
        throw std::invalid_argument("dutch clock floor is not a grid value");
      }
      auto bids = menu_bids(values, p.n_bidders, *reserve);
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (bids[k] && dutch_cap[k] < *bids[k]) dutch_cap[k] = *bids[k];
      }
    }
  }

  for (const Message& m : alphabet) {
    std::vector<Action> row(values.size(), Action{ActKind::Decline, Rat(0)});
    if (std::holds_alternative<SecondPrice>(p.rules)) {
      // Truthful bidding at or above the solicited floor.
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!m.bids.empty() && !(values.point(k) < m.bids.front())) {
          row[k] = Action{ActKind::Bid, values.point(k)};
        }
      }
    } else if (m.kind == MsgKind::BidMenu) {
      row = std::holds_alternative<AllPay>(p.rules)
                ? ordered_assignment(m, values)
                : menu_assignment(m, values, p.n_bidders);
    } else if (m.kind == MsgKind::AskAtPrice) {
      for (std::size_t k = 0; k < values.size(); ++k) {
        row[k] = Action{!(values.point(k) < m.price) ? ActKind::Stay
                                                     : ActKind::Quit,
                        Rat(0)};
      }
    } else {  // PriceOffer
      for (std::size_t k = 0; k < values.size(); ++k) {
        Rat cap = std::holds_alternative<Dutch>(p.rules) ? dutch_cap[k]
                                                         : values.point(k);
        row[k] = Action{!(cap < m.price) ? ActKind::Accept : ActKind::Decline,
                        Rat(0)};
      }
    }
    table.push_back(std::move(row));
  }
  return StrategyProfile(std::move(alphabet), std::move(table));
}

Rat outcome_profit(const Outcome& o, const Rat& cost_value) {
  Rat profit(0);
  for (const Rat& t : o.payments) profit += t;
  if (o.trade()) profit -= cost_value;
  return profit;
}

std::vector<PlayBranch> play_by_book_branches(
    const Protocol& p, const Distribution& values, const Distribution& costs,
    const StrategyProfile& book, std::size_t cost_idx,
    const std::vector<std::size_t>& profile,
    const std::vector<std::size_t>& order, const StrategyOverride* deviant) {
  if (profile.size() != p.n_bidders || order.size() != p.n_bidders) {
    throw std::invalid_argument("profile/order size mismatch");
  }
  const Rat cost_value = costs.point(cost_idx);
  Play play;
  play.values = &values;
  play.book = &book;
  play.deviant = deviant;
  play.transcript.cost_idx = cost_idx;
  play.transcript.value_profile = profile;
  play.transcript.order = order;
  play.obs.resize(p.n_bidders);
  std::vector<Rat> zero(p.n_bidders, Rat(0));

  if (auto* f = std::get_if<FpaMenus>(&p.rules)) {
    Message menu = menu_message(f->menu_per_cost.at(cost_idx));
    std::vector<Rat> bids(p.n_bidders, Rat(0));
    for (std::size_t i : order) {
      Action a = play.contact(i, menu);
      if (a.kind == ActKind::Bid) bids[i] = a.bid;
    }
    auto winners = argmax_positive(bids);
    Rat pay = winners.empty() ? Rat(0) : bids[winners.front()];
    return finish(std::move(play), winners, zero, pay);
  }

  if (auto* f = std::get_if<FpaWalkaway>(&p.rules)) {
    Message menu = menu_message(f->bid_space);
    std::vector<Rat> bids(p.n_bidders, Rat(0));
    for (std::size_t i : order) {
      Action a = play.contact(i, menu);
      if (a.kind == ActKind::Bid) bids[i] = a.bid;
    }
    auto winners = argmax_positive(bids);
    // Walk-away rule: keep the object when the best bid is weakly below cost.
    if (!winners.empty() && !(cost_value < bids[winners.front()])) {
      winners.clear();
    }
    Rat pay = winners.empty() ? Rat(0) : bids[winners.front()];
    return finish(std::move(play), winners, zero, pay);
  }

  if (auto* f = std::get_if<PostedPrice>(&p.rules)) {
    const Rat& price = f->price_per_cost.at(cost_idx);
    Message offer = offer_message(price);
    std::vector<std::size_t> acceptors;
    for (std::size_t i : order) {
      Action a = play.contact(i, offer);
      if (a.kind == ActKind::Accept) acceptors.push_back(i);
    }
    if (!(cost_value < price)) acceptors.clear();  // walk away
    return finish(std::move(play), acceptors, zero, price);
  }

  if (auto* f = std::get_if<Waterfall>(&p.rules)) {
    const auto& prices = f->prices_per_cost.at(cost_idx);
    for (std::size_t t = 0; t < order.size() && t < prices.size(); ++t) {
      std::size_t i = order[t];
      Action a = play.contact(i, offer_message(prices[t]));
      if (a.kind == ActKind::Accept) {
        if (cost_value < prices[t]) {
          return finish(std::move(play), {i}, zero, prices[t]);
        }
        return finish(std::move(play), {}, zero, Rat(0));  // walk away
      }
    }
    return finish(std::move(play), {}, zero, Rat(0));
  }

  if (auto* f = std::get_if<SecondPrice>(&p.rules)) {
    const Rat& reserve = f->reserve_per_cost.at(cost_idx);
    Message solicit = second_price_menu(values, reserve);
    std::vector<Rat> bids(p.n_bidders, Rat(0));
    for (std::size_t i : order) {
      Action a = play.contact(i, solicit);
      if (a.kind == ActKind::Bid) bids[i] = a.bid;
    }
    auto winners = argmax_positive(bids);
    Rat pay(0);
    if (!winners.empty()) {
      pay = reserve;
      if (winners.size() > 1) {
        pay = bids[winners.front()];
      } else {
        for (std::size_t i = 0; i < bids.size(); ++i) {
          if (i != winners.front() && pay < bids[i]) pay = bids[i];
        }
      }
    }
    return finish(std::move(play), winners, zero, pay);
  }

  if (auto* f = std::get_if<AllPay>(&p.rules)) {
    Message menu = menu_message(f->menu_per_cost.at(cost_idx));
    std::vector<Rat> bids(p.n_bidders, Rat(0));
    for (std::size_t i : order) {
      Action a = play.contact(i, menu);
      if (a.kind == ActKind::Bid) bids[i] = a.bid;
    }
    auto winners = argmax_positive(bids);
    return finish(std::move(play), winners, bids, Rat(0));
  }

  if (auto* f = std::get_if<Ascending>(&p.rules)) {
    const auto& clock = f->clock_per_cost.at(cost_idx);
    std::vector<bool> active(p.n_bidders, !clock.empty());
    for (std::size_t level = 0; level < clock.size(); ++level) {
      std::vector<std::size_t> stayers;
      for (std::size_t i : order) {
        if (!active[i]) continue;
        Action a = play.contact(i, ask_message(clock[level]));
        if (a.kind == ActKind::Stay) {
          stayers.push_back(i);
        } else {
          active[i] = false;
        }
      }
      if (stayers.empty()) {
        // Everyone left at this price: the seller keeps the object.  Selling
        // at an earlier price here would reward early quitting and break the
        // drop-at-value equilibrium.
        return finish(std::move(play), {}, zero, Rat(0));
      }
      if (stayers.size() == 1 || level + 1 == clock.size()) {
        return finish(std::move(play), stayers, zero, clock[level]);
      }
    }
    return finish(std::move(play), {}, zero, Rat(0));
  }

  if (auto* f = std::get_if<Dutch>(&p.rules)) {
    const auto& clock = f->clock_per_cost.at(cost_idx);
    for (const Rat& price : clock) {
      for (std::size_t i : order) {
        Action a = play.contact(i, offer_message(price));
        if (a.kind == ActKind::Accept) {
          return finish(std::move(play), {i}, zero, price);
        }
      }
    }
    return finish(std::move(play), {}, zero, Rat(0));
  }

  throw std::logic_error("unhandled protocol variant");
}

PlayBranch play_by_book(const Protocol& p, const Distribution& values,
                        const Distribution& costs, const StrategyProfile& book,
                        std::size_t cost_idx,
                        const std::vector<std::size_t>& profile,
                        std::uint64_t seed) {
  std::vector<std::size_t> order(p.n_bidders);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto branches =
      play_by_book_branches(p, values, costs, book, cost_idx, profile, order);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double draw = u(rng);
  double acc = 0.0;
  for (const auto& b : branches) {
    acc += b.prob.to_double();
    if (draw <= acc) return b;
  }
  return branches.back();
}

std::vector<std::vector<std::size_t>> all_profiles(std::size_t n_types,
                                                   unsigned n_bidders) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(n_bidders, 0);
  while (true) {
    out.push_back(cur);
    std::size_t pos = 0;
    while (pos < n_bidders) {
      if (++cur[pos] < n_types) break;
      cur[pos] = 0;
      ++pos;
    }
    if (pos == n_bidders) break;
  }
  return out;
}

std::vector<std::vector<std::size_t>> all_orders(unsigned n_bidders) {
  std::vector<std::size_t> order(n_bidders);
  for (std::size_t i = 0; i < n_bidders; ++i) order[i] = i;
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

std::pair<Rat, Rat> expected_profit_where(
    const Protocol& p, const Distribution& values, const Distribution& costs,
    const StrategyProfile& book, std::size_t cost_idx,
    const std::function<bool(const std::vector<std::size_t>&)>& filter) {
  std::vector<std::size_t> order(p.n_bidders);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rat total(0);
  Rat mass(0);
  for (const auto& profile : all_profiles(values.size(), p.n_bidders)) {
    Rat prob(1);
    for (std::size_t v : profile) prob *= values.mass(v);
    if (prob == Rat(0)) continue;
    if (filter && !filter(profile)) continue;
    mass += prob;
    for (const auto& b : play_by_book_branches(p, values, costs, book,
                                               cost_idx, profile, order)) {
      total += prob * b.prob *
               outcome_profit(b.transcript.outcome, costs.point(cost_idx));
    }
  }
  if (mass == Rat(0)) return {Rat(0), Rat(0)};
  return {total / mass, mass};
}

Rat expected_profit(const Protocol& p, const Distribution& values,
                    const Distribution& costs, const StrategyProfile& book,
                    std::size_t cost_idx) {
  auto [cond, mass] = expected_profit_where(p, values, costs, book, cost_idx,
                                            nullptr);
  return cond * mass;
}

}  // namespace credlab
