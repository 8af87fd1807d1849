#include "credlab/credibility.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "credlab/myerson.hpp"

namespace credlab {
namespace {

// ---------------------------------------------------------------------------
// Claims: the payment a bidder can legitimately be charged, read off their
// own message/reply history.
// ---------------------------------------------------------------------------
std::optional<Rat> standing_claim(const std::vector<ObsEvent>& events) {
  std::optional<Rat> claim;
  for (const auto& e : events) {
    switch (e.reply.kind) {
      case ActKind::Bid:
        claim = e.reply.bid;
        break;
      case ActKind::Accept:
      case ActKind::Stay:
        claim = e.msg.price;
        break;
      default:
        break;  // Decline / Quit leave the prior claim standing
    }
  }
  return claim;
}

std::string rat_key(const Rat& r) {
  return std::to_string(r.num()) + "/" + std::to_string(r.den());
}

std::string msg_key(const Message& m) {
  std::string s = std::to_string(static_cast<int>(m.kind)) + "[";
  for (const auto& b : m.bids) s += rat_key(b) + ",";
  s += "]" + rat_key(m.price);
  return s;
}

std::string act_key(const Action& a) {
  return std::to_string(static_cast<int>(a.kind)) + ":" + rat_key(a.bid);
}

std::string obs_key(const Observation& o) {
  std::string s;
  for (const auto& e : o.events) s += msg_key(e.msg) + "->" + act_key(e.reply) + ";";
  s += o.won ? "W" : "L";
  s += rat_key(o.payment);
  return s;
}

// ---------------------------------------------------------------------------
// Innocent explanations: every observation a bidder of a given value can make
// under play-by-the-book, over all seller costs, opponent types, contact
// orders, and tie branches.
// ---------------------------------------------------------------------------
struct ExplanationIndex {
  // by_value[v]: observation key -> one explanation producing it
  std::vector<std::unordered_map<std::string, Explanation>> by_value;
  std::uint64_t steps = 0;
  bool capped = false;

  static ExplanationIndex build(const Protocol& p, const Distribution& values,
                                const Distribution& costs,
                                const StrategyProfile& book,
                                std::uint64_t cap) {
    ExplanationIndex idx;
    idx.by_value.resize(values.size());
    auto orders = all_orders(p.n_bidders);
    for (std::size_t c = 0; c < costs.size(); ++c) {
      if (costs.mass(c) == Rat(0)) continue;
      for (const auto& profile : all_profiles(values.size(), p.n_bidders)) {
        bool live = true;
        for (auto v : profile) live = live && values.mass(v) != Rat(0);
        if (!live) continue;
        for (const auto& order : orders) {
          auto branches =
              play_by_book_branches(p, values, costs, book, c, profile, order);
          for (std::size_t b = 0; b < branches.size(); ++b) {
            for (std::size_t i = 0; i < p.n_bidders; ++i) {
              idx.steps++;
              if (idx.steps > cap) {
                idx.capped = true;
                return idx;
              }
              idx.by_value[profile[i]].emplace(
                  obs_key(branches[b].observations[i]),
                  Explanation{c, profile, order, b});
            }
          }
        }
      }
    }
    return idx;
  }
};

std::vector<Rat> second_price_price_grid(const Protocol& p,
                                         const Distribution& values) {
  std::vector<Rat> out;
  for (std::size_t k = 0; k < values.size(); ++k) out.push_back(values.point(k));
  if (const auto* sp = std::get_if<SecondPrice>(&p.rules)) {
    for (const auto& r : sp->reserve_per_cost) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Outcome finalize_outcome(const Finalize& f, const Protocol& p,
                         const std::vector<std::optional<Rat>>& claims) {
  Outcome o;
  o.payments.assign(claims.size(), Rat(0));
  bool all_pay = std::holds_alternative<AllPay>(p.rules);
  switch (f.kind) {
    case FinalKind::Keep:
      break;
    case FinalKind::AllocateAtClaim:
      if (!claims[f.bidder]) throw std::logic_error("allocation without claim");
      o.winner = f.bidder;
      o.payments[f.bidder] = *claims[f.bidder];
      break;
    case FinalKind::SecondPriceRule:
      if (!std::holds_alternative<SecondPrice>(p.rules))
        throw std::logic_error("second-price rule outside its variant");
      if (!claims[f.bidder] || *claims[f.bidder] < f.price)
        throw std::logic_error("second-price payment above the winner's bid");
      o.winner = f.bidder;
      o.payments[f.bidder] = f.price;
      break;
    case FinalKind::KeepCollect:
    case FinalKind::AllocateCollect:
      if (!all_pay) throw std::logic_error("collect move outside all-pay rules");
      for (std::size_t i = 0; i < claims.size(); ++i) {
        if (claims[i]) o.payments[i] = *claims[i];
      }
      if (f.kind == FinalKind::AllocateCollect) {
        if (!claims[f.bidder]) throw std::logic_error("allocation without claim");
        o.winner = f.bidder;
      }
      break;
  }
  return o;
}

std::vector<Observation> observations_from(
    const std::vector<std::vector<ObsEvent>>& events, const Outcome& o) {
  std::vector<Observation> obs(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    obs[i].events = events[i];
    obs[i].won = o.winner && *o.winner == i;
    obs[i].payment = o.payments[i];
  }
  return obs;
}

}  // namespace

std::string SearchBounds::describe() const {
  std::ostringstream os;
  os << "contacts_per_bidder="
     << (contacts_per_bidder ? std::to_string(contacts_per_bidder)
                             : std::string("auto"))
     << " state_cap=" << state_cap << " side_bids=[";
  for (const auto& s : side_bids) os << s.str() << ",";
  os << "]";
  return os.str();
}

std::vector<DevOutcomeBranch> run_deviation(
    const DeviationPlan& plan, const Protocol& p, const Distribution& values,
    const Distribution& costs, const StrategyProfile& book,
    std::size_t cost_idx, const std::vector<std::size_t>& profile) {
  std::vector<DevOutcomeBranch> out;
  if (plan.is_book()) {
    std::vector<std::size_t> order(p.n_bidders);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (const auto& b : play_by_book_branches(p, values, costs, book, cost_idx,
                                               profile, order)) {
      out.push_back({b.prob, b.transcript.outcome, b.observations});
    }
    return out;
  }
  std::vector<std::vector<ObsEvent>> events(p.n_bidders);
  std::size_t node = 0;
  while (true) {
    const DevNode& nd = plan.nodes.at(node);
    if (nd.fin) {
      std::vector<std::optional<Rat>> claims(p.n_bidders);
      for (std::size_t i = 0; i < p.n_bidders; ++i)
        claims[i] = standing_claim(events[i]);
      Outcome o = finalize_outcome(*nd.fin, p, claims);
      out.push_back({Rat(1), o, observations_from(events, o)});
      return out;
    }
    auto acts = legal_actions(nd.msg);
    Action a = book.reply(nd.msg, profile[nd.bidder]);
    events[nd.bidder].push_back({nd.msg, a});
    std::size_t ai = std::find(acts.begin(), acts.end(), a) - acts.begin();
    if (ai >= nd.child.size() || nd.child[ai] == kUnreachable)
      throw std::logic_error("deviation plan reached an unplanned reply");
    node = nd.child[ai];
  }
}

SafetyReport is_safe(const DeviationStrategy& d, const Protocol& p,
                     const Distribution& values, const Distribution& costs,
                     const StrategyProfile& book,
                     std::uint64_t explanation_cap) {
  SafetyReport rep;
  auto idx = ExplanationIndex::build(p, values, costs, book, explanation_cap);
  if (idx.capped) {
    rep.status = SafetyStatus::Inconclusive;
    rep.inconclusive_dimension = "explanation enumeration";
    return rep;
  }
  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs.mass(c) == Rat(0)) continue;
    const DeviationPlan& plan = d.plan_per_cost.at(c);
    for (const auto& profile : all_profiles(values.size(), p.n_bidders)) {
      bool live = true;
      for (auto v : profile) live = live && values.mass(v) != Rat(0);
      if (!live) continue;
      for (const auto& br :
           run_deviation(plan, p, values, costs, book, c, profile)) {
        for (std::size_t i = 0; i < p.n_bidders; ++i) {
          auto it = idx.by_value[profile[i]].find(obs_key(br.observations[i]));
          if (it == idx.by_value[profile[i]].end()) {
            rep.status = SafetyStatus::Unsafe;
            rep.counterexample =
                SafetyCounterexample{i, c, profile, br.observations[i]};
            return rep;
          }
          rep.certificate.push_back(SafetyEntry{i, c, profile, it->second});
        }
      }
    }
  }
  rep.status = SafetyStatus::Safe;
  return rep;
}

Rat deviation_profit(const DeviationStrategy& d, const Protocol& p,
                     const Distribution& values, const Distribution& costs,
                     const StrategyProfile& book, std::size_t cost_idx) {
  auto [cond, prob] = deviation_profit_where(
      d, p, values, costs, book, cost_idx,
      [](const std::vector<std::size_t>&) { return true; });
  (void)prob;
  return cond;
}

std::pair<Rat, Rat> deviation_profit_where(
    const DeviationStrategy& d, const Protocol& p, const Distribution& values,
    const Distribution& costs, const StrategyProfile& book,
    std::size_t cost_idx,
    const std::function<bool(const std::vector<std::size_t>&)>& filter) {
  const DeviationPlan& plan = d.plan_per_cost.at(cost_idx);
  Rat total(0), mass(0);
  for (const auto& profile : all_profiles(values.size(), p.n_bidders)) {
    if (!filter(profile)) continue;
    Rat pr(1);
    for (auto v : profile) pr *= values.mass(v);
    if (pr == Rat(0)) continue;
    mass += pr;
    for (const auto& br :
         run_deviation(plan, p, values, costs, book, cost_idx, profile)) {
      total += pr * br.prob * outcome_profit(br.outcome, costs.point(cost_idx));
    }
  }
  if (mass == Rat(0)) return {Rat(0), Rat(0)};
  return {total / mass, mass};
}

// ---------------------------------------------------------------------------
// Exhaustive credibility search: a memoized best-response computation over
// seller information states.  A state is the per-bidder history of (message,
// reply) pairs; bidder replies are deterministic in their type, so each
// history pins down the set of types consistent with it and both expected
// profit and safety decompose branch by branch.
// ---------------------------------------------------------------------------
namespace {

struct Searcher {
  const Protocol& p;
  const Distribution& values;
  const Distribution& costs;
  const StrategyProfile& book;
  std::size_t cost_idx;
  unsigned bound;
  std::uint64_t state_cap;

  std::vector<Message> alphabet;
  std::vector<std::vector<Action>> acts;  // legal actions per message
  std::vector<Rat> sp_prices;             // second-price payment grid
  const ExplanationIndex& expl;

  // (msg index, action index) history per bidder
  using Hist = std::vector<std::pair<std::size_t, std::size_t>>;
  using State = std::vector<Hist>;

  std::unordered_map<std::string, std::optional<Rat>> memo;
  std::uint64_t states_visited = 0;
  bool capped = false;

  Searcher(const Protocol& p_, const Distribution& v_, const Distribution& c_,
           const StrategyProfile& b_, std::size_t ci, unsigned bound_,
           std::uint64_t cap_, const ExplanationIndex& e_)
      : p(p_), values(v_), costs(c_), book(b_), cost_idx(ci), bound(bound_),
        state_cap(cap_), alphabet(information_sets(p_, v_)), expl(e_) {
    for (const auto& m : alphabet) acts.push_back(legal_actions(m));
    sp_prices = second_price_price_grid(p_, v_);
  }

  std::string key(const State& s) const {
    std::string k;
    for (const auto& h : s) {
      for (auto [m, a] : h)
        k += std::to_string(m) + ":" + std::to_string(a) + ",";
      k += "|";
    }
    return k;
  }

  std::vector<ObsEvent> events_of(const Hist& h) const {
    std::vector<ObsEvent> ev;
    for (auto [m, a] : h) ev.push_back({alphabet[m], acts[m][a]});
    return ev;
  }

  // Types of one bidder consistent with their history.
  std::vector<std::size_t> consistent(const Hist& h) const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (values.mass(t) == Rat(0)) continue;
      bool ok = true;
      for (auto [m, a] : h) ok = ok && book.reply(alphabet[m], t) == acts[m][a];
      if (ok) out.push_back(t);
    }
    return out;
  }

  bool contact_allowed(const Hist& h, const Message& m) const {
    if (h.size() >= bound) return false;
    if (p.is_static()) return h.empty();
    if (std::holds_alternative<Ascending>(p.rules)) {
      if (m.kind != MsgKind::AskAtPrice) return false;
      if (!h.empty()) {
        auto [lm, la] = h.back();
        if (acts[lm][la].kind == ActKind::Quit) return false;
        if (!(alphabet[lm].price < m.price)) return false;
      }
      return true;
    }
    if (std::holds_alternative<Dutch>(p.rules)) {
      if (m.kind != MsgKind::PriceOffer) return false;
      if (!h.empty()) {
        auto [lm, la] = h.back();
        if (acts[lm][la].kind == ActKind::Accept) return false;
        if (!(m.price < alphabet[lm].price)) return false;
      }
      return true;
    }
    return h.empty();
  }

  // A finalize is admissible iff every consistent type of every bidder can
  // explain the resulting observation innocently.
  bool finalize_safe(const State& s, const Outcome& o) const {
    for (std::size_t i = 0; i < s.size(); ++i) {
      Observation obs;
      obs.events = events_of(s[i]);
      obs.won = o.winner && *o.winner == i;
      obs.payment = o.payments[i];
      std::string k = obs_key(obs);
      for (auto t : consistent(s[i])) {
        if (!expl.by_value[t].count(k)) return false;
      }
    }
    return true;
  }

  std::vector<Finalize> finalize_moves(
      const std::vector<std::optional<Rat>>& claims) const {
    std::vector<Finalize> out;
    out.push_back({FinalKind::Keep, 0, Rat(0)});
    bool all_pay = std::holds_alternative<AllPay>(p.rules);
    for (std::size_t i = 0; i < claims.size(); ++i) {
      if (!claims[i]) continue;
      out.push_back({FinalKind::AllocateAtClaim, i, Rat(0)});
      if (std::holds_alternative<SecondPrice>(p.rules)) {
        for (const auto& pr : sp_prices) {
          if (!(*claims[i] < pr))
            out.push_back({FinalKind::SecondPriceRule, i, pr});
        }
      }
      if (all_pay) out.push_back({FinalKind::AllocateCollect, i, Rat(0)});
    }
    if (all_pay) out.push_back({FinalKind::KeepCollect, 0, Rat(0)});
    return out;
  }

  // Best safe expected continuation profit, or nullopt when no safe
  // completion exists from this state.
  std::optional<Rat> value(const State& s) {
    if (capped) return std::nullopt;
    std::string k = key(s);
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    if (++states_visited > state_cap) {
      capped = true;
      return std::nullopt;
    }

    std::optional<Rat> best;
    std::vector<std::optional<Rat>> claims(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      claims[i] = standing_claim(events_of(s[i]));

    for (const auto& f : finalize_moves(claims)) {
      Outcome o = finalize_outcome(f, p, claims);
      if (!finalize_safe(s, o)) continue;
      Rat profit = outcome_profit(o, costs.point(cost_idx));
      if (!best || *best < profit) best = profit;
    }

    for (std::size_t i = 0; i < s.size() && !capped; ++i) {
      auto cons = consistent(s[i]);
      Rat cons_mass(0);
      for (auto t : cons) cons_mass += values.mass(t);
      for (std::size_t m = 0; m < alphabet.size() && !capped; ++m) {
        if (!contact_allowed(s[i], alphabet[m])) continue;
        Rat ev(0);
        bool dead = false;
        for (std::size_t a = 0; a < acts[m].size() && !dead; ++a) {
          Rat pr(0);
          for (auto t : cons) {
            if (book.reply(alphabet[m], t) == acts[m][a]) pr += values.mass(t);
          }
          if (pr == Rat(0)) continue;
          State next = s;
          next[i].push_back({m, a});
          auto v = value(next);
          if (!v) {
            dead = true;
          } else {
            ev += (pr / cons_mass) * *v;
          }
        }
        if (!dead && (!best || *best < ev)) best = ev;
      }
    }
    memo[k] = best;
    return best;
  }

  // Re-derives the argmax decision at a state (same canonical order as
  // value()) and emits the corresponding plan node.
  std::size_t emit(const State& s, std::vector<DevNode>& nodes) {
    auto target = value(s);
    std::vector<std::optional<Rat>> claims(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      claims[i] = standing_claim(events_of(s[i]));

    for (const auto& f : finalize_moves(claims)) {
      Outcome o = finalize_outcome(f, p, claims);
      if (!finalize_safe(s, o)) continue;
      if (outcome_profit(o, costs.point(cost_idx)) == *target) {
        nodes.push_back(DevNode{f, 0, Message{}, {}});
        return nodes.size() - 1;
      }
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto cons = consistent(s[i]);
      Rat cons_mass(0);
      for (auto t : cons) cons_mass += values.mass(t);
      for (std::size_t m = 0; m < alphabet.size(); ++m) {
        if (!contact_allowed(s[i], alphabet[m])) continue;
        Rat ev(0);
        bool dead = false;
        std::vector<Rat> probs(acts[m].size(), Rat(0));
        for (std::size_t a = 0; a < acts[m].size() && !dead; ++a) {
          for (auto t : cons) {
            if (book.reply(alphabet[m], t) == acts[m][a])
              probs[a] += values.mass(t);
          }
          if (probs[a] == Rat(0)) continue;
          State next = s;
          next[i].push_back({m, a});
          auto v = value(next);
          if (!v) {
            dead = true;
          } else {
            ev += (probs[a] / cons_mass) * *v;
          }
        }
        if (dead || ev != *target) continue;
        std::size_t self = nodes.size();
        nodes.push_back(DevNode{std::nullopt, i, alphabet[m], {}});
        nodes[self].child.assign(acts[m].size(), kUnreachable);
        for (std::size_t a = 0; a < acts[m].size(); ++a) {
          if (probs[a] == Rat(0)) continue;
          State next = s;
          next[i].push_back({m, a});
          std::size_t ch = emit(next, nodes);
          nodes[self].child[a] = ch;
        }
        return self;
      }
    }
    throw std::logic_error("argmax extraction lost the optimal action");
  }
};

unsigned auto_bound(const Protocol& p, const Distribution& values) {
  if (p.is_static()) return 1;
  return static_cast<unsigned>(information_sets(p, values).size());
}

}  // namespace

CredibilityReport check_credibility(const Protocol& p,
                                    const Distribution& values,
                                    const Distribution& costs,
                                    const StrategyProfile& book,
                                    const SearchBounds& bounds,
                                    unsigned workers) {
  CredibilityReport rep;
  rep.bounds_desc = bounds.describe();
  unsigned bound = bounds.contacts_per_bidder ? bounds.contacts_per_bidder
                                              : auto_bound(p, values);
  auto expl = ExplanationIndex::build(p, values, costs, book, bounds.state_cap);
  if (expl.capped) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "explanation enumeration exceeded the state cap";
    return rep;
  }

  struct CostResult {
    std::size_t c;
    Rat book_profit;
    std::optional<Rat> best;
    std::optional<DeviationPlan> plan;
    std::uint64_t states = 0;
    bool capped = false;
  };
  std::vector<std::size_t> live_costs;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs.mass(c) != Rat(0)) live_costs.push_back(c);
  }

  auto solve_cost = [&](std::size_t c) {
    CostResult r;
    r.c = c;
    r.book_profit = expected_profit(p, values, costs, book, c);
    Searcher s(p, values, costs, book, c, bound, bounds.state_cap, expl);
    Searcher::State root(p.n_bidders);
    r.best = s.value(root);
    r.states = s.states_visited;
    r.capped = s.capped;
    if (!s.capped && r.best && r.book_profit < *r.best) {
      DeviationPlan plan;
      s.emit(root, plan.nodes);
      r.plan = std::move(plan);
    }
    return r;
  };

  std::vector<CostResult> results(live_costs.size());
  if (workers > 1 && live_costs.size() > 1) {
    std::vector<std::future<CostResult>> futs;
    for (auto c : live_costs)
      futs.push_back(std::async(std::launch::async, solve_cost, c));
    for (std::size_t i = 0; i < futs.size(); ++i) results[i] = futs[i].get();
  } else {
    for (std::size_t i = 0; i < live_costs.size(); ++i)
      results[i] = solve_cost(live_costs[i]);
  }

  rep.enumeration_count = expl.steps;
  for (const auto& r : results) rep.enumeration_count += r.states;

  for (const auto& r : results) {
    if (r.capped) {
      rep.verdict = Verdict::Inconclusive;
      rep.note = "deviation state space exceeded the state cap";
      return rep;
    }
    if (!r.best) {
      rep.verdict = Verdict::Inconclusive;
      rep.note = "no safe completion found from the empty history";
      return rep;
    }
    rep.profit_table.push_back(ProfitRow{r.c, r.book_profit, *r.best});
  }

  for (const auto& r : results) {
    if (!r.plan) continue;
    DeviationStrategy w;
    w.name = "search-witness";
    w.contact_bound = bound;
    w.plan_per_cost.assign(costs.size(), DeviationPlan{});
    w.plan_per_cost[r.c] = *r.plan;
    // independent re-verification of the witness
    auto safety = is_safe(w, p, values, costs, book);
    Rat profit = deviation_profit(w, p, values, costs, book, r.c);
    if (safety.status != SafetyStatus::Safe || !(r.book_profit < profit)) {
      throw std::logic_error("witness failed independent re-verification");
    }
    rep.verdict = Verdict::NotCredible;
    rep.witness = std::move(w);
    rep.witness_safety = std::move(safety);
    return rep;
  }
  rep.verdict = Verdict::Credible;
  return rep;
}

// ---------------------------------------------------------------------------
// Canned deviations.
// ---------------------------------------------------------------------------
namespace {

// Two-bidder tree: contact bidder 0 with msg0, then per reply contact bidder
// 1 with a reply-dependent message, then finalize by best standing claim
// (bidder 0 wins ties).
DeviationPlan two_bidder_menu_plan(const StrategyProfile& book,
                                   const Distribution& values,
                                   const Message& msg0,
                                   const std::function<Message(const Action&)>&
                                       second_msg) {
  DeviationPlan plan;
  auto acts0 = legal_actions(msg0);
  std::size_t root = 0;
  plan.nodes.push_back(DevNode{std::nullopt, 0, msg0, {}});
  plan.nodes[root].child.assign(acts0.size(), kUnreachable);
  for (std::size_t a0 = 0; a0 < acts0.size(); ++a0) {
    bool reachable0 = false;
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (values.mass(t) != Rat(0) && book.reply(msg0, t) == acts0[a0])
        reachable0 = true;
    }
    if (!reachable0) continue;
    Message m1 = second_msg(acts0[a0]);
    auto acts1 = legal_actions(m1);
    std::size_t n1 = plan.nodes.size();
    plan.nodes.push_back(DevNode{std::nullopt, 1, m1, {}});
    plan.nodes[n1].child.assign(acts1.size(), kUnreachable);
    plan.nodes[root].child[a0] = n1;
    for (std::size_t a1 = 0; a1 < acts1.size(); ++a1) {
      bool reachable1 = false;
      for (std::size_t t = 0; t < values.size(); ++t) {
        if (values.mass(t) != Rat(0) && book.reply(m1, t) == acts1[a1])
          reachable1 = true;
      }
      if (!reachable1) continue;
      std::optional<Rat> c0 = standing_claim({{msg0, acts0[a0]}});
      std::optional<Rat> c1 = standing_claim({{m1, acts1[a1]}});
      Finalize f{FinalKind::Keep, 0, Rat(0)};
      if (c0 && (!c1 || !(*c0 < *c1))) {
        f = Finalize{FinalKind::AllocateAtClaim, 0, Rat(0)};
      } else if (c1) {
        f = Finalize{FinalKind::AllocateAtClaim, 1, Rat(0)};
      }
      std::size_t leaf = plan.nodes.size();
      plan.nodes.push_back(DevNode{f, 0, Message{}, {}});
      plan.nodes[n1].child[a1] = leaf;
    }
  }
  return plan;
}

std::optional<Rat> top_bid(const Message& menu) {
  if (menu.bids.empty()) return std::nullopt;
  return menu.bids.back();
}

}  // namespace

std::vector<CannedDeviation> canned_deviations(const Protocol& p,
                                               const Distribution& values,
                                               const Distribution& costs,
                                               const StrategyProfile& book) {
  std::vector<CannedDeviation> out;
  std::size_t nc = costs.size();
  auto book_plans = [&] {
    DeviationStrategy d;
    d.plan_per_cost.assign(nc, DeviationPlan{});
    return d;
  };

  // 1. Upward reserve: a low-cost seller who receives the top bid of her own
  // menu re-approaches the other bidder with the menu of a higher cost type.
  {
    CannedDeviation cd;
    cd.strategy = book_plans();
    cd.strategy.name = "upward-reserve";
    const auto* fpa = std::get_if<FpaMenus>(&p.rules);
    if (!fpa || p.n_bidders != 2 || nc < 2) {
      cd.applicable = false;
      cd.skip_reason = "needs a two-bidder cost-menu first-price protocol";
    } else {
      Message low{MsgKind::BidMenu, fpa->menu_per_cost.front(), Rat(0)};
      Message high{MsgKind::BidMenu, fpa->menu_per_cost.back(), Rat(0)};
      auto low_top = top_bid(low);
      cd.strategy.plan_per_cost[0] = two_bidder_menu_plan(
          book, values, low, [&](const Action& a0) {
            bool saw_top = a0.kind == ActKind::Bid && low_top && a0.bid == *low_top;
            return saw_top ? high : low;
          });
    }
    out.push_back(std::move(cd));
  }

  // 2. Downward reserve: a high-cost seller lowers the effective reserve by
  // running a lower cost type's plan.  For Dutch clocks: after everyone else
  // declines the true reserve, keep the clock falling for the last bidder.
  {
    CannedDeviation cd;
    cd.strategy = book_plans();
    cd.strategy.name = "downward-reserve";
    if (const auto* fpa = std::get_if<FpaMenus>(&p.rules);
        fpa && p.n_bidders == 2 && nc >= 2) {
      Message low{MsgKind::BidMenu, fpa->menu_per_cost.front(), Rat(0)};
      cd.strategy.plan_per_cost[nc - 1] = two_bidder_menu_plan(
          book, values, low, [&](const Action&) { return low; });
    } else if (const auto* du = std::get_if<Dutch>(&p.rules);
               du && nc >= 2 && du->clock_per_cost.back().size() == 1 &&
               p.n_bidders >= 2) {
      DeviationPlan plan;
      Rat reserve_price = du->clock_per_cost.back().front();
      Message offer{MsgKind::PriceOffer, {}, reserve_price};
      auto acts = legal_actions(offer);  // {Accept, Decline}
      std::size_t accept_i = 0, decline_i = 0;
      for (std::size_t a = 0; a < acts.size(); ++a) {
        if (acts[a].kind == ActKind::Accept) accept_i = a;
        if (acts[a].kind == ActKind::Decline) decline_i = a;
      }
      std::size_t prev = kUnreachable;
      for (unsigned i = 0; i + 1 < p.n_bidders; ++i) {
        std::size_t node = plan.nodes.size();
        plan.nodes.push_back(DevNode{std::nullopt, i, offer, {}});
        plan.nodes[node].child.assign(acts.size(), kUnreachable);
        std::size_t leaf = plan.nodes.size();
        plan.nodes.push_back(
            DevNode{Finalize{FinalKind::AllocateAtClaim, i, Rat(0)}, 0,
                    Message{}, {}});
        plan.nodes[node].child[accept_i] = leaf;
        if (prev != kUnreachable) plan.nodes[prev].child[decline_i] = node;
        prev = node;
      }
      // last bidder: run the low-cost descending clock below the reserve
      std::size_t last = p.n_bidders - 1;
      for (const auto& price : du->clock_per_cost.front()) {
        if (!(price < reserve_price)) continue;
        Message m{MsgKind::PriceOffer, {}, price};
        auto la = legal_actions(m);
        std::size_t node = plan.nodes.size();
        plan.nodes.push_back(DevNode{std::nullopt, last, m, {}});
        plan.nodes[node].child.assign(la.size(), kUnreachable);
        std::size_t leaf = plan.nodes.size();
        plan.nodes.push_back(
            DevNode{Finalize{FinalKind::AllocateAtClaim, last, Rat(0)}, 0,
                    Message{}, {}});
        for (std::size_t a = 0; a < la.size(); ++a) {
          if (la[a].kind == ActKind::Accept) plan.nodes[node].child[a] = leaf;
        }
        if (prev != kUnreachable) plan.nodes[prev].child[decline_i] = node;
        prev = node;
      }
      // if even the lowest price is declined, keep the object
      if (prev != kUnreachable) {
        std::size_t keep = plan.nodes.size();
        plan.nodes.push_back(
            DevNode{Finalize{FinalKind::Keep, 0, Rat(0)}, 0, Message{}, {}});
        plan.nodes[prev].child[decline_i] = keep;
      }
      cd.strategy.plan_per_cost[nc - 1] = std::move(plan);
    } else {
      cd.applicable = false;
      cd.skip_reason =
          "needs a two-bidder cost-menu protocol or a single-price Dutch reserve";
    }
    out.push_back(std::move(cd));
  }

  // 3. Collect losers: keep the object and pocket every standing all-pay bid.
  // Winner-paying protocols leave nothing to collect, so the plans stay as
  // written in the book.
  {
    CannedDeviation cd;
    cd.strategy = book_plans();
    cd.strategy.name = "collect-losers";
    if (const auto* ap = std::get_if<AllPay>(&p.rules);
        ap && p.n_bidders == 2) {
      for (std::size_t c = 0; c < nc; ++c) {
        Message menu{MsgKind::BidMenu, ap->menu_per_cost[c], Rat(0)};
        DeviationPlan plan;
        auto acts0 = legal_actions(menu);
        plan.nodes.push_back(DevNode{std::nullopt, 0, menu, {}});
        plan.nodes[0].child.assign(acts0.size(), kUnreachable);
        for (std::size_t a0 = 0; a0 < acts0.size(); ++a0) {
          std::size_t n1 = plan.nodes.size();
          plan.nodes.push_back(DevNode{std::nullopt, 1, menu, {}});
          plan.nodes[n1].child.assign(acts0.size(), kUnreachable);
          plan.nodes[0].child[a0] = n1;
          for (std::size_t a1 = 0; a1 < acts0.size(); ++a1) {
            std::size_t leaf = plan.nodes.size();
            plan.nodes.push_back(
                DevNode{Finalize{FinalKind::KeepCollect, 0, Rat(0)}, 0,
                        Message{}, {}});
            plan.nodes[n1].child[a1] = leaf;
          }
        }
        cd.strategy.plan_per_cost[c] = std::move(plan);
      }
    } else if (!p.winner_pays_only()) {
      cd.applicable = false;
      cd.skip_reason = "needs two bidders";
    }
    out.push_back(std::move(cd));
  }

  // 4. Second-bid misreport: allocate to the highest bid but charge the
  // winner their own bid under the guise of the second-price rule.
  {
    CannedDeviation cd;
    cd.strategy = book_plans();
    cd.strategy.name = "second-bid-misreport";
    const auto* sp = std::get_if<SecondPrice>(&p.rules);
    if (!sp || p.n_bidders != 2) {
      cd.applicable = false;
      cd.skip_reason = "needs a two-bidder second-price protocol";
    } else {
      for (std::size_t c = 0; c < nc; ++c) {
        Message menu = information_sets(p, values).at(c);
        DeviationPlan plan;
        auto acts0 = legal_actions(menu);
        plan.nodes.push_back(DevNode{std::nullopt, 0, menu, {}});
        plan.nodes[0].child.assign(acts0.size(), kUnreachable);
        for (std::size_t a0 = 0; a0 < acts0.size(); ++a0) {
          std::size_t n1 = plan.nodes.size();
          plan.nodes.push_back(DevNode{std::nullopt, 1, menu, {}});
          plan.nodes[n1].child.assign(acts0.size(), kUnreachable);
          plan.nodes[0].child[a0] = n1;
          for (std::size_t a1 = 0; a1 < acts0.size(); ++a1) {
            std::optional<Rat> c0 = standing_claim({{menu, acts0[a0]}});
            std::optional<Rat> c1 = standing_claim({{menu, acts0[a1]}});
            Finalize f{FinalKind::Keep, 0, Rat(0)};
            if (c0 && (!c1 || !(*c0 < *c1))) {
              f = Finalize{FinalKind::SecondPriceRule, 0, *c0};
            } else if (c1) {
              f = Finalize{FinalKind::SecondPriceRule, 1, *c1};
            }
            std::size_t leaf = plan.nodes.size();
            plan.nodes.push_back(DevNode{f, 0, Message{}, {}});
            plan.nodes[n1].child[a1] = leaf;
          }
        }
        cd.strategy.plan_per_cost[c] = std::move(plan);
      }
    }
    out.push_back(std::move(cd));
  }

  return out;
}

// ---------------------------------------------------------------------------
// Strong credibility: joint deviations with one partner bidder.  The seller
// template opens with one side offer to the partner; each partner reply maps
// to a book continuation at a mimicked cost for the remaining bidders plus a
// final allocation rule.
// ---------------------------------------------------------------------------
namespace {

struct JointEval {
  Rat seller_profit{0};
  std::vector<Rat> partner_utility;  // per partner value type and reply choice
};

struct JointContext {
  const Protocol& p;
  const Distribution& values;
  const Distribution& costs;
  const StrategyProfile& book;
  Protocol sub;              // same rules with one fewer bidder
  StrategyProfile sub_book;
};

// Plays the continuation for one partner reply: remaining bidders follow the
// book at the mimicked cost; claims feed the final rule.  Returns per-branch
// (probability over opponent ties, outcome over the FULL bidder set,
// observations of the non-partner bidders in sub-protocol order).
struct JointBranch {
  Rat prob{1};
  Outcome outcome;                     // full index space
  std::vector<Observation> other_obs;  // aligned with `others`
};

std::vector<JointBranch> joint_play(
    const JointContext& ctx, const JointDeviation& jd,
    const std::vector<std::size_t>& others,      // bidder indices, i != partner
    const std::vector<std::size_t>& other_types, // value idx per `others` slot
    std::size_t partner_type, const Action& partner_reply,
    const StrategyOverride* sub_override) {
  auto partner_acts = legal_actions(jd.partner_msg);
  std::size_t reply_idx =
      std::find(partner_acts.begin(), partner_acts.end(), partner_reply) -
      partner_acts.begin();
  std::size_t mimic = jd.mimic_cost.at(reply_idx);
  auto rule = jd.final_rule.at(reply_idx);

  std::optional<Rat> partner_claim =
      standing_claim({{jd.partner_msg, partner_reply}});
  (void)partner_type;

  std::vector<std::size_t> order(others.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto branches =
      play_by_book_branches(ctx.sub, ctx.values, ctx.costs, ctx.sub_book,
                            mimic, other_types, order, sub_override);

  std::vector<JointBranch> out;
  for (const auto& br : branches) {
    std::size_t n = ctx.p.n_bidders;
    std::vector<std::optional<Rat>> claims(n);
    claims[jd.partner] = partner_claim;
    for (std::size_t s = 0; s < others.size(); ++s)
      claims[others[s]] = standing_claim(br.observations[s].events);

    // candidate winners; ties among equal best claims are split uniformly
    std::vector<std::optional<std::size_t>> winners;
    switch (rule) {
      case JointDeviation::Final::Keep:
        winners.push_back(std::nullopt);
        break;
      case JointDeviation::Final::PartnerAtClaim:
        winners.push_back(partner_claim ? std::optional<std::size_t>(jd.partner)
                                        : std::nullopt);
        break;
      case JointDeviation::Final::BestStanding: {
        std::optional<Rat> best;
        for (std::size_t i = 0; i < n; ++i) {
          if (claims[i] && (!best || *best < *claims[i])) best = claims[i];
        }
        if (!best) {
          winners.push_back(std::nullopt);
        } else {
          for (std::size_t i = 0; i < n; ++i) {
            if (claims[i] && *claims[i] == *best) winners.push_back(i);
          }
        }
        break;
      }
    }
    Rat share = Rat(1) / Rat(static_cast<std::int64_t>(winners.size()));
    for (const auto& winner : winners) {
      JointBranch jb;
      jb.prob = br.prob * share;
      jb.other_obs = br.observations;
      jb.outcome.payments.assign(n, Rat(0));
      if (winner) {
        jb.outcome.winner = winner;
        jb.outcome.payments[*winner] = *claims[*winner];
      }
      for (std::size_t s = 0; s < others.size(); ++s) {
        jb.other_obs[s].won = winner && *winner == others[s];
        jb.other_obs[s].payment = jb.outcome.payments[others[s]];
      }
      out.push_back(std::move(jb));
    }
  }
  return out;
}

}  // namespace

CredibilityReport check_strong_credibility(const Protocol& p,
                                           const Distribution& values,
                                           const Distribution& costs,
                                           const StrategyProfile& book,
                                           const SearchBounds& bounds,
                                           unsigned workers) {
  (void)workers;
  CredibilityReport rep;
  rep.bounds_desc = bounds.describe();
  if (p.n_bidders < 2) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "joint deviations need at least two bidders";
    return rep;
  }
  auto expl = ExplanationIndex::build(p, values, costs, book, bounds.state_cap);
  if (expl.capped) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "explanation enumeration exceeded the state cap";
    return rep;
  }

  JointContext ctx{p, values, costs, book,
                   Protocol{p.rules, p.n_bidders - 1, }, StrategyProfile{}};
  ctx.sub_book = book;  // same replies to the same messages, fewer contacts

  // book protocols here are bidder-symmetric, so partner index 0 is without
  // loss within the template family
  const std::size_t partner = 0;
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < p.n_bidders; ++i) {
    if (i != partner) others.push_back(i);
  }

  // extended alphabet: singleton side menus first (the interesting opening
  // offers), then the book's own messages
  std::vector<Message> ext;
  for (const auto& s : bounds.side_bids) {
    ext.push_back(Message{MsgKind::BidMenu, {s}, Rat(0)});
  }
  for (const auto& m : information_sets(p, values)) ext.push_back(m);

  // book interim payoff of a bidder of each type at each seller cost, used
  // for the sup condition on the partner's payoff
  std::vector<std::vector<Rat>> book_payoff(costs.size());
  std::vector<std::size_t> id_order(p.n_bidders);
  for (std::size_t i = 0; i < id_order.size(); ++i) id_order[i] = i;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    book_payoff[c].assign(values.size(), Rat(0));
    if (costs.mass(c) == Rat(0)) continue;
    for (const auto& profile : all_profiles(values.size(), p.n_bidders)) {
      Rat pr(1);
      for (std::size_t i = 0; i < profile.size(); ++i) {
        if (i != partner) pr *= values.mass(profile[i]);
      }
      if (pr == Rat(0)) continue;
      for (const auto& br : play_by_book_branches(p, values, costs, book, c,
                                                  profile, id_order)) {
        const auto& obs = br.observations[partner];
        Rat u = -obs.payment;
        if (obs.won) u += values.point(profile[partner]);
        book_payoff[c][profile[partner]] += pr * br.prob * u;
      }
    }
  }
  std::vector<Rat> sup_payoff(values.size(), Rat(0));
  for (std::size_t t = 0; t < values.size(); ++t) {
    for (std::size_t c = 0; c < costs.size(); ++c) {
      if (costs.mass(c) == Rat(0)) continue;
      if (sup_payoff[t] < book_payoff[c][t]) sup_payoff[t] = book_payoff[c][t];
    }
  }

  auto opp_profiles = all_profiles(values.size(), p.n_bidders - 1);

  for (std::size_t cstar = 0; cstar < costs.size(); ++cstar) {
    if (costs.mass(cstar) == Rat(0)) continue;
    Rat book_profit = expected_profit(p, values, costs, book, cstar);

    for (const auto& m : ext) {
      auto replies = legal_actions(m);
      // template continuation per reply: (mimic cost, final rule)
      std::vector<std::pair<std::size_t, JointDeviation::Final>> opts;
      for (std::size_t c = 0; c < costs.size(); ++c) {
        if (costs.mass(c) == Rat(0)) continue;
        opts.push_back({c, JointDeviation::Final::BestStanding});
        opts.push_back({c, JointDeviation::Final::PartnerAtClaim});
        opts.push_back({c, JointDeviation::Final::Keep});
      }
      std::vector<std::size_t> odo(replies.size(), 0);
      while (true) {
        rep.enumeration_count++;
        JointDeviation jd;
        jd.seller_cost_idx = cstar;
        jd.partner = partner;
        jd.partner_msg = m;
        bool viable = true;
        for (std::size_t ri = 0; ri < replies.size(); ++ri) {
          jd.mimic_cost.push_back(opts[odo[ri]].first);
          jd.final_rule.push_back(opts[odo[ri]].second);
          if (opts[odo[ri]].second == JointDeviation::Final::PartnerAtClaim &&
              !standing_claim({{m, replies[ri]}})) {
            viable = false;  // cannot charge a partner with no claim
          }
        }
        if (viable) {
          // utility of each partner type for each reply choice
          std::vector<std::vector<Rat>> u(values.size(),
                                          std::vector<Rat>(replies.size(),
                                                           Rat(0)));
          std::vector<std::vector<Rat>> seller(
              values.size(), std::vector<Rat>(replies.size(), Rat(0)));
          bool safe = true;
          for (std::size_t ri = 0; ri < replies.size() && safe; ++ri) {
            for (const auto& ot : opp_profiles) {
              Rat pr(1);
              for (auto v : ot) pr *= values.mass(v);
              if (pr == Rat(0)) continue;
              for (std::size_t t = 0; t < values.size() && safe; ++t) {
                if (values.mass(t) == Rat(0)) continue;
                auto branches = joint_play(ctx, jd, others, ot, t,
                                           replies[ri], nullptr);
                for (const auto& jb : branches) {
                  Rat pu = -jb.outcome.payments[partner];
                  if (jb.outcome.winner && *jb.outcome.winner == partner)
                    pu += values.point(t);
                  u[t][ri] += pr * jb.prob * pu;
                  seller[t][ri] +=
                      pr * jb.prob *
                      outcome_profit(jb.outcome, costs.point(cstar));
                  // safety for the non-partner bidders only
                  for (std::size_t s = 0; s < others.size() && safe; ++s) {
                    if (!expl.by_value[ot[s]].count(
                            obs_key(jb.other_obs[s]))) {
                      safe = false;
                    }
                  }
                }
              }
            }
          }
          if (safe) {
            // the partner's prescribed reply must be their best reply (IC)
            // and clear the sup of their book payoffs (participation)
            std::vector<std::size_t> pick(values.size(), 0);
            bool ok = true;
            Rat seller_total(0);
            for (std::size_t t = 0; t < values.size() && ok; ++t) {
              if (values.mass(t) == Rat(0)) continue;
              std::size_t best = 0;
              for (std::size_t ri = 1; ri < replies.size(); ++ri) {
                if (u[t][best] < u[t][ri]) best = ri;
              }
              pick[t] = best;
              if (u[t][best] < sup_payoff[t]) ok = false;
              seller_total += values.mass(t) * seller[t][best];
            }
            if (ok && book_profit < seller_total) {
              // found a mutually beneficial safe joint deviation
              std::vector<Message> al{};
              std::vector<std::vector<Action>> tab;
              al = ext;
              tab.assign(ext.size(),
                         std::vector<Action>(values.size(), Action{}));
              for (std::size_t mi = 0; mi < ext.size(); ++mi) {
                for (std::size_t t = 0; t < values.size(); ++t) {
                  if (ext[mi] == m) {
                    tab[mi][t] = replies[pick[t]];
                  } else if (auto bi = book.message_index(ext[mi])) {
                    tab[mi][t] = book.reply(ext[mi], t);
                    (void)bi;
                  } else {
                    tab[mi][t] = legal_actions(ext[mi]).front();
                  }
                }
              }
              jd.partner_play = StrategyProfile(al, tab);
              rep.verdict = Verdict::NotCredible;
              rep.joint_witness = std::move(jd);
              rep.profit_table.push_back(
                  ProfitRow{cstar, book_profit, seller_total});
              std::ostringstream note;
              note << "joint deviation at cost index " << cstar
                   << ": seller " << seller_total.str() << " > book "
                   << book_profit.str();
              rep.note = note.str();
              return rep;
            }
          }
        }
        std::size_t pos = 0;
        while (pos < odo.size() && ++odo[pos] == opts.size()) odo[pos++] = 0;
        if (pos == odo.size()) break;
      }
    }
    rep.profit_table.push_back(ProfitRow{cstar, book_profit, book_profit});
  }
  rep.verdict = Verdict::Credible;
  return rep;
}

JointDeviationEval evaluate_joint_deviation(const JointDeviation& jd,
                                            const Protocol& p,
                                            const Distribution& values,
                                            const Distribution& costs,
                                            const StrategyProfile& book) {
  JointDeviationEval ev;
  JointContext ctx{p, values, costs, book,
                   Protocol{p.rules, p.n_bidders - 1}, StrategyProfile{}};
  ctx.sub_book = book;  // same replies to the same messages, fewer contacts
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < p.n_bidders; ++i) {
    if (i != jd.partner) others.push_back(i);
  }
  auto replies = legal_actions(jd.partner_msg);
  ev.seller_by_partner_type.assign(values.size(), Rat(0));
  ev.partner_utility.assign(values.size(), Rat(0));
  ev.partner_best_alternative.assign(values.size(), Rat(0));

  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values.mass(t) == Rat(0)) continue;
    Action prescribed = jd.partner_play.reply(jd.partner_msg, t);
    std::optional<Rat> best_alt;
    for (std::size_t ri = 0; ri < replies.size(); ++ri) {
      Rat u(0), seller(0);
      for (const auto& ot : all_profiles(values.size(), p.n_bidders - 1)) {
        Rat pr(1);
        for (auto v : ot) pr *= values.mass(v);
        if (pr == Rat(0)) continue;
        for (const auto& jb :
             joint_play(ctx, jd, others, ot, t, replies[ri], nullptr)) {
          Rat pu = -jb.outcome.payments[jd.partner];
          if (jb.outcome.winner && *jb.outcome.winner == jd.partner)
            pu += values.point(t);
          u += pr * jb.prob * pu;
          seller += pr * jb.prob *
                    outcome_profit(jb.outcome, costs.point(jd.seller_cost_idx));
        }
      }
      if (replies[ri] == prescribed) {
        ev.partner_utility[t] = u;
        ev.seller_by_partner_type[t] = seller;
      } else if (!best_alt || *best_alt < u) {
        best_alt = u;
      }
    }
    if (best_alt) {
      ev.partner_best_alternative[t] = *best_alt;
      if (ev.partner_utility[t] < *best_alt) ev.partner_ic = false;
    }
    ev.seller_total += values.mass(t) * ev.seller_by_partner_type[t];
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Static characterization properties.
// ---------------------------------------------------------------------------
StaticProperties characterize_static(const Protocol& p,
                                     const Distribution& values,
                                     const Distribution& costs,
                                     const StrategyProfile& book) {
  StaticProperties props;
  props.pay_as_bid = true;
  props.winner_paying = true;
  props.symmetric = true;
  props.public_bid_distribution = true;

  std::vector<std::size_t> id_order(p.n_bidders);
  for (std::size_t i = 0; i < id_order.size(); ++i) id_order[i] = i;

  // (value type, first message) -> winning payment, for the pay-as-bid check
  std::map<std::pair<std::size_t, std::string>, std::vector<Rat>> win_pay;

  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs.mass(c) == Rat(0)) continue;
    for (const auto& profile : all_profiles(values.size(), p.n_bidders)) {
      bool live = true;
      for (auto v : profile) live = live && values.mass(v) != Rat(0);
      if (!live) continue;
      auto branches =
          play_by_book_branches(p, values, costs, book, c, profile, id_order);
      for (const auto& br : branches) {
        for (std::size_t i = 0; i < p.n_bidders; ++i) {
          const auto& obs = br.observations[i];
          bool is_winner = br.transcript.outcome.winner &&
                           *br.transcript.outcome.winner == i;
          if (!is_winner && obs.payment != Rat(0)) props.winner_paying = false;
          if (is_winner) {
            std::string mk;
            for (const auto& e : obs.events) mk += msg_key(e.msg) + ";";
            auto& seen = win_pay[{profile[i], mk}];
            if (std::find(seen.begin(), seen.end(), obs.payment) ==
                seen.end()) {
              seen.push_back(obs.payment);
            }
          }
        }
      }

      // symmetry: permuting the value profile must permute the branch
      // outcome distribution
      if (props.symmetric) {
        std::vector<std::size_t> perm(p.n_bidders);
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        auto canon = [&](const std::vector<PlayBranch>& bs,
                         const std::vector<std::size_t>& map_to) {
          std::vector<std::string> rows;
          for (const auto& b : bs) {
            std::string r = b.prob.str() + "#";
            if (b.transcript.outcome.winner)
              r += std::to_string(map_to[*b.transcript.outcome.winner]);
            else
              r += "-";
            std::vector<std::string> pays(p.n_bidders);
            for (std::size_t i = 0; i < p.n_bidders; ++i)
              pays[map_to[i]] = b.transcript.outcome.payments[i].str();
            for (const auto& s : pays) r += "|" + s;
            rows.push_back(r);
          }
          std::sort(rows.begin(), rows.end());
          return rows;
        };
        std::vector<std::size_t> ident(p.n_bidders);
        for (std::size_t i = 0; i < ident.size(); ++i) ident[i] = i;
        while (std::next_permutation(perm.begin(), perm.end())) {
          std::vector<std::size_t> permuted(p.n_bidders);
          for (std::size_t i = 0; i < p.n_bidders; ++i)
            permuted[perm[i]] = profile[i];
          auto other = play_by_book_branches(p, values, costs, book, c,
                                             permuted, id_order);
          if (canon(branches, perm) != canon(other, ident)) {
            props.symmetric = false;
            break;
          }
        }
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      }
    }
  }
  for (const auto& [k, pays] : win_pay) {
    if (pays.size() > 1) props.pay_as_bid = false;
  }

  // public bid distribution: the distribution of a bidder's standing claim
  // must agree across seller costs at or above the seller's cost
  auto bid_dist = [&](std::size_t c) {
    std::map<std::string, std::pair<Rat, Rat>> dist;  // key -> (bid, mass)
    for (std::size_t t = 0; t < values.size(); ++t) {
      if (values.mass(t) == Rat(0)) continue;
      // representative play against a fixed opponent profile to read the
      // bidder's claim; static book replies do not depend on opponents
      std::vector<std::size_t> profile(p.n_bidders, t);
      auto branches =
          play_by_book_branches(p, values, costs, book, c, profile, id_order);
      if (branches.empty()) continue;
      auto claim = standing_claim(branches.front().observations[0].events);
      if (!claim) continue;
      auto [it, fresh] = dist.try_emplace(rat_key(*claim), *claim, Rat(0));
      (void)fresh;
      it->second.second += values.mass(t);
    }
    return dist;
  };
  auto base = bid_dist(0);
  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs.mass(c) == Rat(0)) continue;
    auto dc = bid_dist(c);
    const Rat& theta0 = costs.point(c);
    auto mass_at_or_above = [&](const std::map<std::string,
                                               std::pair<Rat, Rat>>& d,
                                const Rat& s) {
      Rat total(0);
      for (const auto& [k, bm] : d) {
        (void)k;
        if (bm.first == s) total += bm.second;
      }
      return total;
    };
    std::vector<Rat> levels;
    for (const auto& [k, bm] : base) {
      (void)k;
      if (!(bm.first < theta0)) levels.push_back(bm.first);
    }
    for (const auto& [k, bm] : dc) {
      (void)k;
      if (!(bm.first < theta0)) levels.push_back(bm.first);
    }
    for (const auto& s : levels) {
      if (mass_at_or_above(base, s) != mass_at_or_above(dc, s)) {
        props.public_bid_distribution = false;
      }
    }
  }
  return props;
}

// ---------------------------------------------------------------------------
// Drop-at-value is an ex post best response in the ascending auction.
// ---------------------------------------------------------------------------
bool lemma_bestresponse_check(const Protocol& p, const Distribution& values,
                              const Distribution& costs,
                              const StrategyProfile& book,
                              const std::optional<JointDeviation>& joint) {
  if (!std::holds_alternative<Ascending>(p.rules)) {
    throw std::invalid_argument("ex post check applies to ascending clocks");
  }
  auto alphabet = information_sets(p, values);

  // all memoryless stay/quit maps over the ask alphabet
  std::vector<StrategyProfile> alts;
  std::uint64_t n_maps = std::uint64_t(1) << alphabet.size();
  for (std::uint64_t mask = 0; mask < n_maps; ++mask) {
    std::vector<std::vector<Action>> tab(
        alphabet.size(), std::vector<Action>(values.size(), Action{}));
    for (std::size_t m = 0; m < alphabet.size(); ++m) {
      Action a{(mask >> m) & 1 ? ActKind::Stay : ActKind::Quit, Rat(0)};
      for (std::size_t t = 0; t < values.size(); ++t) tab[m][t] = a;
    }
    alts.emplace_back(alphabet, tab);
  }

  auto utility = [&](const std::vector<PlayBranch>& branches, std::size_t i,
                     const Rat& value) {
    Rat u(0);
    for (const auto& b : branches) {
      Rat bu = -b.observations[i].payment;
      if (b.observations[i].won) bu += value;
      u += b.prob * bu;
    }
    return u;
  };

  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs.mass(c) == Rat(0)) continue;
    for (const auto& profile : all_profiles(values.size(), p.n_bidders)) {
      bool live = true;
      for (auto v : profile) live = live && values.mass(v) != Rat(0);
      if (!live) continue;
      for (const auto& order : all_orders(p.n_bidders)) {
        for (std::size_t i = 0; i < p.n_bidders; ++i) {
          if (joint && i == joint->partner) continue;
          Rat base = utility(play_by_book_branches(p, values, costs, book, c,
                                                   profile, order),
                             i, values.point(profile[i]));
          for (const auto& alt : alts) {
            StrategyOverride ov{i, &alt};
            Rat dev = utility(play_by_book_branches(p, values, costs, book, c,
                                                    profile, order, &ov),
                              i, values.point(profile[i]));
            if (base < dev) return false;
          }
        }
      }
    }
  }
  return true;
}

}  // namespace credlab
