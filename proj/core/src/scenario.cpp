#include "credlab/scenario.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "credlab/myerson.hpp"

namespace credlab {
namespace {

using nlohmann::json;

Rat rat_json(const json& j, const std::string& field) {
  try {
    if (j.is_string()) return Rat::parse(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<std::int64_t>());
    if (j.is_number_float()) return Rat::from_decimal(j.get<double>());
  } catch (const std::exception& e) {
    throw std::invalid_argument(field + ": " + e.what());
  }
  throw std::invalid_argument(field + ": expected a number or fraction string");
}

std::vector<Rat> rat_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw std::invalid_argument(field + ": expected a list");
  std::vector<Rat> out;
  for (const auto& x : j) out.push_back(rat_json(x, field));
  return out;
}

std::vector<std::vector<Rat>> rat_lists(const json& j,
                                        const std::string& field) {
  if (!j.is_array()) throw std::invalid_argument(field + ": expected lists");
  std::vector<std::vector<Rat>> out;
  for (const auto& x : j) out.push_back(rat_list(x, field));
  return out;
}

Distribution dist_json(const json& j, const std::string& field) {
  if (j.contains("uniform")) {
    return Distribution::uniform(j.at("uniform").get<std::size_t>());
  }
  if (j.contains("point_mass")) {
    return Distribution::point_mass(rat_json(j.at("point_mass"), field));
  }
  if (!j.contains("points") || !j.contains("masses")) {
    throw std::invalid_argument(field + ": needs points+masses, uniform, or point_mass");
  }
  return Distribution::from_points(rat_list(j.at("points"), field + ".points"),
                                   rat_list(j.at("masses"), field + ".masses"));
}

Protocol protocol_json(const json& j, const Distribution& values,
                       const Distribution& costs, unsigned n_bidders) {
  Protocol p;
  p.n_bidders = n_bidders;
  std::string variant = j.at("variant").get<std::string>();
  bool auto_opt = j.value("auto_optimal", false);
  if (variant == "fpa-menus") {
    p.rules = FpaMenus{auto_opt ? optimal_menus(values, costs, n_bidders)
                                : rat_lists(j.at("menus"), "protocol.menus")};
  } else if (variant == "fpa-walkaway") {
    p.rules = FpaWalkaway{rat_list(j.at("bid_space"), "protocol.bid_space")};
  } else if (variant == "posted-price") {
    p.rules = PostedPrice{rat_list(j.at("prices"), "protocol.prices")};
  } else if (variant == "waterfall") {
    p.rules = Waterfall{rat_lists(j.at("prices"), "protocol.prices")};
  } else if (variant == "second-price") {
    if (auto_opt) {
      std::vector<Rat> reserves;
      for (std::size_t c = 0; c < costs.size(); ++c) {
        auto r = optimal_reserve(values, costs.point(c));
        reserves.push_back(r ? *r : values.point(values.size() - 1) + Rat(1));
      }
      p.rules = SecondPrice{std::move(reserves)};
    } else {
      p.rules = SecondPrice{rat_list(j.at("reserves"), "protocol.reserves")};
    }
  } else if (variant == "all-pay") {
    p.rules = AllPay{auto_opt
                         ? optimal_allpay_menus(values, costs, n_bidders)
                         : rat_lists(j.at("menus"), "protocol.menus")};
  } else if (variant == "ascending") {
    p.rules = Ascending{auto_opt
                            ? optimal_ascending_clocks(values, costs)
                            : rat_lists(j.at("clocks"), "protocol.clocks")};
  } else if (variant == "dutch") {
    p.rules = Dutch{auto_opt
                        ? optimal_dutch_clocks(values, costs, n_bidders)
                        : rat_lists(j.at("clocks"), "protocol.clocks")};
  } else {
    throw std::invalid_argument("protocol.variant: unknown variant " + variant);
  }
  return p;
}

std::string content_hash(const std::string& text) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0')
     << std::hash<std::string>{}(text);
  return os.str();
}

std::string rstr(const Rat& r) { return r.str(); }

std::string dstr(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

void add_row(Report& r, std::string quantity, std::string params,
             std::string value) {
  r.rows.push_back(ReportRow{std::move(quantity), std::move(params),
                             std::move(value)});
}

void check(Report& r, const std::string& what, bool ok) {
  add_row(r, "check", what, ok ? "pass" : "fail");
  if (!ok) r.exit_code = 1;
}

std::string verdict_str(Verdict v) {
  switch (v) {
    case Verdict::Credible: return "credible";
    case Verdict::NotCredible: return "not_credible";
    default: return "inconclusive";
  }
}

std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const DeviationStrategy* find_canned(const std::vector<CannedDeviation>& cds,
                                     const std::string& name) {
  for (const auto& cd : cds) {
    if (cd.strategy.name == name && cd.applicable) return &cd.strategy;
  }
  return nullptr;
}

}  // namespace

std::vector<std::vector<Rat>> optimal_menus(const Distribution& values,
                                            const Distribution& costs,
                                            unsigned n_bidders) {
  std::vector<std::vector<Rat>> menus;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    std::vector<Rat> menu;
    if (auto r = optimal_reserve_index(values, costs.point(c))) {
      for (const auto& b : menu_bids(values, n_bidders, *r)) {
        if (b && std::find(menu.begin(), menu.end(), *b) == menu.end()) {
          menu.push_back(*b);
        }
      }
    }
    menus.push_back(std::move(menu));
  }
  return menus;
}

std::vector<std::vector<Rat>> optimal_ascending_clocks(
    const Distribution& values, const Distribution& costs) {
  std::vector<std::vector<Rat>> clocks;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    std::vector<Rat> clock;
    if (auto r = optimal_reserve_index(values, costs.point(c))) {
      for (std::size_t k = *r; k < values.size(); ++k) {
        clock.push_back(values.point(k));
      }
    }
    clocks.push_back(std::move(clock));
  }
  return clocks;
}

std::vector<std::vector<Rat>> optimal_dutch_clocks(const Distribution& values,
                                                   const Distribution& costs,
                                                   unsigned n_bidders) {
  auto menus = optimal_menus(values, costs, n_bidders);
  for (auto& m : menus) std::reverse(m.begin(), m.end());
  return menus;
}

std::vector<std::vector<Rat>> optimal_allpay_menus(const Distribution& values,
                                                   const Distribution& costs,
                                                   unsigned n_bidders) {
  std::vector<std::vector<Rat>> menus;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    std::vector<Rat> menu;
    if (auto r = optimal_reserve_index(values, costs.point(c))) {
      auto bids = menu_bids(values, n_bidders, *r);
      auto win = interim_win_prob(values, n_bidders, *r);
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!bids[k]) continue;
        Rat b = win[k] * *bids[k];
        if (std::find(menu.begin(), menu.end(), b) == menu.end()) {
          menu.push_back(b);
        }
      }
    }
    menus.push_back(std::move(menu));
  }
  return menus;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  Scenario s;
  s.hash = content_hash(text);
  s.name = j.value("name", std::filesystem::path(path).stem().string());
  s.values = dist_json(j.at("values"), "values");
  s.costs = dist_json(j.at("costs"), "costs");
  s.n_bidders = j.value("n_bidders", 2u);
  if (j.contains("protocol")) {
    s.protocol = protocol_json(j.at("protocol"), s.values, s.costs, s.n_bidders);
  } else {
    s.protocol = Protocol{FpaMenus{optimal_menus(s.values, s.costs,
                                                 s.n_bidders)},
                          s.n_bidders};
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    s.bounds.contacts_per_bidder = b.value("contacts_per_bidder", 0u);
    s.bounds.state_cap = b.value("state_cap", s.bounds.state_cap);
    if (b.contains("side_bids")) {
      s.bounds.side_bids = rat_list(b.at("side_bids"), "bounds.side_bids");
    }
  }
  s.seed = j.value("seed", 1u);
  if (j.contains("bid_spaces")) {
    for (const auto& bs : j.at("bid_spaces")) {
      BidSpace space;
      if (bs.contains("levels")) {
        space.levels = rat_list(bs.at("levels"), "bid_spaces.levels");
      }
      if (bs.contains("tail_floor")) {
        space.tail_floor = rat_json(bs.at("tail_floor"), "bid_spaces.tail_floor");
      }
      space.label = bs.value("label", "");
      s.bid_spaces.push_back(std::move(space));
    }
  }
  return s;
}

Format parse_format(const std::string& text) {
  if (text == "csv") return Format::Csv;
  if (text == "jsonlines") return Format::Jsonlines;
  if (text == "pretty") return Format::Pretty;
  throw std::invalid_argument("unknown format " + text);
}

void write_report(const Report& r, Format f, std::ostream& os) {
  switch (f) {
    case Format::Csv:
      os << "quantity,params,value\n";
      for (const auto& row : r.rows) {
        os << csv_escape(row.quantity) << "," << csv_escape(row.params) << ","
           << csv_escape(row.value) << "\n";
      }
      break;
    case Format::Jsonlines: {
      json meta{{"command", r.command},
                {"scenario", r.scenario_hash},
                {"bounds", r.bounds_desc},
                {"runtime_seconds", r.runtime_seconds},
                {"exit_code", r.exit_code}};
      os << meta.dump() << "\n";
      for (const auto& row : r.rows) {
        json obj{{"quantity", row.quantity},
                 {"params", row.params},
                 {"value", row.value}};
        os << obj.dump() << "\n";
      }
      break;
    }
    case Format::Pretty: {
      os << "# " << r.command << " (scenario " << r.scenario_hash << ")\n";
      if (!r.bounds_desc.empty()) os << "# bounds: " << r.bounds_desc << "\n";
      std::size_t wq = 8, wp = 6;
      for (const auto& row : r.rows) {
        wq = std::max(wq, row.quantity.size());
        wp = std::max(wp, row.params.size());
      }
      for (const auto& row : r.rows) {
        os << std::left << std::setw(static_cast<int>(wq) + 2) << row.quantity
           << std::setw(static_cast<int>(wp) + 2) << row.params << row.value
           << "\n";
      }
      os << "# runtime " << std::setprecision(3) << r.runtime_seconds
         << "s, exit " << r.exit_code << "\n";
      break;
    }
  }
}

ThresholdEquilibrium cached_solve_threshold_fpa(const BidSpace& space,
                                                const Distribution& values,
                                                const Distribution& costs,
                                                unsigned n_bidders) {
  const char* dir = std::getenv("CREDLAB_CACHE_DIR");
  std::string key;
  std::filesystem::path file;
  if (dir && *dir) {
    std::ostringstream os;
    for (const auto& l : space.levels) os << l.str() << ";";
    os << "|" << (space.tail_floor ? space.tail_floor->str() : "-") << "|";
    for (std::size_t k = 0; k < values.size(); ++k) {
      os << values.point(k).str() << ":" << values.mass(k).str() << ",";
    }
    os << "|";
    for (std::size_t k = 0; k < costs.size(); ++k) {
      os << costs.point(k).str() << ":" << costs.mass(k).str() << ",";
    }
    os << "|" << n_bidders;
    key = content_hash(os.str());
    file = std::filesystem::path(dir) / ("threshold-" + key + ".json");
    std::ifstream in(file);
    if (in) {
      try {
        json j = json::parse(in);
        ThresholdEquilibrium eq;
        eq.converged = j.at("converged").get<bool>();
        eq.diagnostic = j.value("diagnostic", "");
        eq.thresholds = j.at("thresholds").get<std::vector<double>>();
        eq.expected_profit = j.at("expected_profit").get<double>();
        return eq;
      } catch (const std::exception&) {
        // stale or corrupt cache entry: fall through and recompute
      }
    }
  }
  ThresholdEquilibrium eq = solve_threshold_fpa(space, values, costs, n_bidders);
  if (!file.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    std::ofstream out(file);
    if (out) {
      json j{{"converged", eq.converged},
             {"diagnostic", eq.diagnostic},
             {"thresholds", eq.thresholds},
             {"expected_profit", eq.expected_profit}};
      out << j.dump() << "\n";
    }
  }
  return eq;
}

namespace {

std::vector<std::size_t> live_cost_indices(const Distribution& costs) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < costs.size(); ++c) {
    if (costs.mass(c) != Rat(0)) out.push_back(c);
  }
  return out;
}

void credibility_rows(Report& rep, const CredibilityReport& cr,
                      const Distribution& costs) {
  add_row(rep, "verdict", "", verdict_str(cr.verdict));
  for (const auto& row : cr.profit_table) {
    add_row(rep, "profit", "cost=" + costs.point(row.cost_idx).str(),
            "book=" + rstr(row.book_profit) +
                " best_safe=" + rstr(row.deviation_profit));
  }
  add_row(rep, "enumeration_count", "", std::to_string(cr.enumeration_count));
  if (cr.witness) {
    std::size_t nodes = 0;
    for (const auto& plan : cr.witness->plan_per_cost) nodes += plan.nodes.size();
    add_row(rep, "witness", cr.witness->name,
            "plan_nodes=" + std::to_string(nodes));
  }
  if (cr.joint_witness) {
    add_row(rep, "witness", "joint",
            "partner=" + std::to_string(cr.joint_witness->partner) +
                " cost_idx=" + std::to_string(cr.joint_witness->seller_cost_idx));
  }
  if (!cr.note.empty()) add_row(rep, "note", "", cr.note);
  if (cr.verdict == Verdict::Inconclusive) rep.exit_code = 2;
}

Report command_simulate(const Scenario& s) {
  Report rep;
  StrategyProfile book = book_strategy(s.protocol, s.values);
  std::mt19937_64 rng(s.seed);
  auto draw = [&](const Distribution& d) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      acc += d.mass(k).to_double();
      if (u <= acc) return k;
    }
    return d.size() - 1;
  };
  std::size_t cost_idx = draw(s.costs);
  std::vector<std::size_t> profile(s.n_bidders);
  for (auto& v : profile) v = draw(s.values);
  PlayBranch br = play_by_book(s.protocol, s.values, s.costs, book, cost_idx,
                               profile, rng());
  add_row(rep, "cost", "", s.costs.point(cost_idx).str());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    add_row(rep, "value", "bidder=" + std::to_string(i),
            s.values.point(profile[i]).str());
  }
  for (const auto& [bidder, ev] : br.transcript.log) {
    std::string msg;
    switch (ev.msg.kind) {
      case MsgKind::BidMenu: {
        msg = "menu{";
        for (const auto& b : ev.msg.bids) msg += b.str() + " ";
        msg += "}";
        break;
      }
      case MsgKind::PriceOffer: msg = "offer " + ev.msg.price.str(); break;
      case MsgKind::AskAtPrice: msg = "ask " + ev.msg.price.str(); break;
    }
    std::string act;
    switch (ev.reply.kind) {
      case ActKind::Decline: act = "decline"; break;
      case ActKind::Bid: act = "bid " + ev.reply.bid.str(); break;
      case ActKind::Accept: act = "accept"; break;
      case ActKind::Stay: act = "stay"; break;
      case ActKind::Quit: act = "quit"; break;
    }
    add_row(rep, "message", "bidder=" + std::to_string(bidder),
            msg + " -> " + act);
  }
  if (br.transcript.outcome.winner) {
    add_row(rep, "winner", "", std::to_string(*br.transcript.outcome.winner));
  } else {
    add_row(rep, "winner", "", "none");
  }
  for (std::size_t i = 0; i < s.n_bidders; ++i) {
    add_row(rep, "payment", "bidder=" + std::to_string(i),
            br.transcript.outcome.payments[i].str());
  }
  add_row(rep, "profit", "",
          outcome_profit(br.transcript.outcome, s.costs.point(cost_idx)).str());
  for (auto c : live_cost_indices(s.costs)) {
    add_row(rep, "expected_profit", "cost=" + s.costs.point(c).str(),
            expected_profit(s.protocol, s.values, s.costs, book, c).str());
  }
  return rep;
}

Report command_myerson(const Scenario& s) {
  Report rep;
  for (auto c : live_cost_indices(s.costs)) {
    const Rat& cost = s.costs.point(c);
    auto r = optimal_reserve(s.values, cost);
    add_row(rep, "reserve", "cost=" + cost.str(), r ? r->str() : "no-trade");
    if (auto ri = optimal_reserve_index(s.values, cost)) {
      auto bids = menu_bids(s.values, s.n_bidders, *ri);
      std::string menu;
      for (const auto& b : bids) menu += (b ? b->str() : "0") + std::string(" ");
      add_row(rep, "menu_bids", "cost=" + cost.str(), menu);
    }
  }
  auto bench = benchmark_profit(s.values, s.costs, s.n_bidders);
  for (auto c : live_cost_indices(s.costs)) {
    add_row(rep, "benchmark_profit", "cost=" + s.costs.point(c).str(),
            dstr(bench.per_cost[c]));
    add_row(rep, "trade_prob", "cost=" + s.costs.point(c).str(),
            dstr(bench.trade_prob[c]));
  }
  add_row(rep, "benchmark_expected", "", dstr(bench.expected));
  add_row(rep, "envelope_identity_gap", "",
          dstr(envelope_identity_gap(s.values, s.costs, s.n_bidders)));
  return rep;
}

Report command_credibility(const Scenario& s, unsigned workers, bool strong) {
  Report rep;
  StrategyProfile book = book_strategy(s.protocol, s.values);
  CredibilityReport cr =
      strong ? check_strong_credibility(s.protocol, s.values, s.costs, book,
                                        s.bounds, workers)
             : check_credibility(s.protocol, s.values, s.costs, book, s.bounds,
                                 workers);
  rep.bounds_desc = cr.bounds_desc;
  credibility_rows(rep, cr, s.costs);
  return rep;
}

Report command_optimize(const Scenario& s, unsigned workers) {
  Report rep;
  if (s.bid_spaces.empty()) {
    throw std::invalid_argument("scenario has no bid_spaces to optimize over");
  }
  auto opt = optimize_bid_space(s.bid_spaces, s.values, s.costs, s.n_bidders,
                                workers);
  for (const auto& r : opt.results) {
    add_row(rep, "bid_space", r.space.label,
            r.eq.converged ? ("profit=" + dstr(r.eq.expected_profit))
                           : ("failed: " + r.eq.diagnostic));
  }
  add_row(rep, "best", opt.results[opt.best].space.label,
          dstr(opt.results[opt.best].eq.expected_profit));
  add_row(rep, "best_is_connected", "", opt.best_is_connected ? "yes" : "no");
  return rep;
}

// ---------------------------------------------------------------------------
// Reproductions.
// ---------------------------------------------------------------------------

using ReproFn = void (*)(Report&, const Scenario&, unsigned);

void repro_example_1(Report& rep, const Scenario& s, unsigned workers) {
  StrategyProfile book = book_strategy(s.protocol, s.values);
  const auto& menus = std::get<FpaMenus>(s.protocol.rules).menu_per_cost;
  for (std::size_t c = 0; c < menus.size(); ++c) {
    std::string m;
    for (const auto& b : menus[c]) m += b.str() + " ";
    add_row(rep, "menu", "cost=" + s.costs.point(c).str(), m);
  }
  auto r0 = optimal_reserve_index(s.values, s.costs.point(0));
  auto r1 = optimal_reserve_index(s.values, s.costs.point(1));
  auto bids0 = menu_bids(s.values, s.n_bidders, *r0);
  auto bids1 = menu_bids(s.values, s.n_bidders, *r1);
  check(rep, "bids at low cost are {1, 5/3}",
        bids0[0] && *bids0[0] == Rat(1) && bids0[1] && *bids0[1] == Rat(5, 3));
  check(rep, "bids at high cost are {0, 2}",
        !bids1[0] && bids1[1] && *bids1[1] == Rat(2));

  auto canned = canned_deviations(s.protocol, s.values, s.costs, book);
  const auto* up = find_canned(canned, "upward-reserve");
  check(rep, "upward-reserve deviation applicable", up != nullptr);
  std::size_t hi = s.values.size() - 1;
  auto on_high_first_bid = [hi](const std::vector<std::size_t>& pr) {
    return pr[0] == hi;
  };
  auto [dev_cond, pmass] = deviation_profit_where(
      *up, s.protocol, s.values, s.costs, book, 0, on_high_first_bid);
  auto [book_cond, bmass] = expected_profit_where(
      s.protocol, s.values, s.costs, book, 0, on_high_first_bid);
  (void)pmass;
  (void)bmass;
  add_row(rep, "deviation_profit", "conditional on first bid 5/3",
          dev_cond.str());
  add_row(rep, "book_profit", "conditional on first bid 5/3", book_cond.str());
  check(rep, "conditional deviation profit equals 11/6",
        dev_cond == Rat(11, 6));
  check(rep, "conditional book profit equals 5/3", book_cond == Rat(5, 3));

  auto cr = check_credibility(s.protocol, s.values, s.costs, book, s.bounds,
                              workers);
  credibility_rows(rep, cr, s.costs);
  check(rep, "verdict not_credible with verified witness",
        cr.verdict == Verdict::NotCredible && cr.witness.has_value());
}

void repro_case_a(Report& rep, const Scenario& s, unsigned) {
  StrategyProfile book = book_strategy(s.protocol, s.values);
  auto canned = canned_deviations(s.protocol, s.values, s.costs, book);
  const auto* up = find_canned(canned, "upward-reserve");
  check(rep, "upward-reserve deviation applicable", up != nullptr);
  auto safety = is_safe(*up, s.protocol, s.values, s.costs, book);
  check(rep, "upward-reserve deviation is safe",
        safety.status == SafetyStatus::Safe);
  Rat dev = deviation_profit(*up, s.protocol, s.values, s.costs, book, 0);
  Rat bk = expected_profit(s.protocol, s.values, s.costs, book, 0);
  add_row(rep, "deviation_profit", "cost=" + s.costs.point(0).str(), dev.str());
  add_row(rep, "book_profit", "cost=" + s.costs.point(0).str(), bk.str());
  check(rep, "upward deviation profitable at the low cost", bk < dev);
  const auto* down = find_canned(canned, "downward-reserve");
  if (down) {
    std::size_t last = s.costs.size() - 1;
    add_row(rep, "deviation_profit",
            "downward-reserve cost=" + s.costs.point(last).str(),
            deviation_profit(*down, s.protocol, s.values, s.costs, book, last)
                .str());
  }
}

void repro_case_b(Report& rep, const Scenario& s, unsigned) {
  Rat cost = s.costs.point(0);
  auto r = optimal_reserve(s.values, cost);
  auto ri = optimal_reserve_index(s.values, cost);
  check(rep, "reserve exists", r.has_value());
  add_row(rep, "reserve", "cost=" + cost.str(), r->str());
  double rstar = r->to_double();
  check(rep, "reserve within 1e-3 of 0.625", std::abs(rstar - 0.625) <= 1e-3);
  double w = reserve_objective_W(s.values, s.n_bidders, cost, *ri);
  double dw = reserve_objective_dW(s.values, s.n_bidders, cost, *ri);
  // closed form for uniform values at cost 1/4: W'(r*) = -3/8 + (5/8)ln(8/5)
  double oracle = -0.375 + 0.625 * std::log(1.6);
  add_row(rep, "W", "r=" + r->str(), dstr(w));
  add_row(rep, "dW", "r=" + r->str(), dstr(dw));
  add_row(rep, "dW_closed_form", "", dstr(oracle));
  check(rep, "dW at the optimal reserve is negative", dw < 0.0);
  check(rep, "dW within 0.01 of the closed form", std::abs(dw - oracle) <= 0.01);
}

void repro_winner_paying(Report& rep, const Scenario& s, unsigned) {
  StrategyProfile book = book_strategy(s.protocol, s.values);
  std::size_t chigh = s.costs.size() - 1;
  Rat bk = expected_profit(s.protocol, s.values, s.costs, book, chigh);
  add_row(rep, "book_profit", "all-pay cost=" + s.costs.point(chigh).str(),
          bk.str());
  auto canned = canned_deviations(s.protocol, s.values, s.costs, book);
  const auto* collect = find_canned(canned, "collect-losers");
  check(rep, "collect-losers applicable on all-pay", collect != nullptr);
  auto safety = is_safe(*collect, s.protocol, s.values, s.costs, book);
  check(rep, "collect-losers is safe", safety.status == SafetyStatus::Safe);
  Rat dev = deviation_profit(*collect, s.protocol, s.values, s.costs, book,
                             chigh);
  add_row(rep, "deviation_profit",
          "collect-losers cost=" + s.costs.point(chigh).str(), dev.str());
  check(rep, "collect-losers profitable for the high cost type", bk < dev);
  check(rep, "collect-losers profit equals 3/2", dev == Rat(3, 2));

  // contrast: on the winner-paying first-price variant there is nothing to
  // collect, so the deviation profit coincides with the book's
  Protocol fpa{FpaMenus{optimal_menus(s.values, s.costs, s.n_bidders)},
               s.n_bidders};
  StrategyProfile fbook = book_strategy(fpa, s.values);
  auto fcanned = canned_deviations(fpa, s.values, s.costs, fbook);
  const auto* fcollect = find_canned(fcanned, "collect-losers");
  bool all_equal = fcollect != nullptr;
  for (auto c : live_cost_indices(s.costs)) {
    if (!all_equal) break;
    all_equal = deviation_profit(*fcollect, fpa, s.values, s.costs, fbook, c) ==
                expected_profit(fpa, s.values, s.costs, fbook, c);
  }
  check(rep, "collect-losers equals book profit on the winner-paying auction",
        all_equal);
}

void repro_gap(Report& rep, const Scenario& s, unsigned workers) {
  auto eq_interval = cached_solve_threshold_fpa(s.bid_spaces.at(0), s.values,
                                                s.costs, s.n_bidders);
  auto eq_pooled = cached_solve_threshold_fpa(s.bid_spaces.at(1), s.values,
                                              s.costs, s.n_bidders);
  check(rep, "interval space solve converged", eq_interval.converged);
  check(rep, "pooled space solve converged", eq_pooled.converged);
  double theta_star = eq_pooled.thresholds.back();
  add_row(rep, "theta_star", s.bid_spaces[1].label, dstr(theta_star));
  add_row(rep, "profit", s.bid_spaces[0].label,
          dstr(eq_interval.expected_profit));
  add_row(rep, "profit", s.bid_spaces[1].label,
          dstr(eq_pooled.expected_profit));
  check(rep, "theta_star within 1e-3 of 0.717",
        std::abs(theta_star - 0.717) <= 1e-3);
  check(rep, "interval profit within 5e-3 of 0.246",
        std::abs(eq_interval.expected_profit - 0.246) <= 5e-3);
  check(rep, "pooled profit within 5e-3 of 0.263",
        std::abs(eq_pooled.expected_profit - 0.263) <= 5e-3);
  auto opt = optimize_bid_space(s.bid_spaces, s.values, s.costs, s.n_bidders,
                                workers);
  add_row(rep, "best", opt.results[opt.best].space.label,
          dstr(opt.results[opt.best].eq.expected_profit));
  check(rep, "optimizer selects the pooled space", opt.best == 1);
}

void repro_prop_auction(Report& rep, const Scenario& s, unsigned workers) {
  std::vector<BidSpace> singles, pairs;
  for (int k = 0; k <= 20; ++k) {
    BidSpace b;
    b.levels = {Rat(k, 20)};
    b.label = "{" + Rat(k, 20).str() + "}";
    singles.push_back(std::move(b));
  }
  for (int i = 0; i <= 20; ++i) {
    for (int j = i + 1; j <= 20; ++j) {
      BidSpace b;
      b.levels = {Rat(i, 20), Rat(j, 20)};
      b.label = "{" + Rat(i, 20).str() + ", " + Rat(j, 20).str() + "}";
      pairs.push_back(std::move(b));
    }
  }
  auto opt_s = optimize_bid_space(singles, s.values, s.costs, s.n_bidders,
                                  workers);
  auto opt_p = optimize_bid_space(pairs, s.values, s.costs, s.n_bidders,
                                  workers);
  const auto& bs = opt_s.results[opt_s.best];
  const auto& bp = opt_p.results[opt_p.best];
  add_row(rep, "best_singleton", bs.space.label,
          dstr(bs.eq.expected_profit));
  add_row(rep, "best_pair", bp.space.label, dstr(bp.eq.expected_profit));
  check(rep, "some two-point bid set strictly beats every posted price",
        bs.eq.expected_profit < bp.eq.expected_profit);
}

void repro_english(Report& rep, const Scenario& s, unsigned workers) {
  StrategyProfile book = book_strategy(s.protocol, s.values);
  auto cr = check_credibility(s.protocol, s.values, s.costs, book, s.bounds,
                              workers);
  credibility_rows(rep, cr, s.costs);
  check(rep, "ascending auction is credible within bounds",
        cr.verdict == Verdict::Credible);
  Rat expected(0);
  for (auto c : live_cost_indices(s.costs)) {
    expected += s.costs.mass(c) *
                expected_profit(s.protocol, s.values, s.costs, book, c);
  }
  auto bench = benchmark_profit(s.values, s.costs, s.n_bidders);
  add_row(rep, "expected_profit", "", expected.str());
  add_row(rep, "benchmark_expected", "", dstr(bench.expected));
  check(rep, "ascending auction attains the benchmark",
        std::abs(expected.to_double() - bench.expected) <= 1e-9);
}

void repro_dutch(Report& rep, const Scenario& s, unsigned workers) {
  StrategyProfile book = book_strategy(s.protocol, s.values);
  Rat k3 = dutch_top_bid(s.values, s.n_bidders);
  add_row(rep, "top_bid", "n=" + std::to_string(s.n_bidders), k3.str());
  check(rep, "indifference top bid equals 13/7", k3 == Rat(13, 7));
  std::size_t chigh = s.costs.size() - 1;
  auto first_two_decline = [](const std::vector<std::size_t>& pr) {
    return pr[0] == 0 && pr[1] == 0;
  };
  auto [book_cond, m1] = expected_profit_where(s.protocol, s.values, s.costs,
                                               book, chigh, first_two_decline);
  (void)m1;
  add_row(rep, "book_profit", "conditional on two declines", book_cond.str());
  check(rep, "conditional continuation profit equals 13/20",
        book_cond == Rat(13, 20));
  auto canned = canned_deviations(s.protocol, s.values, s.costs, book);
  const auto* down = find_canned(canned, "downward-reserve");
  check(rep, "downward-reserve applicable on the Dutch clock", down != nullptr);
  auto [dev_cond, m2] = deviation_profit_where(
      *down, s.protocol, s.values, s.costs, book, chigh, first_two_decline);
  (void)m2;
  add_row(rep, "deviation_profit", "conditional on two declines",
          dev_cond.str());
  check(rep, "deviation profit equals (1 + 13/7)/2 - 7/10",
        dev_cond == (Rat(1) + Rat(13, 7)) / Rat(2) - Rat(7, 10));
  check(rep, "deviation beats the book continuation", book_cond < dev_cond);
  auto cr = check_credibility(s.protocol, s.values, s.costs, book, s.bounds,
                              workers);
  credibility_rows(rep, cr, s.costs);
  check(rep, "Dutch protocol is not credible",
        cr.verdict == Verdict::NotCredible);
}

void repro_strong_fpa(Report& rep, const Scenario& s, unsigned workers) {
  StrategyProfile book = book_strategy(s.protocol, s.values);
  auto cr = check_strong_credibility(s.protocol, s.values, s.costs, book,
                                     s.bounds, workers);
  credibility_rows(rep, cr, s.costs);
  check(rep, "joint deviation found", cr.verdict == Verdict::NotCredible &&
                                          cr.joint_witness.has_value());
  if (!cr.joint_witness) return;
  auto ev = evaluate_joint_deviation(*cr.joint_witness, s.protocol, s.values,
                                     s.costs, book);
  std::size_t hi = s.values.size() - 1;
  add_row(rep, "partner_payoff", "value=2", ev.partner_utility[hi].str());
  add_row(rep, "seller_payoff", "conditional on partner value 2",
          ev.seller_by_partner_type[hi].str());
  auto on_partner_high = [&](const std::vector<std::size_t>& pr) {
    return pr[cr.joint_witness->partner] == hi;
  };
  auto [book_cond, m] = expected_profit_where(
      s.protocol, s.values, s.costs, book, cr.joint_witness->seller_cost_idx,
      on_partner_high);
  (void)m;
  add_row(rep, "book_profit", "conditional on partner value 2",
          book_cond.str());
  check(rep, "partner payoff 13/50 beats the book payoff 1/4",
        ev.partner_utility[hi] == Rat(13, 50) && Rat(1, 4) < Rat(13, 50));
  check(rep, "seller payoff 87/50 beats the book payoff 5/3",
        ev.seller_by_partner_type[hi] == Rat(87, 50) && book_cond == Rat(5, 3));
  check(rep, "partner incentive compatibility verified", ev.partner_ic);
}

void repro_strong_english(Report& rep, const Scenario& s, unsigned workers) {
  StrategyProfile book = book_strategy(s.protocol, s.values);
  auto cr = check_credibility(s.protocol, s.values, s.costs, book, s.bounds,
                              workers);
  add_row(rep, "credibility", "", verdict_str(cr.verdict));
  add_row(rep, "enumeration_count", "credibility",
          std::to_string(cr.enumeration_count));
  check(rep, "ascending auction is credible", cr.verdict == Verdict::Credible);
  auto scr = check_strong_credibility(s.protocol, s.values, s.costs, book,
                                      s.bounds, workers);
  add_row(rep, "strong_credibility", "", verdict_str(scr.verdict));
  add_row(rep, "enumeration_count", "joint deviations",
          std::to_string(scr.enumeration_count));
  check(rep, "no mutually beneficial joint deviation",
        scr.verdict == Verdict::Credible);
  bool ex_post = lemma_bestresponse_check(s.protocol, s.values, s.costs, book,
                                          std::nullopt);
  check(rep, "drop-at-value is an ex post best response", ex_post);
}

struct ReproEntry {
  const char* name;
  ReproFn fn;
};

constexpr ReproEntry kRepros[] = {
    {"example-1", repro_example_1},
    {"theorem-1-case-a", repro_case_a},
    {"theorem-1-case-b", repro_case_b},
    {"lemma-winner-paying", repro_winner_paying},
    {"example-gap", repro_gap},
    {"prop-auction", repro_prop_auction},
    {"theorem-english", repro_english},
    {"example-dutch", repro_dutch},
    {"strong-credibility-fpa", repro_strong_fpa},
    {"theorem-strong-english", repro_strong_english},
};

}  // namespace

Report run_command(const Scenario& s, const std::string& command,
                   unsigned workers) {
  auto start = std::chrono::steady_clock::now();
  Report rep;
  if (command == "simulate") {
    rep = command_simulate(s);
  } else if (command == "myerson") {
    rep = command_myerson(s);
  } else if (command == "credibility") {
    rep = command_credibility(s, workers, false);
  } else if (command == "strong-credibility") {
    rep = command_credibility(s, workers, true);
  } else if (command == "optimize-bidspace") {
    rep = command_optimize(s, workers);
  } else {
    throw std::invalid_argument("unknown command " + command);
  }
  rep.command = command;
  rep.scenario_hash = s.hash;
  if (rep.bounds_desc.empty()) rep.bounds_desc = s.bounds.describe();
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rep;
}

std::vector<std::string> list_reproductions() {
  std::vector<std::string> out;
  for (const auto& e : kRepros) out.push_back(e.name);
  return out;
}

Report run_reproduction(const std::string& name, const std::string& config_dir,
                        unsigned workers) {
  const ReproEntry* entry = nullptr;
  for (const auto& e : kRepros) {
    if (name == e.name) entry = &e;
  }
  if (!entry) {
    std::string msg = "unknown reproduction " + name + "; valid names:";
    for (const auto& e : kRepros) msg += std::string(" ") + e.name;
    throw std::invalid_argument(msg);
  }
  auto start = std::chrono::steady_clock::now();
  Scenario s = load_scenario(
      (std::filesystem::path(config_dir) / (name + ".json")).string());
  Report rep;
  entry->fn(rep, s, workers);
  rep.command = "reproduce " + name;
  rep.scenario_hash = s.hash;
  if (rep.bounds_desc.empty()) rep.bounds_desc = s.bounds.describe();
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rep;
}

}  // namespace credlab
