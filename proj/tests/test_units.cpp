#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "credlab/credibility.hpp"
#include "credlab/equilibrium.hpp"
#include "credlab/myerson.hpp"
#include "credlab/scenario.hpp"

using namespace credlab;

namespace {

Distribution ex_values() {
  return Distribution::from_points({Rat(1), Rat(2)}, {Rat(1, 2), Rat(1, 2)});
}
Distribution ex_costs() {
  return Distribution::from_points({Rat(0), Rat(7, 10)},
                                   {Rat(1, 2), Rat(1, 2)});
}
Protocol ex_fpa() {
  return Protocol{FpaMenus{{{Rat(1), Rat(5, 3)}, {Rat(2)}}}, 2};
}

}  // namespace

TEST_CASE("rational arithmetic and parsing") {
  CHECK(Rat(1, 2) + Rat(1, 3) == Rat(5, 6));
  CHECK(Rat(5, 3) * Rat(3, 5) == Rat(1));
  CHECK(Rat(-4, 8).str() == "-1/2");
  CHECK(Rat::parse("7/10") == Rat(7, 10));
  CHECK(Rat::parse("-3") == Rat(-3));
  CHECK(Rat::from_decimal(0.625) == Rat(5, 8));
  CHECK(Rat(1, 3) < Rat(1, 2));
  CHECK(Rat(13, 7).to_double() == doctest::Approx(13.0 / 7.0));
  CHECK_THROWS(Rat(1, 0));
}

TEST_CASE("distribution basics") {
  auto u = Distribution::uniform(5);
  CHECK(u.size() == 5);
  CHECK(u.point(0) == Rat(0));
  CHECK(u.point(4) == Rat(1));
  Rat total(0);
  for (std::size_t k = 0; k < u.size(); ++k) total += u.mass(k);
  CHECK(total == Rat(1));
  CHECK(u.cdf(4) == Rat(1));

  auto d = ex_values();
  CHECK(d.mean() == Rat(3, 2));
  CHECK(d.index_of(Rat(2)) == 1);
  CHECK(!d.index_of(Rat(3, 2)).has_value());
  CHECK(Distribution::point_mass(Rat(1, 4)).size() == 1);
  CHECK_THROWS(Distribution::from_points({Rat(1)}, {Rat(1, 2)}));
}

TEST_CASE("optimal reserve on the two-point grid") {
  auto v = ex_values();
  CHECK(*optimal_reserve(v, Rat(0)) == Rat(1));
  CHECK(*optimal_reserve(v, Rat(7, 10)) == Rat(2));
  CHECK(*optimal_reserve_index(v, Rat(7, 10)) == 1);
}

TEST_CASE("optimal reserve on the fine uniform grid") {
  auto v = Distribution::uniform(201);
  auto r = optimal_reserve(v, Rat(1, 4));
  REQUIRE(r.has_value());
  CHECK(*r == Rat(5, 8));
}

TEST_CASE("envelope menu bids") {
  auto v = ex_values();
  auto b0 = menu_bids(v, 2, 0);
  REQUIRE(b0.size() == 2);
  CHECK(*b0[0] == Rat(1));
  CHECK(*b0[1] == Rat(5, 3));
  auto b1 = menu_bids(v, 2, 1);
  CHECK(!b1[0].has_value());
  CHECK(*b1[1] == Rat(2));
  // three bidders: the indifference construction gives 13/7 at the top
  auto b3 = menu_bids(v, 3, 0);
  CHECK(*b3[0] == Rat(1));
  CHECK(*b3[1] == Rat(13, 7));
  CHECK(dutch_top_bid(v, 3) == Rat(13, 7));
}

TEST_CASE("interim win probabilities") {
  auto v = ex_values();
  auto q = interim_win_prob(v, 2, 0);
  CHECK(q[0] == Rat(1, 4));
  CHECK(q[1] == Rat(3, 4));
  auto q1 = interim_win_prob(v, 2, 1);
  CHECK(q1[0] == Rat(0));
  CHECK(q1[1] == Rat(3, 4));
}

TEST_CASE("benchmark profit and envelope identity") {
  auto bench = benchmark_profit(ex_values(), ex_costs(), 2);
  CHECK(bench.per_cost[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(bench.per_cost[1] == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(bench.expected == doctest::Approx(1.2375).epsilon(1e-12));
  CHECK(bench.trade_prob[0] == doctest::Approx(1.0));
  CHECK(bench.trade_prob[1] == doctest::Approx(0.75));

  auto v = Distribution::uniform(201);
  auto c = Distribution::from_points({Rat(0), Rat(1, 4), Rat(1, 2)},
                                     {Rat(1, 3), Rat(1, 3), Rat(1, 3)});
  CHECK(envelope_identity_gap(v, c, 2) < 1e-3);
}

TEST_CASE("case-B reserve objective derivative") {
  auto v = Distribution::uniform(201);
  auto ri = optimal_reserve_index(v, Rat(1, 4));
  REQUIRE(ri.has_value());
  double dw = reserve_objective_dW(v, 2, Rat(1, 4), *ri);
  double oracle = -0.375 + 0.625 * std::log(1.6);
  CHECK(dw < 0.0);
  CHECK(dw == doctest::Approx(oracle).epsilon(0.15));
  CHECK(std::abs(dw - oracle) <= 0.01);
}

TEST_CASE("book play of the first-price menus") {
  auto v = ex_values();
  auto c = ex_costs();
  auto p = ex_fpa();
  auto book = book_strategy(p, v);
  // both high: tie at 5/3, two branches of probability 1/2
  auto br = play_by_book_branches(p, v, c, book, 0, {1, 1}, {0, 1});
  REQUIRE(br.size() == 2);
  CHECK(br[0].prob == Rat(1, 2));
  CHECK(br[0].transcript.outcome.trade());
  Rat pay = br[0].transcript.outcome.payments[*br[0].transcript.outcome.winner];
  CHECK(pay == Rat(5, 3));
  // high cost: the low type declines and the object can go unsold
  auto br2 = play_by_book_branches(p, v, c, book, 1, {0, 0}, {0, 1});
  REQUIRE(br2.size() == 1);
  CHECK(!br2[0].transcript.outcome.trade());

  CHECK(expected_profit(p, v, c, book, 0) == Rat(3, 2));
  CHECK(expected_profit(p, v, c, book, 1) == Rat(39, 40));
}

TEST_CASE("ascending and dutch book play") {
  auto v = ex_values();
  auto c = ex_costs();
  Protocol asc{Ascending{optimal_ascending_clocks(v, c)}, 2};
  auto abook = book_strategy(asc, v);
  CHECK(expected_profit(asc, v, c, abook, 0) == Rat(3, 2));
  CHECK(expected_profit(asc, v, c, abook, 1) == Rat(39, 40));

  Protocol dutch{Dutch{optimal_dutch_clocks(v, c, 3)}, 3};
  auto dbook = book_strategy(dutch, v);
  // conditional continuation after two declines of the high-cost clock
  auto [cond, mass] = expected_profit_where(
      dutch, v, c, dbook, 1,
      [](const std::vector<std::size_t>& pr) { return pr[0] == 0 && pr[1] == 0; });
  CHECK(cond == Rat(13, 20));
  CHECK(mass == Rat(1, 4));
}

TEST_CASE("all-pay book play") {
  auto v = ex_values();
  auto c = ex_costs();
  Protocol ap{AllPay{optimal_allpay_menus(v, c, 2)}, 2};
  auto book = book_strategy(ap, v);
  // revenue equivalence with the winner-paying implementation
  CHECK(expected_profit(ap, v, c, book, 0) == Rat(3, 2));
  CHECK(expected_profit(ap, v, c, book, 1) == Rat(39, 40));
}

TEST_CASE("book strategies are Bayesian incentive compatible") {
  auto v = ex_values();
  auto c = ex_costs();
  for (Protocol p : {ex_fpa(),
                     Protocol{Ascending{optimal_ascending_clocks(v, c)}, 2},
                     Protocol{SecondPrice{{Rat(1), Rat(2)}}, 2}}) {
    auto book = book_strategy(p, v);
    auto bic = verify_bic(p, v, c, book);
    CHECK(bic.ok);
    CHECK(bic.max_regret <= Rat(0));
  }
}

TEST_CASE("threshold equilibrium of the restricted first-price auction") {
  auto v = Distribution::uniform(1001);
  auto c = Distribution::from_points({Rat(0), Rat(1, 2)}, {Rat(1, 2), Rat(1, 2)});
  BidSpace interval{{}, Rat(5, 8), "interval"};
  BidSpace pooled{{Rat(1, 2)}, Rat(5, 8), "pooled"};
  auto eq1 = solve_threshold_fpa(interval, v, c, 2);
  auto eq2 = solve_threshold_fpa(pooled, v, c, 2);
  REQUIRE(eq1.converged);
  REQUIRE(eq2.converged);
  CHECK(eq2.thresholds.back() == doctest::Approx(0.717).epsilon(2e-3));
  CHECK(eq1.expected_profit == doctest::Approx(0.246).epsilon(2e-2));
  CHECK(eq2.expected_profit == doctest::Approx(0.263).epsilon(2e-2));
  CHECK(eq1.expected_profit < eq2.expected_profit);

  auto opt = optimize_bid_space({interval, pooled}, v, c, 2, 2);
  CHECK(opt.best == 1);
  CHECK(!opt.best_is_connected);
}

TEST_CASE("credibility of the two-point instances") {
  auto v = ex_values();
  auto c = ex_costs();
  auto p = ex_fpa();
  auto book = book_strategy(p, v);
  auto cr = check_credibility(p, v, c, book, SearchBounds{});
  CHECK(cr.verdict == Verdict::NotCredible);
  REQUIRE(cr.witness.has_value());
  CHECK(cr.profit_table[0].book_profit == Rat(3, 2));
  CHECK(cr.profit_table[0].deviation_profit == Rat(5, 3));

  Protocol asc{Ascending{optimal_ascending_clocks(v, c)}, 2};
  auto abook = book_strategy(asc, v);
  auto acr = check_credibility(asc, v, c, abook, SearchBounds{});
  CHECK(acr.verdict == Verdict::Credible);
  CHECK(acr.enumeration_count > 0);
}

TEST_CASE("canned deviations hit their known payoffs") {
  auto v = ex_values();
  auto c = ex_costs();
  auto p = ex_fpa();
  auto book = book_strategy(p, v);
  auto canned = canned_deviations(p, v, c, book);
  const DeviationStrategy* up = nullptr;
  for (const auto& cd : canned) {
    if (cd.strategy.name == "upward-reserve" && cd.applicable)
      up = &cd.strategy;
  }
  REQUIRE(up != nullptr);
  CHECK(is_safe(*up, p, v, c, book).status == SafetyStatus::Safe);
  CHECK(deviation_profit(*up, p, v, c, book, 0) == Rat(19, 12));
  auto [cond, mass] = deviation_profit_where(
      *up, p, v, c, book, 0,
      [](const std::vector<std::size_t>& pr) { return pr[0] == 1; });
  (void)mass;
  CHECK(cond == Rat(11, 6));

  Protocol ap{AllPay{optimal_allpay_menus(v, c, 2)}, 2};
  auto apbook = book_strategy(ap, v);
  auto apcanned = canned_deviations(ap, v, c, apbook);
  const DeviationStrategy* collect = nullptr;
  for (const auto& cd : apcanned) {
    if (cd.strategy.name == "collect-losers" && cd.applicable)
      collect = &cd.strategy;
  }
  REQUIRE(collect != nullptr);
  CHECK(is_safe(*collect, ap, v, c, apbook).status == SafetyStatus::Safe);
  CHECK(deviation_profit(*collect, ap, v, c, apbook, 1) == Rat(3, 2));
}

TEST_CASE("strong credibility separates the first-price and ascending books") {
  auto v = ex_values();
  auto c = ex_costs();
  SearchBounds bounds;
  bounds.side_bids = {Rat(37, 25)};

  auto p = ex_fpa();
  auto book = book_strategy(p, v);
  auto cr = check_strong_credibility(p, v, c, book, bounds);
  REQUIRE(cr.verdict == Verdict::NotCredible);
  REQUIRE(cr.joint_witness.has_value());
  auto ev = evaluate_joint_deviation(*cr.joint_witness, p, v, c, book);
  CHECK(ev.partner_utility[1] == Rat(13, 50));
  CHECK(ev.seller_by_partner_type[1] == Rat(87, 50));
  CHECK(ev.seller_total == Rat(461, 300));
  CHECK(ev.partner_ic);

  Protocol asc{Ascending{optimal_ascending_clocks(v, c)}, 2};
  auto abook = book_strategy(asc, v);
  auto acr = check_strong_credibility(asc, v, c, abook, bounds);
  CHECK(acr.verdict == Verdict::Credible);
  CHECK(lemma_bestresponse_check(asc, v, c, abook, std::nullopt));
}

TEST_CASE("static protocol characterization") {
  auto v = ex_values();
  auto c = ex_costs();
  Protocol wa{FpaWalkaway{{Rat(1), Rat(5, 3), Rat(2)}}, 2};
  auto props = characterize_static(wa, v, c, book_strategy(wa, v));
  CHECK(props.pay_as_bid);
  CHECK(props.winner_paying);
  CHECK(props.symmetric);
  CHECK(props.public_bid_distribution);

  auto p = ex_fpa();
  auto fprops = characterize_static(p, v, c, book_strategy(p, v));
  CHECK(!fprops.public_bid_distribution);

  Protocol sp{SecondPrice{{Rat(1), Rat(2)}}, 2};
  auto sprops = characterize_static(sp, v, c, book_strategy(sp, v));
  CHECK(!sprops.pay_as_bid);
}

TEST_CASE("scenario files load with exact numbers") {
  const char* dir = std::getenv("CREDLAB_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  auto s = load_scenario((std::filesystem::path(dir) / "example-1.json").string());
  CHECK(s.values.point(1) == Rat(2));
  CHECK(s.costs.point(1) == Rat(7, 10));
  CHECK(s.n_bidders == 2);
  const auto& menus = std::get<FpaMenus>(s.protocol.rules).menu_per_cost;
  REQUIRE(menus.size() == 2);
  CHECK(menus[0] == std::vector<Rat>{Rat(1), Rat(5, 3)});
  CHECK(menus[1] == std::vector<Rat>{Rat(2)});

  auto g = load_scenario((std::filesystem::path(dir) / "example-gap.json").string());
  REQUIRE(g.bid_spaces.size() == 2);
  CHECK(g.bid_spaces[1].levels == std::vector<Rat>{Rat(1, 2)});
  CHECK(*g.bid_spaces[1].tail_floor == Rat(5, 8));

  CHECK_THROWS(load_scenario("/nonexistent/scenario.json"));
}

TEST_CASE("report formats") {
  Report r;
  r.command = "myerson";
  r.scenario_hash = "abc";
  r.rows.push_back({"reserve", "cost=0", "1"});
  std::ostringstream csv, jl, pretty;
  write_report(r, Format::Csv, csv);
  CHECK(csv.str() == "quantity,params,value\n\"reserve\",\"cost=0\",\"1\"\n");
  write_report(r, Format::Jsonlines, jl);
  CHECK(jl.str().find("\"quantity\":\"reserve\"") != std::string::npos);
  write_report(r, Format::Pretty, pretty);
  CHECK(pretty.str().find("reserve") != std::string::npos);
  CHECK(parse_format("csv") == Format::Csv);
  CHECK_THROWS(parse_format("xml"));
}

TEST_CASE("threshold solves are memoized in the cache directory") {
  auto tmp = std::filesystem::temp_directory_path() / "credlab-cache-test";
  std::filesystem::remove_all(tmp);
  setenv("CREDLAB_CACHE_DIR", tmp.c_str(), 1);
  auto v = Distribution::uniform(101);
  auto c = Distribution::from_points({Rat(0), Rat(1, 2)}, {Rat(1, 2), Rat(1, 2)});
  BidSpace pooled{{Rat(1, 2)}, Rat(5, 8), "pooled"};
  auto first = cached_solve_threshold_fpa(pooled, v, c, 2);
  CHECK(std::filesystem::exists(tmp));
  CHECK(!std::filesystem::is_empty(tmp));
  auto second = cached_solve_threshold_fpa(pooled, v, c, 2);
  CHECK(first.expected_profit == second.expected_profit);
  CHECK(first.thresholds == second.thresholds);
  unsetenv("CREDLAB_CACHE_DIR");
  std::filesystem::remove_all(tmp);
}

TEST_CASE("command dispatch") {
  const char* dir = std::getenv("CREDLAB_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  auto s = load_scenario((std::filesystem::path(dir) / "example-1.json").string());
  auto sim = run_command(s, "simulate", 1);
  CHECK(sim.exit_code == 0);
  auto my = run_command(s, "myerson", 1);
  CHECK(my.exit_code == 0);
  auto cred = run_command(s, "credibility", 1);
  CHECK(cred.exit_code == 0);
  bool saw_verdict = false;
  for (const auto& row : cred.rows) {
    if (row.quantity == "verdict") {
      saw_verdict = true;
      CHECK(row.value == "not_credible");
    }
  }
  CHECK(saw_verdict);
  CHECK_THROWS(run_command(s, "frobnicate", 1));
  CHECK(list_reproductions().size() == 10);
  CHECK_THROWS(run_reproduction("unknown-name", dir, 1));
}
