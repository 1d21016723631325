#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "trustclear/hypergraph.hpp"
#include "trustclear/solver.hpp"

using namespace trustclear;
using support::bundle;

namespace {

// Tasks 1..3 used; requester 1; performers 2, 4, 5.
ReportProfile figure1() {
  ReportProfile p;
  p.num_agents = 6;
  p.num_tasks = 4;
  ValuationMap v(AgentId{1});
  v.add(bundle({1, 2}), 10);
  v.add(bundle({3}), 4);
  p.valuations.push_back(v);
  p.bids = {{AgentId{4}, bundle({1}), 1},
            {AgentId{4}, bundle({1, 2}), 1},
            {AgentId{4}, bundle({1, 3}), 1},
            {AgentId{2}, bundle({2, 3}), 1},
            {AgentId{5}, bundle({2}), 1}};
  support::fill_eqos(p, [](AgentId, AgentId, TaskId) { return 0.9; });
  return p;
}

AllocationHypergraph graph_of(const ReportProfile& p, const TrustModel& m) {
  return build_hypergraph(p, build_trust_table(m, p));
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> nodes(const std::vector<TpbNode>& s) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (auto n : s) out.push_back({n.task.index, n.performer.index});
  return out;
}

using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

}  // namespace

TEST_SUITE("hypergraph") {
  TEST_CASE("fulfilling sets on figure 1") {
    const auto p = figure1();
    const auto a12 = enumerate_fulfilling_sets(p, bundle({1, 2}));
    REQUIRE(a12.size() == 3);
    CHECK(nodes(a12[0]) == Pairs{{1, 4}, {2, 2}});
    CHECK(nodes(a12[1]) == Pairs{{1, 4}, {2, 4}});
    CHECK(nodes(a12[2]) == Pairs{{1, 4}, {2, 5}});
    CHECK(enumerate_fulfilling_sets(p, bundle({1, 3})).size() == 2);
    CHECK(enumerate_fulfilling_sets(p, bundle({0, 1})).empty());
  }

  TEST_CASE("valuation edges on figure 1") {
    const auto g = graph_of(figure1(), TrustModel::uniform(6));
    std::size_t e12 = 0, e3 = 0;
    for (const auto& e : g.v_edges) {
      e12 += e.atom.bundle == bundle({1, 2});
      e3 += e.atom.bundle == bundle({3});
    }
    CHECK(e12 == 3);
    CHECK(e3 == 2);
    CHECK(g.c_edges.size() == 5);
    CHECK(g.v_by_requester[1].size() == 5);
  }

  TEST_CASE("edge weight of a product-only valuation") {
    const auto p = figure1();
    TrustTable t(6, 4);
    t.set(AgentId{4}, TaskId{1}, 0.7);
    t.set(AgentId{2}, TaskId{2}, 0.4);
    const std::vector<TpbNode> cover{{TaskId{1}, AgentId{4}}, {TaskId{2}, AgentId{2}}};
    const ValuationAtom atom{AgentId{1}, bundle({1, 2}), 10};
    CHECK(hyperedge_weight(atom, cover, p.valuations[0], t) == doctest::Approx(10 * 0.7 * 0.4));
  }

  TEST_CASE("edge weight with a valued sub-bundle") {
    ValuationMap v(AgentId{0});
    v.add(bundle({0, 1}), 100);
    v.add(bundle({0}), 10);
    TrustTable t(3, 2);
    t.set(AgentId{1}, TaskId{0}, 0.5);
    t.set(AgentId{2}, TaskId{1}, 0.9);
    const std::vector<TpbNode> cover{{TaskId{0}, AgentId{1}}, {TaskId{1}, AgentId{2}}};
    CHECK(hyperedge_weight({AgentId{0}, bundle({0, 1}), 100}, cover, v, t) == doctest::Approx(45.5));
    t.set(AgentId{1}, TaskId{0}, 1.0);
    t.set(AgentId{2}, TaskId{1}, 1.0);
    CHECK(hyperedge_weight({AgentId{0}, bundle({0, 1}), 100}, cover, v, t) == doctest::Approx(100));
  }

  TEST_CASE("edge weights equal the full subset expansion") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = support::random_profile(rng);
      const auto table = build_trust_table(TrustModel::uniform(p.num_agents), p);
      const auto g = build_hypergraph(p, table);
      for (const auto& e : g.v_edges) {
        std::vector<std::pair<TaskId, double>> probs;
        for (auto n : e.cover) probs.push_back({n.task, table.at(n.performer, n.task)});
        const auto& vm = *p.valuation_of(e.atom.requester);
        CHECK(e.weight == doctest::Approx(support::expected_value_full(vm, e.atom.bundle, probs)));
      }
    }
  }

  TEST_CASE("single task, k bidders gives k edges") {
    const auto g = graph_of(support::table1(), TrustModel::self_report());
    CHECK(g.v_edges.size() == 3);
    CHECK(count_allocations(support::table1()) == 3);
  }

  TEST_CASE("no bids, no nodes") {
    auto p = support::table1();
    p.bids.clear();
    support::fill_eqos(p, [](AgentId, AgentId, TaskId) { return 0.5; });
    const auto g = graph_of(p, TrustModel::self_report());
    CHECK(g.tpb_nodes.empty());
    CHECK(g.v_edges.empty());
  }

  TEST_CASE("count matches the built edge list") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = support::random_profile(rng);
      CHECK(count_allocations(p) == graph_of(p, TrustModel::uniform(p.num_agents)).v_edges.size());
    }
  }

  TEST_CASE("count of the 20x15x5 instance") {
    ReportProfile p;
    p.num_tasks = 5;
    p.num_agents = 35;
    for (std::uint32_t r = 0; r < 20; ++r) {
      ValuationMap v(AgentId{r});
      v.add(TaskSet(0b11111), 100);
      p.valuations.push_back(v);
    }
    for (std::uint32_t j = 20; j < 35; ++j) p.bids.push_back({AgentId{j}, TaskSet(0b11111), 10});
    CHECK(count_allocations(p) == 20ull * 15 * 15 * 15 * 15 * 15);
  }

  TEST_CASE("feasibility checks") {
    const auto g = graph_of(figure1(), TrustModel::uniform(6));
    CHECK(check_feasible(g, {}, false));
    // v edge covering t1<-4, t2<-2 with only agent 2's {2,3} bid: t1<-4 unmatched on the bid side.
    const ValuationHyperedge* e2 = nullptr;
    for (const auto& e : g.v_edges) {
      if (nodes(e.cover) == Pairs{{1, 4}, {2, 2}}) e2 = &e;
    }
    REQUIRE(e2 != nullptr);
    const BidHyperedge* c23 = nullptr;
    const BidHyperedge* c1 = nullptr;
    for (const auto& c : g.c_edges) {
      if (c.atom.performer.index == 2) c23 = &c;
      if (c.atom.performer.index == 4 && c.atom.bundle == bundle({1})) c1 = &c;
    }
    Allocation bad{{*e2}, {*c23}};
    CHECK_FALSE(check_feasible(g, bad, true));
    Allocation good{{*e2}, {*c23, *c1}};
    CHECK(check_feasible(g, good, true));
    CHECK_FALSE(check_feasible(g, good, false));  // t3<-2 is executed but not valued
    Allocation xor_break{{g.v_edges[0], g.v_edges[1]}, {}};
    CHECK_FALSE(check_feasible(g, xor_break, true));
  }

  TEST_CASE("dump format") {
    std::ostringstream os;
    dump_hypergraph(graph_of(support::table1(), TrustModel::self_report()), os);
    const auto s = os.str();
    CHECK(s.rfind("hypergraph tasks=1 agents=4 nodes=3 v_edges=3 c_edges=3", 0) == 0);
    CHECK(s.find("weight=270.0000") != std::string::npos);
  }
}

TEST_SUITE("solver") {
  TEST_CASE("table 1 allocation") {
    const auto r = solve(graph_of(support::table1(), TrustModel::self_report()), false);
    CHECK(r.objective == doctest::Approx(120));
    REQUIRE(r.allocation.selected_c.size() == 1);
    CHECK(r.allocation.selected_c[0].atom.performer.index == 2);
  }

  TEST_CASE("table 2 allocation, truthful and with agent 1 lying") {
    auto p = support::table2();
    auto r = solve(graph_of(p, support::table2_model()), false);
    CHECK(r.objective == doctest::Approx(0.8));
    CHECK(r.allocation.selected_c.at(0).atom.performer.index == 2);
    p.eqos_of(AgentId{1})->set(AgentId{2}, TaskId{0}, 0.0);
    r = solve(graph_of(p, support::table2_model()), false);
    CHECK(r.objective == doctest::Approx(0.7));
    CHECK(r.allocation.selected_c.at(0).atom.performer.index == 1);
  }

  TEST_CASE("costs above every value give the empty allocation") {
    auto p = support::table1();
    for (auto& b : p.bids) b.cost = 1000;
    const auto r = solve(graph_of(p, TrustModel::self_report()), false);
    CHECK(r.allocation.empty());
    CHECK(r.objective == 0.0);
  }

  TEST_CASE("zero values give the empty allocation") {
    auto p = support::table2();
    p.valuations[0].entries()[0].value = 0;
    CHECK(solve(graph_of(p, support::table2_model()), false).allocation.empty());
  }

  TEST_CASE("empty graph") {
    AllocationHypergraph g;
    CHECK(solve(g, true).objective == 0.0);
    CHECK(brute_force_optimum(g, true).objective == 0.0);
  }

  TEST_CASE("brute force on table 1") {
    CHECK(brute_force_optimum(graph_of(support::table1(), TrustModel::self_report()), false).objective ==
          doctest::Approx(120));
  }

  TEST_CASE("exclusion filter") {
    const auto g = graph_of(support::table1(), TrustModel::self_report());
    const auto r = solve(g, false, EdgeFilter{{AgentId{2}}});
    CHECK(r.objective == doctest::Approx(100));
    CHECK(r.allocation.selected_c.at(0).atom.performer.index == 3);
  }

  TEST_CASE("solve, library oracle and test reference agree on random instances") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 150; ++trial) {
      const auto p = support::random_profile(rng);
      const auto model = TrustModel::uniform(p.num_agents);
      const auto g = graph_of(p, model);
      SolveOptions opt;
      opt.verify_bounds = true;
      const auto r = solve(g, p.free_disposal, {}, opt);
      const auto b = brute_force_optimum(g, p.free_disposal);
      const auto ref = support::reference_optimum(p, model);
      CHECK(r.objective == doctest::Approx(ref.objective).epsilon(1e-9));
      CHECK(b.objective == doctest::Approx(ref.objective).epsilon(1e-9));
      CHECK(check_feasible(g, r.allocation, p.free_disposal));
      CHECK(r.stats.bound_violations == 0);
      CHECK(r.allocation.v_ids() == b.allocation.v_ids());
      CHECK(r.allocation.c_ids() == b.allocation.c_ids());
    }
  }

  TEST_CASE("thread count does not change the answer") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
      const auto p = support::random_profile(rng, {3, 4, 4});
      const auto g = graph_of(p, TrustModel::uniform(p.num_agents));
      SolveOptions one, many;
      one.threads = 1;
      many.threads = 4;
      const auto a = solve(g, p.free_disposal, {}, one);
      const auto b = solve(g, p.free_disposal, {}, many);
      CHECK(a.objective == b.objective);
      CHECK(a.allocation.v_ids() == b.allocation.v_ids());
    }
  }

  TEST_CASE("tie-break prefers the smaller valuation ids") {
    auto p = support::example6();
    const auto r = solve(graph_of(p, support::table2_model()), false);
    CHECK(r.allocation.selected_c.at(0).atom.performer.index == 1);
    Allocation empty;
    CHECK(tie_break_less(empty, r.allocation));
  }
}
