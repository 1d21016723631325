#pragma once

// Test-side builders and reference computations. The references work from the
// raw report profile and never call the library's search or payment code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "trustclear/core.hpp"
#include "trustclear/trust.hpp"

namespace support {

using namespace trustclear;

inline TaskSet bundle(std::initializer_list<std::uint32_t> ts) { return TaskSet(ts); }

/// Every reporter reports the same value for every bid pair.
inline void fill_eqos(ReportProfile& p, const std::function<double(AgentId, AgentId, TaskId)>& f) {
  p.eqos.clear();
  for (std::uint32_t r = 0; r < p.num_agents; ++r) {
    EqosMatrix m(AgentId{r});
    for (const auto& b : p.bids) {
      for (auto t : b.bundle.tasks()) m.set(b.performer, t, f(AgentId{r}, b.performer, t));
    }
    p.eqos.push_back(m);
  }
  p.normalize();
}

/// Requester 0 values task 0 at 300; performers 1..3 cost 100/150/200 with self-reported POS.
inline ReportProfile table1(double p1_report = 0.5) {
  ReportProfile p;
  p.num_agents = 4;
  p.num_tasks = 1;
  ValuationMap v(AgentId{0});
  v.add(bundle({0}), 300);
  p.valuations.push_back(v);
  p.bids = {{AgentId{1}, bundle({0}), 100}, {AgentId{2}, bundle({0}), 150}, {AgentId{3}, bundle({0}), 200}};
  const double pos[] = {0, 0.5, 0.9, 1.0};
  fill_eqos(p, [&](AgentId r, AgentId perf, TaskId) {
    if (r.index == 1 && perf.index == 1) return p1_report;
    return pos[perf.index];
  });
  return p;
}

/// Requester 0 values task 0 at `value`; performers 1, 2 at zero cost. eta[r][j] is r's report on j.
inline ReportProfile single_task(const double eta[3][3], double value = 1.0, EqosDomain domain = {0, 1}) {
  ReportProfile p;
  p.num_agents = 3;
  p.num_tasks = 1;
  p.eqos_domain = domain;
  ValuationMap v(AgentId{0});
  v.add(bundle({0}), value);
  p.valuations.push_back(v);
  p.bids = {{AgentId{1}, bundle({0}), 0}, {AgentId{2}, bundle({0}), 0}};
  fill_eqos(p, [&](AgentId r, AgentId perf, TaskId) { return eta[r.index][perf.index]; });
  return p;
}

inline ReportProfile table2() {
  const double eta[3][3] = {{0, 0.5, 0.5}, {0, 0.6, 1.0}, {0, 0.8, 0.6}};
  return single_task(eta);
}

inline TrustModel table2_model() { return TrustModel::weighted_sum({0.0, 0.5, 0.5}); }

inline ReportProfile example6(double e = 0.8, EqosDomain domain = {0.6, 0.8}) {
  const double eta[3][3] = {{0, e, e}, {0, e, e}, {0, e, e}};
  return single_task(eta, 1.0, domain);
}

struct RandomSpec {
  std::size_t max_tasks = 3;
  std::size_t max_requesters = 4;
  std::size_t max_performers = 4;
  bool monotone_values = false;
  double eqos_lo = 0.0;
  double eqos_hi = 1.0;
};

/// Small random profile; free disposal is drawn too. Requesters first, then performers.
inline ReportProfile random_profile(std::mt19937_64& rng, const RandomSpec& spec = {}) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ReportProfile p;
  p.num_tasks = pick(1, spec.max_tasks);
  const std::size_t R = pick(1, spec.max_requesters);
  const std::size_t P = pick(1, spec.max_performers);
  p.num_agents = R + P;
  p.free_disposal = pick(0, 1) == 1;
  p.eqos_domain = {spec.eqos_lo, spec.eqos_hi};
  const std::uint64_t full = (std::uint64_t{1} << p.num_tasks) - 1;
  auto any_bundle = [&] { return TaskSet(std::uniform_int_distribution<std::uint64_t>(1, full)(rng)); };
  for (std::uint32_t r = 0; r < R; ++r) {
    ValuationMap v(AgentId{r});
    std::vector<TaskSet> used;
    const std::size_t atoms = pick(1, 3);
    for (std::size_t k = 0; k < atoms; ++k) {
      const auto b = any_bundle();
      if (std::find(used.begin(), used.end(), b) != used.end()) continue;
      if (spec.monotone_values) {
        // Keep the atoms an antichain so missing subsets (worth 0) never break monotonicity.
        bool nested = false;
        for (auto u : used) nested = nested || b.subset_of(u) || u.subset_of(b);
        if (nested) continue;
      }
      used.push_back(b);
      v.add(b, std::round(real(0, 100)));
    }
    p.valuations.push_back(v);
  }
  for (std::uint32_t j = 0; j < P; ++j) {
    std::vector<TaskSet> used;
    const std::size_t atoms = pick(1, 3);
    for (std::size_t k = 0; k < atoms; ++k) {
      const auto b = any_bundle();
      if (std::find(used.begin(), used.end(), b) != used.end()) continue;
      used.push_back(b);
      p.bids.push_back({AgentId{static_cast<std::uint32_t>(R + j)}, b, std::round(real(0, 60))});
    }
  }
  fill_eqos(p, [&](AgentId, AgentId, TaskId) { return real(spec.eqos_lo, spec.eqos_hi); });
  return p;
}

/// Expected value of the requester's bundle over all 2^k completion patterns.
inline double expected_value_full(const ValuationMap& vmap, TaskSet bundle,
                                  const std::vector<std::pair<TaskId, double>>& probs) {
  const std::size_t k = probs.size();
  double total = 0.0;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << k); ++m) {
    double pr = 1.0;
    TaskSet done;
    for (std::size_t i = 0; i < k; ++i) {
      const bool ok = (m >> i) & 1u;
      pr *= ok ? probs[i].second : 1.0 - probs[i].second;
      if (ok) done.insert(probs[i].first);
    }
    double v = 0.0;
    for (const auto& e : vmap.entries()) {
      if (e.bundle == done && done.subset_of(bundle)) v = e.value;
    }
    total += pr * v;
  }
  return total;
}

/// Reference winner determination: every requester picks an atom and a performer
/// per task (or nothing), every performer picks one bid (or nothing); feasibility
/// is checked directly on the (task, performer) nodes.
struct Reference {
  double objective = 0.0;
  std::size_t feasible = 0;
};

inline Reference reference_optimum(const ReportProfile& p, const TrustModel& model) {
  const auto table = build_trust_table(model, p);
  struct Option {
    std::vector<std::pair<TaskId, AgentId>> nodes;
    double value = 0.0;
  };
  std::vector<std::vector<Option>> req_opts;
  for (const auto& vm : p.valuations) {
    std::vector<Option> opts{{}};
    for (const auto& e : vm.entries()) {
      const auto tasks = e.bundle.tasks();
      std::vector<std::vector<AgentId>> choices;
      for (auto t : tasks) {
        std::vector<AgentId> who;
        for (const auto& b : p.bids) {
          if (b.bundle.contains(t) && std::find(who.begin(), who.end(), b.performer) == who.end()) {
            who.push_back(b.performer);
          }
        }
        choices.push_back(who);
      }
      std::function<void(std::size_t, Option)> rec = [&](std::size_t i, Option cur) {
        if (i == tasks.size()) {
          std::vector<std::pair<TaskId, double>> probs;
          for (auto& [t, a] : cur.nodes) probs.push_back({t, table.at(a, t)});
          cur.value = expected_value_full(vm, e.bundle, probs);
          opts.push_back(cur);
          return;
        }
        for (auto a : choices[i]) {
          auto next = cur;
          next.nodes.push_back({tasks[i], a});
          rec(i + 1, next);
        }
      };
      rec(0, {});
    }
    req_opts.push_back(opts);
  }
  std::map<std::uint32_t, std::vector<const BidAtom*>> by_perf;
  for (const auto& b : p.bids) by_perf[b.performer.index].push_back(&b);
  std::vector<std::vector<const BidAtom*>> perf_opts;
  for (auto& [j, list] : by_perf) {
    list.insert(list.begin(), nullptr);
    perf_opts.push_back(list);
  }

  Reference best{-std::numeric_limits<double>::infinity(), 0};
  std::vector<std::size_t> ri(req_opts.size(), 0);
  while (true) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> vcount;
    double value = 0.0;
    for (std::size_t r = 0; r < req_opts.size(); ++r) {
      const auto& o = req_opts[r][ri[r]];
      value += o.value;
      for (auto& [t, a] : o.nodes) vcount[{t.index, a.index}]++;
    }
    bool v_ok = std::all_of(vcount.begin(), vcount.end(), [](auto& kv) { return kv.second == 1; });
    if (v_ok) {
      std::vector<std::size_t> pi(perf_opts.size(), 0);
      while (true) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, int> ccount;
        double cost = 0.0;
        for (std::size_t j = 0; j < perf_opts.size(); ++j) {
          const auto* b = perf_opts[j][pi[j]];
          if (!b) continue;
          cost += b->cost;
          for (auto t : b->bundle.tasks()) ccount[{t.index, b->performer.index}]++;
        }
        bool ok = true;
        for (auto& [k, n] : vcount) ok = ok && ccount.count(k) == 1;
        if (!p.free_disposal) {
          for (auto& [k, n] : ccount) ok = ok && vcount.count(k) == 1;
        }
        if (ok) {
          ++best.feasible;
          best.objective = std::max(best.objective, value - cost);
        }
        std::size_t j = 0;
        while (j < pi.size() && ++pi[j] == perf_opts[j].size()) pi[j++] = 0;
        if (j == pi.size()) break;
      }
    }
    std::size_t r = 0;
    while (r < ri.size() && ++ri[r] == req_opts[r].size()) ri[r++] = 0;
    if (r == ri.size()) break;
  }
  return best;
}

}  // namespace support
