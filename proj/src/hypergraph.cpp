#include "trustclear/hypergraph.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>

namespace trustclear {

std::vector<Assignment> Allocation::assignments() const {
  std::vector<Assignment> out;
  for (const auto& e : selected_v) {
    for (const auto& n : e.cover) out.push_back({n.task, e.atom.requester, n.performer});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> Allocation::v_ids() const {
  std::vector<std::size_t> ids;
  for (const auto& e : selected_v) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::size_t> Allocation::c_ids() const {
  std::vector<std::size_t> ids;
  for (const auto& e : selected_c) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::vector<AgentId>> bidders_per_task(const ReportProfile& profile) {
  std::vector<std::set<AgentId>> sets(profile.num_tasks);
  for (const auto& b : profile.bids) {
    for (auto t : b.bundle.tasks()) {
      if (t.index < sets.size()) sets[t.index].insert(b.performer);
    }
  }
  std::vector<std::vector<AgentId>> out(profile.num_tasks);
  for (std::size_t t = 0; t < sets.size(); ++t) out[t].assign(sets[t].begin(), sets[t].end());
  return out;
}

std::vector<std::vector<TpbNode>> enumerate_fulfilling_sets(const ReportProfile& profile, TaskSet bundle) {
  return enumerate_fulfilling_sets(bidders_per_task(profile), bundle);
}

std::vector<std::vector<TpbNode>> enumerate_fulfilling_sets(const std::vector<std::vector<AgentId>>& bidders,
                                                            TaskSet bundle) {
  if (bundle.empty()) throw Error(ErrorKind::Precondition, "cannot fulfil an empty bundle");
  const auto tasks = bundle.tasks();
  for (auto t : tasks) {
    if (t.index >= bidders.size() || bidders[t.index].empty()) return {};
  }
  std::vector<std::vector<TpbNode>> out;
  std::vector<std::size_t> pos(tasks.size(), 0);
  while (true) {
    std::vector<TpbNode> cover;
    cover.reserve(tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k) cover.push_back({tasks[k], bidders[tasks[k].index][pos[k]]});
    out.push_back(std::move(cover));
    std::size_t k = tasks.size();
    while (k > 0) {
      --k;
      if (++pos[k] < bidders[tasks[k].index].size()) break;
      pos[k] = 0;
      if (k == 0) return out;
    }
  }
}

double hyperedge_weight(const ValuationAtom& atom, std::span<const TpbNode> cover, const ValuationMap& vmap,
                        const TrustTable& table) {
  if (atom.bundle.size() > kMaxBundleSize) {
    throw Error(ErrorKind::BundleTooLarge, "bundle " + to_string(atom.bundle) + " exceeds " +
                                               std::to_string(kMaxBundleSize) + " tasks");
  }
  TaskSet covered;
  for (const auto& n : cover) {
    if (covered.contains(n.task)) throw Error(ErrorKind::Precondition, "cover assigns a task twice");
    covered.insert(n.task);
  }
  if (!(covered == atom.bundle)) {
    throw Error(ErrorKind::Precondition, "cover does not fulfil bundle " + to_string(atom.bundle));
  }
  // Subsets absent from the map are worth 0, so only mapped subsets contribute.
  std::vector<double> p;
  p.reserve(cover.size());
  for (const auto& n : cover) p.push_back(table.at(n.performer, n.task));
  double total = 0.0;
  for (const auto& e : vmap.entries()) {
    if (e.value == 0.0 || !e.bundle.subset_of(atom.bundle)) continue;
    double prob = 1.0;
    for (std::size_t k = 0; k < cover.size(); ++k) {
      prob *= e.bundle.contains(cover[k].task) ? p[k] : 1.0 - p[k];
    }
    total += e.value * prob;
  }
  return total;
}

AllocationHypergraph build_hypergraph(const ReportProfile& profile, const TrustTable& table) {
  AllocationHypergraph g;
  g.num_agents = profile.num_agents;
  g.num_tasks = profile.num_tasks;
  g.v_by_requester.resize(profile.num_agents);
  g.c_by_performer.resize(profile.num_agents);

  std::set<TpbNode> nodes;
  std::vector<BidAtom> bids = profile.bids;
  std::stable_sort(bids.begin(), bids.end(), [](const BidAtom& a, const BidAtom& b) {
    if (a.performer != b.performer) return a.performer < b.performer;
    return lex_less(a.bundle, b.bundle);
  });
  for (const auto& b : bids) {
    if (b.bundle.size() > kMaxBundleSize) {
      throw Error(ErrorKind::BundleTooLarge, "bid bundle " + to_string(b.bundle) + " too large");
    }
    BidHyperedge e;
    e.id = g.c_edges.size();
    e.atom = b;
    e.weight = b.cost;
    for (auto t : b.bundle.tasks()) {
      e.cover.push_back({t, b.performer});
      nodes.insert({t, b.performer});
    }
    if (b.performer.index < g.c_by_performer.size()) g.c_by_performer[b.performer.index].push_back(e.id);
    g.c_edges.push_back(std::move(e));
  }
  g.tpb_nodes.assign(nodes.begin(), nodes.end());

  const auto bidders = bidders_per_task(profile);
  std::vector<const ValuationMap*> vmaps;
  for (const auto& vm : profile.valuations) vmaps.push_back(&vm);
  std::stable_sort(vmaps.begin(), vmaps.end(),
                   [](const ValuationMap* a, const ValuationMap* b) { return a->requester() < b->requester(); });
  for (const auto* vm : vmaps) {
    for (const auto& atom : vm->atoms()) {
      if (atom.bundle.size() > kMaxBundleSize) {
        throw Error(ErrorKind::BundleTooLarge, "valuation bundle " + to_string(atom.bundle) + " too large");
      }
      for (auto& cover : enumerate_fulfilling_sets(bidders, atom.bundle)) {
        ValuationHyperedge e;
        e.id = g.v_edges.size();
        e.atom = atom;
        e.weight = hyperedge_weight(atom, cover, *vm, table);
        e.cover = std::move(cover);
        if (atom.requester.index < g.v_by_requester.size()) g.v_by_requester[atom.requester.index].push_back(e.id);
        g.v_edges.push_back(std::move(e));
      }
    }
  }
  return g;
}

std::uint64_t count_allocations(const ReportProfile& profile) {
  const auto bidders = bidders_per_task(profile);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0;
  for (const auto& vm : profile.valuations) {
    for (const auto& e : vm.entries()) {
      std::uint64_t prod = 1;
      for (auto t : e.bundle.tasks()) {
        const std::uint64_t k = t.index < bidders.size() ? bidders[t.index].size() : 0;
        if (k != 0 && prod > kMax / k) throw Error(ErrorKind::InvalidInput, "allocation count overflows 64 bits");
        prod *= k;
      }
      if (total > kMax - prod) throw Error(ErrorKind::InvalidInput, "allocation count overflows 64 bits");
      total += prod;
    }
  }
  return total;
}

bool check_feasible(const AllocationHypergraph& graph, const Allocation& alloc, bool free_disposal) {
  std::set<TpbNode> v_nodes;
  std::set<AgentId> requesters;
  for (const auto& e : alloc.selected_v) {
    if (e.id >= graph.v_edges.size() || !(graph.v_edges[e.id].atom.bundle == e.atom.bundle) ||
        graph.v_edges[e.id].cover != e.cover) {
      return false;
    }
    if (!requesters.insert(e.atom.requester).second) return false;
    for (const auto& n : e.cover) {
      if (!v_nodes.insert(n).second) return false;
    }
  }
  std::set<TpbNode> c_nodes;
  std::set<AgentId> performers;
  for (const auto& e : alloc.selected_c) {
    if (e.id >= graph.c_edges.size() || !(graph.c_edges[e.id].atom.bundle == e.atom.bundle) ||
        graph.c_edges[e.id].atom.performer != e.atom.performer) {
      return false;
    }
    if (!performers.insert(e.atom.performer).second) return false;
    for (const auto& n : e.cover) {
      if (!c_nodes.insert(n).second) return false;
    }
  }
  if (free_disposal) return std::includes(c_nodes.begin(), c_nodes.end(), v_nodes.begin(), v_nodes.end());
  return v_nodes == c_nodes;
}

void dump_hypergraph(const AllocationHypergraph& graph, std::ostream& os) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::fixed << std::setprecision(4);
  os << "hypergraph tasks=" << graph.num_tasks << " agents=" << graph.num_agents << " nodes=" << graph.tpb_nodes.size()
     << " v_edges=" << graph.v_edges.size() << " c_edges=" << graph.c_edges.size() << '\n';
  for (const auto& n : graph.tpb_nodes) os << "node " << n.task.index << ' ' << n.performer.index << '\n';
  for (const auto& e : graph.v_edges) {
    os << "v " << e.id << " requester=" << e.atom.requester.index << " bundle=" << to_string(e.atom.bundle)
       << " value=" << e.atom.value << " cover=";
    for (std::size_t k = 0; k < e.cover.size(); ++k) {
      if (k) os << ',';
      os << e.cover[k].task.index << ':' << e.cover[k].performer.index;
    }
    os << " weight=" << e.weight << '\n';
  }
  for (const auto& e : graph.c_edges) {
    os << "c " << e.id << " performer=" << e.atom.performer.index << " bundle=" << to_string(e.atom.bundle)
       << " weight=" << e.weight << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace trustclear
