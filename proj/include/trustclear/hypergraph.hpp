#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "trustclear/core.hpp"
#include "trustclear/trust.hpp"

namespace trustclear {

/// A (task, performer) pattern; the requester is left open.
struct TpbNode {
  TaskId task;
  AgentId performer;
  auto operator<=>(const TpbNode&) const = default;
};

struct ValuationHyperedge {
  std::size_t id = 0;
  ValuationAtom atom;
  /// One node per bundle task, in ascending task order.
  std::vector<TpbNode> cover;
  double weight = 0.0;
};

struct BidHyperedge {
  std::size_t id = 0;
  BidAtom atom;
  std::vector<TpbNode> cover;
  double weight = 0.0;
};

struct AllocationHypergraph {
  std::size_t num_agents = 0;
  std::size_t num_tasks = 0;
  std::vector<TpbNode> tpb_nodes;
  std::vector<ValuationHyperedge> v_edges;
  std::vector<BidHyperedge> c_edges;
  /// Edge indices per agent, indexed by agent.
  std::vector<std::vector<std::size_t>> v_by_requester;
  std::vector<std::vector<std::size_t>> c_by_performer;
};

struct Allocation {
  std::vector<ValuationHyperedge> selected_v;
  std::vector<BidHyperedge> selected_c;

  bool empty() const { return selected_v.empty() && selected_c.empty(); }
  /// Single-task assignments, sorted.
  std::vector<Assignment> assignments() const;
  std::vector<std::size_t> v_ids() const;
  std::vector<std::size_t> c_ids() const;
};

/// Bidders per task: result[t] lists performers bidding on task t, ascending.
std::vector<std::vector<AgentId>> bidders_per_task(const ReportProfile& profile);

/// Every way to pick one bidding performer per task of the bundle.
std::vector<std::vector<TpbNode>> enumerate_fulfilling_sets(const ReportProfile& profile, TaskSet bundle);
std::vector<std::vector<TpbNode>> enumerate_fulfilling_sets(const std::vector<std::vector<AgentId>>& bidders,
                                                            TaskSet bundle);

/// Expected value of the atom's bundle when performed by the cover.
double hyperedge_weight(const ValuationAtom& atom, std::span<const TpbNode> cover, const ValuationMap& vmap,
                        const TrustTable& table);

AllocationHypergraph build_hypergraph(const ReportProfile& profile, const TrustTable& table);

/// Number of valuation hyperedges the profile induces, without building them.
std::uint64_t count_allocations(const ReportProfile& profile);

bool check_feasible(const AllocationHypergraph& graph, const Allocation& alloc, bool free_disposal);

void dump_hypergraph(const AllocationHypergraph& graph, std::ostream& os);

}  // namespace trustclear
