#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "trustclear/hypergraph.hpp"

namespace trustclear {

/// Removes every edge touching an excluded agent, as requester, performer or bidder.
struct EdgeFilter {
  std::vector<AgentId> excluded;

  bool excludes(AgentId a) const;
  bool excludes_v(const ValuationHyperedge& e) const;
  bool excludes_c(const BidHyperedge& e) const;
};

struct SolveOptions {
  /// 0 picks TRUSTCLEAR_THREADS or the hardware count.
  unsigned threads = 0;
  /// Completes every search node exhaustively to check the bound; small graphs only.
  bool verify_bounds = false;
};

struct SolveStats {
  std::uint64_t nodes_explored = 0;
  std::chrono::nanoseconds wall_time{0};
  std::uint64_t bound_violations = 0;
  unsigned threads_used = 1;
};

struct SolveResult {
  Allocation allocation;
  double objective = 0.0;
  SolveStats stats;
};

/// Exact winner determination by branch and bound over requesters.
SolveResult solve(const AllocationHypergraph& graph, bool free_disposal, const EdgeFilter& restriction = {},
                  const SolveOptions& options = {});

/// Exhaustive enumeration used to cross-check `solve` on small graphs.
SolveResult brute_force_optimum(const AllocationHypergraph& graph, bool free_disposal,
                                const EdgeFilter& restriction = {});

/// Tie-break order: smaller sorted valuation ids first, then fewer bids, then bid ids.
bool tie_break_less(const Allocation& a, const Allocation& b);

/// Threads requested through TRUSTCLEAR_THREADS, or the hardware count.
unsigned default_thread_count();

}  // namespace trustclear
