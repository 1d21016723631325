#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trustclear/solver.hpp"
#include "trustclear/trust.hpp"

namespace trustclear {

enum class MechanismKind { Gtbm, SingleTaskTbm, Porter, PorterExtension, NaiveVickrey };

std::string to_string(MechanismKind kind);

struct DiscountPolicy {
  enum class Kind { Zero, Fixed, MinMarginal };

  Kind kind = Kind::Zero;
  /// Fixed: amount for agents without a per-agent override.
  double fixed = 0.0;
  std::map<std::uint32_t, double> per_agent;

  static DiscountPolicy zero() { return {}; }
  static DiscountPolicy fixed_value(double value);
  static DiscountPolicy fixed_per_agent(std::map<std::uint32_t, double> values, double fallback = 0.0);
  static DiscountPolicy min_marginal();

  double fixed_for(AgentId agent) const;
};

std::string to_string(const DiscountPolicy& policy);

/// Validates the profile and throws on the first violation.
void require_valid(const ReportProfile& profile);

/// Efficient allocation for all reports.
SolveResult gtbm_allocate(const ReportProfile& profile, const TrustModel& model, const SolveOptions& options = {});

/// Worst-case welfare without the agent, its EQOS pinned to the domain lower bound.
double compute_B_min_marginal(const ReportProfile& profile, const TrustModel& model, AgentId agent,
                              const SolveOptions& options = {});

/// Contingent payments. Each agent's payment is the realized value of the listed requesters
/// plus a constant; realized values are looked up in the reported valuation maps.
class PaymentSchedule {
 public:
  struct RequesterTerm {
    AgentId requester;
    ValuationMap vmap;
    ValuationAtom atom;
    std::vector<TpbNode> cover;
    /// Positions of this requester's assignments in assignments().
    std::vector<std::size_t> slots;
  };

  struct AgentTerm {
    AgentId agent;
    std::vector<AgentId> value_of;
    double constant = 0.0;
    double discount = 0.0;
  };

  MechanismKind mechanism = MechanismKind::Gtbm;
  std::optional<AgentId> winner;

  const std::vector<Assignment>& assignments() const { return assignments_; }
  const std::vector<RequesterTerm>& requesters() const { return requesters_; }
  const std::vector<AgentTerm>& agents() const { return agents_; }
  const AgentTerm* term_of(AgentId agent) const;

  /// Bit k of a pattern is the outcome of assignments()[k].
  std::uint64_t mask_of(const ExecutionOutcome& outcome) const;
  std::uint64_t all_success() const;

  /// Payment to the agent; 0 for agents the mechanism does not pay.
  double payment(AgentId agent, std::uint64_t mask) const;
  double payment(AgentId agent, const ExecutionOutcome& outcome) const;
  double expected_payment(AgentId agent, const TrustTable& table) const;

  /// Realized value of a requester's served tasks under the pattern.
  double realized_value(AgentId requester, std::uint64_t mask) const;
  double expected_value(AgentId requester, const TrustTable& table) const;

  /// Centre's surplus: minus the sum of all payments.
  double centre_balance(std::uint64_t mask) const;

  void set_allocation(const Allocation& alloc, const ReportProfile& profile);
  void add_agent(AgentTerm term) { agents_.push_back(std::move(term)); }

 private:
  std::vector<Assignment> assignments_;
  std::vector<RequesterTerm> requesters_;
  std::vector<AgentTerm> agents_;
};

/// Discount per agent under the policy.
std::vector<double> compute_discounts(const ReportProfile& profile, const TrustModel& model,
                                      const DiscountPolicy& policy, const SolveOptions& options = {},
                                      std::optional<AgentId> only = std::nullopt);

/// Every agent receives the others' realized values minus the others' costs, minus its discount.
PaymentSchedule gtbm_payment_schedule(const ReportProfile& profile, const TrustModel& model, const SolveResult& result,
                                      const DiscountPolicy& policy, const SolveOptions& options = {},
                                      std::optional<AgentId> only = std::nullopt);

/// Single requester, single task. Requester id, task and bidders are checked.
struct SingleTaskShape {
  AgentId requester;
  TaskId task;
  double value = 0.0;
};
SingleTaskShape single_task_shape(const ReportProfile& profile);

PaymentSchedule single_task_tbm(const ReportProfile& profile, const TrustModel& model, const DiscountPolicy& policy,
                                const SolveOptions& options = {});

/// Winner pays the best welfare without it; probabilities are self reports only.
PaymentSchedule porter_schedule(const ReportProfile& profile, const SolveOptions& options = {});
std::vector<double> porter_payment(const ReportProfile& profile, const ExecutionOutcome& outcome);

/// Porter's rule with trust, ignoring the winner's reports when pricing it.
PaymentSchedule porter_extension_schedule(const ReportProfile& profile, const TrustModel& model,
                                          const SolveOptions& options = {});

enum class VickreyMode { Certain, Expected };

/// Unconditional transfer to the winner.
PaymentSchedule naive_vickrey_schedule(const ReportProfile& profile, const TrustModel& model, VickreyMode mode,
                                       const SolveOptions& options = {});
std::vector<double> naive_vickrey_payment(const ReportProfile& profile, const TrustModel& model, VickreyMode mode);

/// Allocation's cost for one performer (0 when it performs nothing).
double allocated_cost(const Allocation& alloc, AgentId performer);

}  // namespace trustclear
