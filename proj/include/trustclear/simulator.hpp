#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trustclear/mechanism.hpp"

namespace trustclear {

/// Uniform double in [0,1) from the top 53 bits of one draw.
double uniform_draw(std::mt19937_64& rng);

/// Each assignment completes independently with its table probability.
ExecutionOutcome sample_execution(const Allocation& alloc, const TrustTable& table, std::uint64_t seed);

/// Success probabilities of the schedule's assignments, in pattern-bit order.
std::vector<double> assignment_probabilities(const PaymentSchedule& schedule, const TrustTable& table);
std::uint64_t sample_mask(std::span<const double> probs, std::mt19937_64& rng);

enum class PaymentRule {
  Gtbm,
  PorterExtension,
  NaiveVickreyExpected,
  /// Deliberately broken: the agent's own reported value and cost enter its payment.
  SelfInclusive,
};

std::string to_string(PaymentRule rule);
bool single_task_rule(PaymentRule rule);

struct UtilityBreakdown {
  double own_value = 0.0;
  double own_cost = 0.0;
  double expected_payment = 0.0;
  double utility = 0.0;
};

/// Expected utility of `agent` with true type taken from `truth` when the others report as in
/// `reported` (which may differ from `truth` only in the agent's entries).
UtilityBreakdown expected_utility_breakdown(const ReportProfile& truth, const TrustModel& model, AgentId agent,
                                            const ReportProfile& reported, const DiscountPolicy& policy,
                                            PaymentRule rule = PaymentRule::Gtbm, const SolveOptions& options = {});
double expected_utility(const ReportProfile& truth, const TrustModel& model, AgentId agent,
                        const ReportProfile& reported, const DiscountPolicy& policy,
                        PaymentRule rule = PaymentRule::Gtbm, const SolveOptions& options = {});

struct Misreport {
  EqosMatrix eqos;
  double cost_scale = 1.0;
  double value_scale = 1.0;

  std::string describe() const;
};

/// The truth with the agent's EQOS replaced and its costs and values scaled.
ReportProfile apply_misreport(const ReportProfile& truth, AgentId agent, const Misreport& m);

struct AuditConfig {
  int eqos_steps = 11;
  int scaling_steps = 21;
  double scale_lo = 0.0;
  double scale_hi = 2.0;
  std::uint64_t seed = 1;
  int samples = 50;
  double epsilon = 1e-6;
  std::size_t max_full_grid = 20000;
  PaymentRule rule = PaymentRule::Gtbm;
  /// Individual rationality: values every EQOS entry may take as a true type. Empty = profile as given.
  std::vector<double> true_type_values;
};

struct AgentAudit {
  AgentId agent;
  double truthful_utility = 0.0;
  double max_gain = 0.0;
  std::optional<Misreport> best_deviation;
  double min_utility = 0.0;
  std::string worst_type;
  std::size_t evaluated = 0;
};

struct AuditReport {
  std::string kind;
  PaymentRule rule = PaymentRule::Gtbm;
  DiscountPolicy policy;
  double epsilon = 1e-6;
  bool full_grid = true;
  std::vector<AgentAudit> agents;
  bool pass = true;
  std::string note;
};

AuditReport audit_incentive_compatibility(const ReportProfile& truth, const TrustModel& model,
                                          const DiscountPolicy& policy, const AuditConfig& config);
AuditReport audit_individual_rationality(const ReportProfile& profile, const TrustModel& model,
                                         const DiscountPolicy& policy, const AuditConfig& config);

std::string format_audit_table(const AuditReport& report);

struct SettlementStats {
  std::vector<AgentId> agents;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> expected;
  std::size_t samples = 0;

  /// |mean - expected| within k standard errors for every agent.
  bool within(double k) const;
};

/// Mean realized payments over seeded executions against their expectation.
SettlementStats monte_carlo_settlement(const PaymentSchedule& schedule, const TrustTable& table,
                                       std::size_t samples, std::uint64_t seed);

}  // namespace trustclear
