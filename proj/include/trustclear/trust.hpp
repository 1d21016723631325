#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trustclear/core.hpp"

namespace trustclear {

/// Aggregation rule from EQOS reports to a probability of success.
class TrustModel {
 public:
  enum class Kind { WeightedSum, Custom };
  using Eval = std::function<double(std::span<const EqosMatrix>, AgentId performer, TaskId task)>;

  /// Weights indexed by reporter; each in [0,1], summing to 1.
  static TrustModel weighted_sum(std::vector<double> weights);
  static TrustModel uniform(std::size_t num_agents);
  static TrustModel custom(std::string name, Eval eval, bool monotone);
  /// Each performer's probability is its own report about itself.
  static TrustModel self_report();

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::vector<double>& weights() const { return weights_; }
  bool monotone() const { return monotone_; }

  double evaluate(std::span<const EqosMatrix> eqos, AgentId performer, TaskId task) const;

  /// Same rule with the reporter's matrix ignored; weighted sums are renormalized.
  TrustModel without_reporter(AgentId reporter) const;

 private:
  Kind kind_ = Kind::WeightedSum;
  std::string name_ = "weighted_sum";
  std::vector<double> weights_;
  Eval eval_;
  bool monotone_ = true;
};

double weighted_sum_trust(const TrustModel& model, std::span<const EqosMatrix> eqos, AgentId performer,
                          TaskId task);

/// Probabilities of success per (performer, task); absent pairs are NaN.
class TrustTable {
 public:
  TrustTable() = default;
  TrustTable(std::size_t num_agents, std::size_t num_tasks);

  std::size_t num_agents() const { return agents_; }
  std::size_t num_tasks() const { return tasks_; }

  bool has(AgentId performer, TaskId task) const;
  double at(AgentId performer, TaskId task) const;
  void set(AgentId performer, TaskId task, double p);

  friend bool operator==(const TrustTable& a, const TrustTable& b);

 private:
  std::size_t index(AgentId performer, TaskId task) const;

  std::size_t agents_ = 0;
  std::size_t tasks_ = 0;
  std::vector<double> p_;
};

/// Evaluates the model at every (performer, task) pair with a submitted bid.
/// When override_matrix is set it replaces the matrix of its reporter.
TrustTable build_trust_table(const TrustModel& model, const ReportProfile& profile,
                             const std::optional<EqosMatrix>& override_matrix = std::nullopt);

/// Probability that exactly `done` out of `assigned` is completed by one performer.
double bundle_completion_trust(const TrustTable& table, AgentId performer, TaskSet done, TaskSet assigned);

/// Probability that exactly `done` out of the requester's `assigned` tasks is completed.
double allocation_completion_trust(const TrustTable& table, AgentId requester, std::span<const Assignment> done,
                                   std::span<const Assignment> assigned);

/// Randomly raises EQOS entries and reports whether any table entry went down.
bool spot_check_monotone(const TrustModel& model, const ReportProfile& profile, std::uint64_t seed, int trials);

}  // namespace trustclear
