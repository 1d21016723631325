#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trustclear {

/// Absolute tolerance used for objective and probability comparisons.
inline constexpr double kTolerance = 1e-9;

/// Largest bundle whose subset expansion is computed exactly.
inline constexpr std::size_t kMaxBundleSize = 16;

enum class ErrorKind {
  InvalidInput,
  IncompleteEqos,
  IncompleteTrustTable,
  Precondition,
  BundleTooLarge,
  OracleTooLarge,
  UnsupportedMinMarginal,
  ShapeMismatch,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct TaskId {
  std::uint32_t index = 0;
  auto operator<=>(const TaskId&) const = default;
};

struct AgentId {
  std::uint32_t index = 0;
  auto operator<=>(const AgentId&) const = default;
};

/// Set of tasks drawn from an instance with at most 64 tasks.
class TaskSet {
 public:
  static constexpr std::size_t kCapacity = 64;

  constexpr TaskSet() = default;
  constexpr explicit TaskSet(std::uint64_t bits) : bits_(bits) {}
  TaskSet(std::initializer_list<std::uint32_t> tasks);

  static TaskSet of(std::span<const TaskId> tasks);

  bool contains(TaskId t) const { return (bits_ >> t.index) & 1u; }
  void insert(TaskId t);
  void erase(TaskId t) { bits_ &= ~(std::uint64_t{1} << t.index); }

  std::size_t size() const;
  bool empty() const { return bits_ == 0; }
  bool subset_of(TaskSet other) const { return (bits_ & ~other.bits_) == 0; }
  std::uint64_t bits() const { return bits_; }

  /// Tasks in ascending index order.
  std::vector<TaskId> tasks() const;

  friend TaskSet operator|(TaskSet a, TaskSet b) { return TaskSet(a.bits_ | b.bits_); }
  friend TaskSet operator&(TaskSet a, TaskSet b) { return TaskSet(a.bits_ & b.bits_); }
  friend TaskSet operator-(TaskSet a, TaskSet b) { return TaskSet(a.bits_ & ~b.bits_); }
  friend bool operator==(TaskSet a, TaskSet b) { return a.bits_ == b.bits_; }

  /// Lexicographic order on the ascending task sequences.
  friend bool lex_less(TaskSet a, TaskSet b);

 private:
  std::uint64_t bits_ = 0;
};

/// Orders task sets by raw bit pattern; used for map keys, not for edge ordering.
struct TaskSetBitsLess {
  bool operator()(TaskSet a, TaskSet b) const { return a.bits() < b.bits(); }
};

std::string to_string(TaskSet s);

struct ValuationAtom {
  AgentId requester;
  TaskSet bundle;
  double value = 0.0;
};

struct BidAtom {
  AgentId performer;
  TaskSet bundle;
  double cost = 0.0;
};

/// Requester's values over task sets. Keys are the XOR atoms it requests;
/// any other subset is worth 0.
class ValuationMap {
 public:
  ValuationMap() = default;
  explicit ValuationMap(AgentId requester) : requester_(requester) {}

  AgentId requester() const { return requester_; }

  /// Appends an entry. Duplicate bundles are kept so validation can report them.
  void add(TaskSet bundle, double value) { entries_.push_back({bundle, value}); }

  double value(TaskSet subset) const;
  bool has(TaskSet bundle) const;

  struct Entry {
    TaskSet bundle;
    double value = 0.0;
  };
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  /// XOR atoms in lexicographic bundle order.
  std::vector<ValuationAtom> atoms() const;

  void scale(double factor);

  /// v(S) <= v(S') for every S subset of S' within each requested bundle.
  bool subset_monotone() const;

  friend bool operator==(const ValuationMap& a, const ValuationMap& b);

 private:
  AgentId requester_;
  std::vector<Entry> entries_;
};

/// One agent's perceived probabilities of success, keyed by (performer, task).
class EqosMatrix {
 public:
  EqosMatrix() = default;
  explicit EqosMatrix(AgentId reporter) : reporter_(reporter) {}

  AgentId reporter() const { return reporter_; }
  void set(AgentId performer, TaskId task, double value) { entries_[{performer, task}] = value; }
  std::optional<double> find(AgentId performer, TaskId task) const;

  using Key = std::pair<AgentId, TaskId>;
  const std::map<Key, double>& entries() const { return entries_; }

  friend bool operator==(const EqosMatrix&, const EqosMatrix&) = default;

 private:
  AgentId reporter_;
  std::map<Key, double> entries_;
};

struct EqosDomain {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const EqosDomain&, const EqosDomain&) = default;
};

/// All agents' reports. Agents are 0..num_agents-1 and tasks 0..num_tasks-1.
struct ReportProfile {
  std::size_t num_agents = 0;
  std::size_t num_tasks = 0;
  std::vector<ValuationMap> valuations;
  std::vector<BidAtom> bids;
  std::vector<EqosMatrix> eqos;
  bool free_disposal = false;
  EqosDomain eqos_domain;

  std::vector<AgentId> agents() const;
  std::vector<TaskId> tasks() const;

  const EqosMatrix* eqos_of(AgentId reporter) const;
  EqosMatrix* eqos_of(AgentId reporter);
  const ValuationMap* valuation_of(AgentId requester) const;
  ValuationMap* valuation_of(AgentId requester);
  std::vector<BidAtom> bids_of(AgentId performer) const;

  /// Puts valuations, bids and EQOS matrices in canonical order.
  void normalize();

  friend bool operator==(const ReportProfile& a, const ReportProfile& b);
};

/// A single-task assignment: performer executes task for requester.
struct Assignment {
  TaskId task;
  AgentId requester;
  AgentId performer;

  friend auto operator<=>(const Assignment& a, const Assignment& b) {
    if (auto c = a.requester <=> b.requester; c != 0) return c;
    if (auto c = a.task <=> b.task; c != 0) return c;
    return a.performer <=> b.performer;
  }
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct ExecutionOutcome {
  std::map<Assignment, bool> completed;
};

struct Violation {
  std::string kind;
  std::string detail;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every invariant violation in the profile; empty when admissible.
std::vector<Violation> validate_report_profile(const ReportProfile& profile);

}  // namespace trustclear
