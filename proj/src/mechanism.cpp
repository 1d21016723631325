#include "trustclear/mechanism.hpp"

#include <algorithm>
#include <sstream>

namespace trustclear {

std::string to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::Gtbm:
      return "gtbm";
    case MechanismKind::SingleTaskTbm:
      return "single-task-tbm";
    case MechanismKind::Porter:
      return "porter";
    case MechanismKind::PorterExtension:
      return "porter-extension";
    case MechanismKind::NaiveVickrey:
      return "naive-vickrey";
  }
  return "unknown";
}

DiscountPolicy DiscountPolicy::fixed_value(double value) {
  if (!(value >= 0.0)) throw Error(ErrorKind::InvalidInput, "fixed discount must be non-negative");
  DiscountPolicy p;
  p.kind = Kind::Fixed;
  p.fixed = value;
  return p;
}

DiscountPolicy DiscountPolicy::fixed_per_agent(std::map<std::uint32_t, double> values, double fallback) {
  auto p = fixed_value(fallback);
  for (const auto& [agent, v] : values) {
    if (!(v >= 0.0)) throw Error(ErrorKind::InvalidInput, "fixed discount must be non-negative");
  }
  p.per_agent = std::move(values);
  return p;
}

DiscountPolicy DiscountPolicy::min_marginal() {
  DiscountPolicy p;
  p.kind = Kind::MinMarginal;
  return p;
}

double DiscountPolicy::fixed_for(AgentId agent) const {
  auto it = per_agent.find(agent.index);
  return it == per_agent.end() ? fixed : it->second;
}

std::string to_string(const DiscountPolicy& policy) {
  switch (policy.kind) {
    case DiscountPolicy::Kind::Zero:
      return "zero";
    case DiscountPolicy::Kind::Fixed: {
      std::ostringstream os;
      os << "fixed:" << policy.fixed;
      return os.str();
    }
    case DiscountPolicy::Kind::MinMarginal:
      return "min-marginal";
  }
  return "unknown";
}

void require_valid(const ReportProfile& profile) {
  const auto violations = validate_report_profile(profile);
  if (!violations.empty()) {
    const auto& v = violations.front();
    const auto kind = v.kind == "missing EQOS entry" || v.kind == "missing EQOS matrix" ? ErrorKind::IncompleteEqos
                                                                                         : ErrorKind::InvalidInput;
    throw Error(kind, v.kind + ": " + v.detail);
  }
}

SolveResult gtbm_allocate(const ReportProfile& profile, const TrustModel& model, const SolveOptions& options) {
  require_valid(profile);
  const auto table = build_trust_table(model, profile);
  const auto graph = build_hypergraph(profile, table);
  return solve(graph, profile.free_disposal, {}, options);
}

namespace {

std::vector<std::pair<AgentId, TaskId>> bid_pairs(const ReportProfile& profile) {
  std::vector<std::pair<AgentId, TaskId>> out;
  for (const auto& b : profile.bids) {
    for (auto t : b.bundle.tasks()) out.push_back({b.performer, t});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

const char* kMinMarginalUnsupported = "min-marginal unsupported for non-monotone trust";

}  // namespace

double compute_B_min_marginal(const ReportProfile& profile, const TrustModel& model, AgentId agent,
                              const SolveOptions& options) {
  if (!model.monotone()) {
    throw Error(ErrorKind::UnsupportedMinMarginal,
                std::string(kMinMarginalUnsupported) + " (model '" + model.name() + "')");
  }
  for (const auto& vm : profile.valuations) {
    if (!vm.subset_monotone()) {
      throw Error(ErrorKind::UnsupportedMinMarginal, std::string(kMinMarginalUnsupported) + " (valuation of agent " +
                                                         std::to_string(vm.requester().index) +
                                                         " is not subset-monotone)");
    }
  }
#ifndef NDEBUG
  if (!spot_check_monotone(model, profile, 0x5eed + agent.index, 4)) {
    throw Error(ErrorKind::UnsupportedMinMarginal,
                std::string(kMinMarginalUnsupported) + " (model '" + model.name() + "' failed a spot check)");
  }
#endif
  EqosMatrix lowered(agent);
  const double lo = profile.eqos_domain.lo;
  if (const auto* own = profile.eqos_of(agent)) {
    for (const auto& [key, v] : own->entries()) lowered.set(key.first, key.second, lo);
  }
  for (const auto& [perf, task] : bid_pairs(profile)) lowered.set(perf, task, lo);

  const auto table = build_trust_table(model, profile, lowered);
  const auto graph = build_hypergraph(profile, table);
  const auto result = solve(graph, profile.free_disposal, EdgeFilter{{agent}}, options);
  return std::max(0.0, result.objective);
}

const PaymentSchedule::AgentTerm* PaymentSchedule::term_of(AgentId agent) const {
  for (const auto& t : agents_) {
    if (t.agent == agent) return &t;
  }
  return nullptr;
}

void PaymentSchedule::set_allocation(const Allocation& alloc, const ReportProfile& profile) {
  assignments_ = alloc.assignments();
  requesters_.clear();
  for (const auto& e : alloc.selected_v) {
    RequesterTerm term;
    term.requester = e.atom.requester;
    if (const auto* vm = profile.valuation_of(e.atom.requester)) {
      term.vmap = *vm;
    } else {
      term.vmap = ValuationMap(e.atom.requester);
    }
    term.atom = e.atom;
    term.cover = e.cover;
    for (std::size_t k = 0; k < assignments_.size(); ++k) {
      if (assignments_[k].requester == e.atom.requester) term.slots.push_back(k);
    }
    requesters_.push_back(std::move(term));
  }
}

std::uint64_t PaymentSchedule::mask_of(const ExecutionOutcome& outcome) const {
  if (assignments_.size() > 64) throw Error(ErrorKind::Precondition, "more than 64 assignments");
  if (outcome.completed.size() != assignments_.size()) {
    throw Error(ErrorKind::Precondition, "outcome does not match the allocation's assignments");
  }
  std::uint64_t mask = 0;
  for (std::size_t k = 0; k < assignments_.size(); ++k) {
    auto it = outcome.completed.find(assignments_[k]);
    if (it == outcome.completed.end()) {
      throw Error(ErrorKind::Precondition, "outcome lacks an assignment of the allocation");
    }
    if (it->second) mask |= std::uint64_t{1} << k;
  }
  return mask;
}

std::uint64_t PaymentSchedule::all_success() const {
  if (assignments_.size() >= 64) return ~std::uint64_t{0};
  return (std::uint64_t{1} << assignments_.size()) - 1;
}

double PaymentSchedule::realized_value(AgentId requester, std::uint64_t mask) const {
  for (const auto& r : requesters_) {
    if (r.requester != requester) continue;
    TaskSet done;
    for (auto k : r.slots) {
      if ((mask >> k) & 1u) done.insert(assignments_[k].task);
    }
    return r.vmap.value(done);
  }
  return 0.0;
}

double PaymentSchedule::expected_value(AgentId requester, const TrustTable& table) const {
  for (const auto& r : requesters_) {
    if (r.requester == requester) return hyperedge_weight(r.atom, r.cover, r.vmap, table);
  }
  return 0.0;
}

double PaymentSchedule::payment(AgentId agent, std::uint64_t mask) const {
  const auto* t = term_of(agent);
  if (t == nullptr) return 0.0;
  double total = t->constant;
  for (auto j : t->value_of) total += realized_value(j, mask);
  return total;
}

double PaymentSchedule::payment(AgentId agent, const ExecutionOutcome& outcome) const {
  return payment(agent, mask_of(outcome));
}

double PaymentSchedule::expected_payment(AgentId agent, const TrustTable& table) const {
  const auto* t = term_of(agent);
  if (t == nullptr) return 0.0;
  double total = t->constant;
  for (auto j : t->value_of) total += expected_value(j, table);
  return total;
}

double PaymentSchedule::centre_balance(std::uint64_t mask) const {
  double total = 0.0;
  for (const auto& t : agents_) total -= payment(t.agent, mask);
  return total;
}

double allocated_cost(const Allocation& alloc, AgentId performer) {
  double c = 0.0;
  for (const auto& e : alloc.selected_c) {
    if (e.atom.performer == performer) c += e.weight;
  }
  return c;
}

std::vector<double> compute_discounts(const ReportProfile& profile, const TrustModel& model,
                                      const DiscountPolicy& policy, const SolveOptions& options,
                                      std::optional<AgentId> only) {
  std::vector<double> b(profile.num_agents, 0.0);
  for (std::uint32_t i = 0; i < profile.num_agents; ++i) {
    const AgentId a{i};
    if (only && *only != a) continue;
    switch (policy.kind) {
      case DiscountPolicy::Kind::Zero:
        break;
      case DiscountPolicy::Kind::Fixed:
        b[i] = policy.fixed_for(a);
        break;
      case DiscountPolicy::Kind::MinMarginal:
        b[i] = compute_B_min_marginal(profile, model, a, options);
        break;
    }
  }
  return b;
}

PaymentSchedule gtbm_payment_schedule(const ReportProfile& profile, const TrustModel& model, const SolveResult& result,
                                      const DiscountPolicy& policy, const SolveOptions& options,
                                      std::optional<AgentId> only) {
  PaymentSchedule s;
  s.mechanism = MechanismKind::Gtbm;
  s.set_allocation(result.allocation, profile);
  const auto discounts = compute_discounts(profile, model, policy, options, only);
  std::vector<double> costs(profile.num_agents, 0.0);
  for (const auto& e : result.allocation.selected_c) costs[e.atom.performer.index] += e.weight;
  for (std::uint32_t i = 0; i < profile.num_agents; ++i) {
    const AgentId a{i};
    if (only && *only != a) continue;
    PaymentSchedule::AgentTerm term;
    term.agent = a;
    for (const auto& r : s.requesters()) {
      if (r.requester != a) term.value_of.push_back(r.requester);
    }
    double others_cost = 0.0;
    for (std::uint32_t j = 0; j < profile.num_agents; ++j) {
      if (j != i) others_cost += costs[j];
    }
    term.discount = discounts[i];
    term.constant = -others_cost - discounts[i];
    s.add_agent(std::move(term));
  }
  return s;
}

SingleTaskShape single_task_shape(const ReportProfile& profile) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorKind::ShapeMismatch, "instance is not single-requester single-task: " + why);
  };
  if (profile.valuations.size() != 1) fail("expected one requester");
  const auto& vm = profile.valuations.front();
  if (vm.entries().size() != 1 || vm.entries().front().bundle.size() != 1) fail("expected one single-task valuation");
  SingleTaskShape shape;
  shape.requester = vm.requester();
  shape.task = vm.entries().front().bundle.tasks().front();
  shape.value = vm.entries().front().value;
  for (const auto& b : profile.bids) {
    if (!(b.bundle == TaskSet{shape.task.index})) fail("bid on another bundle");
    if (b.performer == shape.requester) fail("requester also bids");
  }
  return shape;
}

namespace {

std::optional<AgentId> winner_of(const SolveResult& result) {
  if (result.allocation.selected_v.empty()) return std::nullopt;
  return result.allocation.selected_v.front().cover.front().performer;
}

}  // namespace

PaymentSchedule single_task_tbm(const ReportProfile& profile, const TrustModel& model, const DiscountPolicy& policy,
                                const SolveOptions& options) {
  const auto shape = single_task_shape(profile);
  const auto result = gtbm_allocate(profile, model, options);
  const auto discounts = compute_discounts(profile, model, policy, options);
  PaymentSchedule s;
  s.mechanism = MechanismKind::SingleTaskTbm;
  s.set_allocation(result.allocation, profile);
  s.winner = winner_of(result);
  const double winner_cost = s.winner ? allocated_cost(result.allocation, *s.winner) : 0.0;
  for (std::uint32_t k = 0; k < profile.num_agents; ++k) {
    const AgentId a{k};
    if (a == shape.requester) continue;
    PaymentSchedule::AgentTerm term;
    term.agent = a;
    term.discount = discounts[k];
    if (s.winner) {
      term.value_of.push_back(shape.requester);
      term.constant = (a == *s.winner ? 0.0 : -winner_cost) - discounts[k];
    } else {
      term.constant = -discounts[k];
    }
    s.add_agent(std::move(term));
  }
  return s;
}

namespace {

/// Best welfare over allocations without the agent, under the given trust model.
double welfare_without(const ReportProfile& profile, const TrustModel& model, AgentId agent,
                       const SolveOptions& options) {
  const auto table = build_trust_table(model, profile);
  const auto graph = build_hypergraph(profile, table);
  return solve(graph, profile.free_disposal, EdgeFilter{{agent}}, options).objective;
}

PaymentSchedule second_price_schedule(MechanismKind kind, const ReportProfile& profile, const TrustModel& alloc_model,
                                      const TrustModel& price_model, const SolveOptions& options) {
  const auto shape = single_task_shape(profile);
  const auto result = gtbm_allocate(profile, alloc_model, options);
  PaymentSchedule s;
  s.mechanism = kind;
  s.set_allocation(result.allocation, profile);
  s.winner = winner_of(result);
  for (std::uint32_t k = 0; k < profile.num_agents; ++k) {
    const AgentId a{k};
    if (a == shape.requester) continue;
    PaymentSchedule::AgentTerm term;
    term.agent = a;
    if (s.winner && a == *s.winner) {
      const auto model = kind == MechanismKind::PorterExtension ? price_model.without_reporter(a) : price_model;
      term.value_of.push_back(shape.requester);
      term.constant = -welfare_without(profile, model, a, options);
    }
    s.add_agent(std::move(term));
  }
  return s;
}

}  // namespace

PaymentSchedule porter_schedule(const ReportProfile& profile, const SolveOptions& options) {
  const auto model = TrustModel::self_report();
  return second_price_schedule(MechanismKind::Porter, profile, model, model, options);
}

std::vector<double> porter_payment(const ReportProfile& profile, const ExecutionOutcome& outcome) {
  const auto s = porter_schedule(profile);
  const auto mask = s.mask_of(outcome);
  std::vector<double> out(profile.num_agents, 0.0);
  for (std::uint32_t i = 0; i < profile.num_agents; ++i) out[i] = s.payment(AgentId{i}, mask);
  return out;
}

PaymentSchedule porter_extension_schedule(const ReportProfile& profile, const TrustModel& model,
                                          const SolveOptions& options) {
  return second_price_schedule(MechanismKind::PorterExtension, profile, model, model, options);
}

PaymentSchedule naive_vickrey_schedule(const ReportProfile& profile, const TrustModel& model, VickreyMode mode,
                                       const SolveOptions& options) {
  const auto shape = single_task_shape(profile);
  require_valid(profile);
  TrustTable table;
  if (mode == VickreyMode::Certain) {
    table = TrustTable(profile.num_agents, profile.num_tasks);
    for (const auto& b : profile.bids) table.set(b.performer, shape.task, 1.0);
  } else {
    table = build_trust_table(model, profile);
  }
  const auto graph = build_hypergraph(profile, table);
  const auto result = solve(graph, profile.free_disposal, {}, options);
  PaymentSchedule s;
  s.mechanism = MechanismKind::NaiveVickrey;
  s.set_allocation(result.allocation, profile);
  s.winner = winner_of(result);
  for (std::uint32_t k = 0; k < profile.num_agents; ++k) {
    const AgentId a{k};
    if (a == shape.requester) continue;
    PaymentSchedule::AgentTerm term;
    term.agent = a;
    if (s.winner && a == *s.winner) {
      const double own = result.allocation.selected_v.front().weight;
      term.constant = own - solve(graph, profile.free_disposal, EdgeFilter{{a}}, options).objective;
    }
    s.add_agent(std::move(term));
  }
  return s;
}

std::vector<double> naive_vickrey_payment(const ReportProfile& profile, const TrustModel& model, VickreyMode mode) {
  const auto s = naive_vickrey_schedule(profile, model, mode);
  std::vector<double> out(profile.num_agents, 0.0);
  for (std::uint32_t i = 0; i < profile.num_agents; ++i) out[i] = s.payment(AgentId{i}, 0);
  return out;
}

}  // namespace trustclear
