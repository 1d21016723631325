#include "trustclear/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace trustclear {

double uniform_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ExecutionOutcome sample_execution(const Allocation& alloc, const TrustTable& table, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ExecutionOutcome out;
  for (const auto& a : alloc.assignments()) {
    const double p = table.at(a.performer, a.task);
    out.completed[a] = uniform_draw(rng) < p;
  }
  return out;
}

std::vector<double> assignment_probabilities(const PaymentSchedule& schedule, const TrustTable& table) {
  std::vector<double> p;
  for (const auto& a : schedule.assignments()) p.push_back(table.at(a.performer, a.task));
  return p;
}

std::uint64_t sample_mask(std::span<const double> probs, std::mt19937_64& rng) {
  std::uint64_t mask = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (uniform_draw(rng) < probs[k]) mask |= std::uint64_t{1} << k;
  }
  return mask;
}

std::string to_string(PaymentRule rule) {
  switch (rule) {
    case PaymentRule::Gtbm:
      return "gtbm";
    case PaymentRule::PorterExtension:
      return "porter-extension";
    case PaymentRule::NaiveVickreyExpected:
      return "naive-vickrey";
    case PaymentRule::SelfInclusive:
      return "self-inclusive";
  }
  return "unknown";
}

bool single_task_rule(PaymentRule rule) {
  return rule == PaymentRule::PorterExtension || rule == PaymentRule::NaiveVickreyExpected;
}

namespace {

PaymentSchedule schedule_for(PaymentRule rule, const ReportProfile& reported, const TrustModel& model,
                             const SolveResult& result, const DiscountPolicy& policy, AgentId agent,
                             const SolveOptions& options) {
  switch (rule) {
    case PaymentRule::Gtbm:
      return gtbm_payment_schedule(reported, model, result, policy, options, agent);
    case PaymentRule::PorterExtension:
      return porter_extension_schedule(reported, model, options);
    case PaymentRule::NaiveVickreyExpected:
      return naive_vickrey_schedule(reported, model, VickreyMode::Expected, options);
    case PaymentRule::SelfInclusive: {
      PaymentSchedule s;
      s.mechanism = MechanismKind::Gtbm;
      s.set_allocation(result.allocation, reported);
      const double b = compute_discounts(reported, model, policy, options, agent)[agent.index];
      PaymentSchedule::AgentTerm term;
      term.agent = agent;
      for (const auto& r : s.requesters()) term.value_of.push_back(r.requester);
      double costs = 0.0;
      for (const auto& e : result.allocation.selected_c) costs += e.weight;
      term.discount = b;
      term.constant = -costs - b;
      s.add_agent(std::move(term));
      return s;
    }
  }
  throw Error(ErrorKind::InvalidInput, "unknown payment rule");
}

}  // namespace

UtilityBreakdown expected_utility_breakdown(const ReportProfile& truth, const TrustModel& model, AgentId agent,
                                            const ReportProfile& reported, const DiscountPolicy& policy,
                                            PaymentRule rule, const SolveOptions& options) {
  const auto result = gtbm_allocate(reported, model, options);
  const auto schedule = schedule_for(rule, reported, model, result, policy, agent, options);

  std::optional<EqosMatrix> own_eqos;
  if (const auto* m = truth.eqos_of(agent)) own_eqos = *m;
  const auto mixed = build_trust_table(model, reported, own_eqos);

  UtilityBreakdown u;
  for (const auto& e : result.allocation.selected_v) {
    if (e.atom.requester != agent) continue;
    const auto* vm = truth.valuation_of(agent);
    if (vm != nullptr) u.own_value = hyperedge_weight(e.atom, e.cover, *vm, mixed);
  }
  for (const auto& e : result.allocation.selected_c) {
    if (e.atom.performer != agent) continue;
    bool found = false;
    for (const auto& b : truth.bids) {
      if (b.performer == agent && b.bundle == e.atom.bundle) {
        u.own_cost += b.cost;
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorKind::Precondition, "reported bid bundle absent from the true type");
  }
  u.expected_payment = schedule.expected_payment(agent, mixed);
  u.utility = u.own_value - u.own_cost + u.expected_payment;
  return u;
}

double expected_utility(const ReportProfile& truth, const TrustModel& model, AgentId agent,
                        const ReportProfile& reported, const DiscountPolicy& policy, PaymentRule rule,
                        const SolveOptions& options) {
  return expected_utility_breakdown(truth, model, agent, reported, policy, rule, options).utility;
}

std::string Misreport::describe() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "cost x" << cost_scale << ", value x" << value_scale << ", eqos {";
  bool first = true;
  for (const auto& [key, v] : eqos.entries()) {
    if (!first) os << ", ";
    os << '(' << key.first.index << ',' << key.second.index << ")=" << v;
    first = false;
  }
  os << '}';
  return os.str();
}

ReportProfile apply_misreport(const ReportProfile& truth, AgentId agent, const Misreport& m) {
  ReportProfile r = truth;
  if (auto* own = r.eqos_of(agent)) *own = m.eqos;
  for (auto& b : r.bids) {
    if (b.performer == agent) b.cost *= m.cost_scale;
  }
  if (auto* vm = r.valuation_of(agent)) vm->scale(m.value_scale);
  return r;
}

namespace {

std::vector<double> linspace(double lo, double hi, int steps) {
  std::vector<double> out;
  if (steps <= 1) return {lo};
  for (int k = 0; k < steps; ++k) out.push_back(lo + (hi - lo) * k / (steps - 1));
  return out;
}

struct MisreportSpace {
  std::vector<EqosMatrix::Key> coords;
  std::vector<double> eqos_grid;
  std::vector<double> cost_grid;
  std::vector<double> value_grid;
};

std::vector<Misreport> enumerate_misreports(const ReportProfile& truth, AgentId agent, const AuditConfig& cfg,
                                            bool& full_grid) {
  MisreportSpace sp;
  const EqosMatrix base = truth.eqos_of(agent) ? *truth.eqos_of(agent) : EqosMatrix(agent);
  for (const auto& [key, v] : base.entries()) sp.coords.push_back(key);
  sp.eqos_grid = linspace(truth.eqos_domain.lo, truth.eqos_domain.hi, cfg.eqos_steps);
  const bool bids = !truth.bids_of(agent).empty();
  const bool values = truth.valuation_of(agent) != nullptr;
  sp.cost_grid = bids ? linspace(cfg.scale_lo, cfg.scale_hi, cfg.scaling_steps) : std::vector<double>{1.0};
  sp.value_grid = values ? linspace(cfg.scale_lo, cfg.scale_hi, cfg.scaling_steps) : std::vector<double>{1.0};

  double total = static_cast<double>(sp.cost_grid.size() * sp.value_grid.size());
  for (std::size_t k = 0; k < sp.coords.size(); ++k) total *= static_cast<double>(sp.eqos_grid.size());

  std::vector<Misreport> out;
  full_grid = total <= static_cast<double>(cfg.max_full_grid);
  if (full_grid) {
    std::vector<std::size_t> pos(sp.coords.size(), 0);
    while (true) {
      EqosMatrix m(agent);
      for (std::size_t k = 0; k < sp.coords.size(); ++k) {
        m.set(sp.coords[k].first, sp.coords[k].second, sp.eqos_grid[pos[k]]);
      }
      for (double cs : sp.cost_grid) {
        for (double vs : sp.value_grid) out.push_back({m, cs, vs});
      }
      std::size_t k = 0;
      while (k < pos.size() && ++pos[k] == sp.eqos_grid.size()) pos[k++] = 0;
      if (k == pos.size()) break;
    }
  } else {
    for (const auto& key : sp.coords) {
      for (double g : sp.eqos_grid) {
        EqosMatrix m = base;
        m.set(key.first, key.second, g);
        out.push_back({m, 1.0, 1.0});
      }
    }
    for (double cs : sp.cost_grid) {
      for (double vs : sp.value_grid) out.push_back({base, cs, vs});
    }
  }
  std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + agent.index);
  const double lo = truth.eqos_domain.lo;
  const double hi = truth.eqos_domain.hi;
  for (int s = 0; s < cfg.samples; ++s) {
    EqosMatrix m(agent);
    for (const auto& key : sp.coords) m.set(key.first, key.second, lo + (hi - lo) * uniform_draw(rng));
    const double cs = bids ? cfg.scale_lo + (cfg.scale_hi - cfg.scale_lo) * uniform_draw(rng) : 1.0;
    const double vs = values ? cfg.scale_lo + (cfg.scale_hi - cfg.scale_lo) * uniform_draw(rng) : 1.0;
    out.push_back({m, cs, vs});
  }
  return out;
}

std::vector<AgentId> audited_agents(const ReportProfile& profile, PaymentRule rule) {
  std::vector<AgentId> out;
  std::optional<AgentId> requester;
  if (single_task_rule(rule)) requester = single_task_shape(profile).requester;
  for (auto a : profile.agents()) {
    if (requester && a == *requester) continue;
    out.push_back(a);
  }
  return out;
}

}  // namespace

AuditReport audit_incentive_compatibility(const ReportProfile& truth, const TrustModel& model,
                                          const DiscountPolicy& policy, const AuditConfig& config) {
  if (config.eqos_steps < 2 || config.scaling_steps < 2 || !(config.epsilon > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "audit needs at least 2 grid steps and a positive tolerance");
  }
  require_valid(truth);
  AuditReport report;
  report.kind = "incentive-compatibility";
  report.rule = config.rule;
  report.policy = policy;
  report.epsilon = config.epsilon;
  for (auto agent : audited_agents(truth, config.rule)) {
    AgentAudit a;
    a.agent = agent;
    a.truthful_utility = expected_utility(truth, model, agent, truth, policy, config.rule);
    a.min_utility = a.truthful_utility;
    bool full = true;
    for (const auto& m : enumerate_misreports(truth, agent, config, full)) {
      const auto reported = apply_misreport(truth, agent, m);
      const double u = expected_utility(truth, model, agent, reported, policy, config.rule);
      ++a.evaluated;
      a.min_utility = std::min(a.min_utility, u);
      const double gain = u - a.truthful_utility;
      if (gain > a.max_gain) {
        a.max_gain = gain;
        if (gain > config.epsilon) a.best_deviation = m;
      }
    }
    report.full_grid = report.full_grid && full;
    if (a.max_gain > config.epsilon) report.pass = false;
    report.agents.push_back(std::move(a));
  }
  report.note = report.pass ? "no profitable misreport at this grid resolution"
                            : "profitable misreport found";
  return report;
}

AuditReport audit_individual_rationality(const ReportProfile& profile, const TrustModel& model,
                                         const DiscountPolicy& policy, const AuditConfig& config) {
  require_valid(profile);
  AuditReport report;
  report.kind = "individual-rationality";
  report.rule = config.rule;
  report.policy = policy;
  report.epsilon = config.epsilon;

  // True-type profiles: every EQOS entry over the given values, or the profile itself.
  std::vector<std::pair<AgentId, EqosMatrix::Key>> coords;
  for (const auto& m : profile.eqos) {
    for (const auto& [key, v] : m.entries()) coords.push_back({m.reporter(), key});
  }
  std::vector<ReportProfile> types;
  std::vector<std::string> labels;
  auto make = [&](const std::vector<double>& values) {
    ReportProfile p = profile;
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    for (std::size_t k = 0; k < coords.size(); ++k) {
      p.eqos_of(coords[k].first)->set(coords[k].second.first, coords[k].second.second, values[k]);
      os << (k ? " " : "") << values[k];
    }
    types.push_back(std::move(p));
    labels.push_back(os.str());
  };
  const auto& vals = config.true_type_values;
  if (vals.empty()) {
    types.push_back(profile);
    labels.push_back("as given");
  } else {
    double total = 1.0;
    for (std::size_t k = 0; k < coords.size(); ++k) total *= static_cast<double>(vals.size());
    if (total <= static_cast<double>(config.max_full_grid)) {
      std::vector<std::size_t> pos(coords.size(), 0);
      while (true) {
        std::vector<double> v(coords.size());
        for (std::size_t k = 0; k < coords.size(); ++k) v[k] = vals[pos[k]];
        make(v);
        std::size_t k = 0;
        while (k < pos.size() && ++pos[k] == vals.size()) pos[k++] = 0;
        if (k == pos.size()) break;
      }
    } else {
      report.full_grid = false;
      std::mt19937_64 rng(config.seed);
      for (int s = 0; s < std::max(1, config.samples); ++s) {
        std::vector<double> v(coords.size());
        for (auto& x : v) x = vals[static_cast<std::size_t>(uniform_draw(rng) * vals.size())];
        make(v);
      }
    }
  }

  const auto agents = audited_agents(profile, config.rule);
  for (auto agent : agents) {
    AgentAudit a;
    a.agent = agent;
    a.min_utility = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < types.size(); ++t) {
      const double u = expected_utility(types[t], model, agent, types[t], policy, config.rule);
      if (t == 0) a.truthful_utility = u;
      ++a.evaluated;
      if (u < a.min_utility) {
        a.min_utility = u;
        a.worst_type = labels[t];
      }
    }
    if (a.min_utility < -config.epsilon) report.pass = false;
    report.agents.push_back(std::move(a));
  }
  report.note = report.pass ? "every truthful expected utility is non-negative"
                            : "some true type expects a loss from participating";
  return report;
}

std::string format_audit_table(const AuditReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << report.kind << " audit, rule " << to_string(report.rule) << ", policy " << to_string(report.policy) << '\n';
  os << std::left << std::setw(7) << "agent" << std::right << std::setw(12) << "truthful" << std::setw(12)
     << "max_gain" << std::setw(12) << "min_util" << std::setw(10) << "points" << '\n';
  for (const auto& a : report.agents) {
    os << std::left << std::setw(7) << a.agent.index << std::right << std::setw(12) << a.truthful_utility
       << std::setw(12) << a.max_gain << std::setw(12) << a.min_utility << std::setw(10) << a.evaluated << '\n';
    if (a.best_deviation) os << "  best deviation: " << a.best_deviation->describe() << '\n';
    if (report.kind == "individual-rationality" && !a.worst_type.empty()) {
      os << "  worst type: " << a.worst_type << '\n';
    }
  }
  os << (report.pass ? "PASS" : "FAIL") << ": " << report.note;
  if (!report.full_grid) os << " (sampled, not the full grid)";
  os << '\n';
  return os.str();
}

bool SettlementStats::within(double k) const {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const double se = stddev[i] / std::sqrt(static_cast<double>(samples));
    if (std::abs(mean[i] - expected[i]) > std::max(k * se, 1e-9 * (1.0 + std::abs(expected[i])))) return false;
  }
  return true;
}

SettlementStats monte_carlo_settlement(const PaymentSchedule& schedule, const TrustTable& table,
                                       std::size_t samples, std::uint64_t seed) {
  SettlementStats st;
  st.samples = samples;
  for (const auto& t : schedule.agents()) {
    st.agents.push_back(t.agent);
    st.expected.push_back(schedule.expected_payment(t.agent, table));
  }
  const auto probs = assignment_probabilities(schedule, table);
  std::mt19937_64 rng(seed);
  const std::size_t n = st.agents.size();
  std::vector<double> sum(n, 0.0);
  std::vector<double> sum_sq(n, 0.0);
  // Shift by the expectation so the variance sum stays well conditioned.
  for (std::size_t s = 0; s < samples; ++s) {
    const auto mask = sample_mask(probs, rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = schedule.payment(st.agents[i], mask) - st.expected[i];
      sum[i] += d;
      sum_sq[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double mean_d = samples ? sum[i] / samples : 0.0;
    st.mean.push_back(st.expected[i] + mean_d);
    const double var =
        samples > 1 ? std::max(0.0, (sum_sq[i] - samples * mean_d * mean_d) / static_cast<double>(samples - 1)) : 0.0;
    st.stddev.push_back(std::sqrt(var));
  }
  return st;
}

}  // namespace trustclear
