#include "trustclear/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

namespace trustclear {

TaskSet::TaskSet(std::initializer_list<std::uint32_t> tasks) {
  for (auto t : tasks) insert(TaskId{t});
}

TaskSet TaskSet::of(std::span<const TaskId> tasks) {
  TaskSet s;
  for (auto t : tasks) s.insert(t);
  return s;
}

void TaskSet::insert(TaskId t) {
  if (t.index >= kCapacity) {
    throw Error(ErrorKind::InvalidInput, "task index " + std::to_string(t.index) + " exceeds 63");
  }
  bits_ |= std::uint64_t{1} << t.index;
}

std::size_t TaskSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<TaskId> TaskSet::tasks() const {
  std::vector<TaskId> out;
  out.reserve(size());
  for (auto b = bits_; b != 0; b &= b - 1) {
    out.push_back(TaskId{static_cast<std::uint32_t>(std::countr_zero(b))});
  }
  return out;
}

bool lex_less(TaskSet a, TaskSet b) {
  auto x = a.tasks();
  auto y = b.tasks();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

std::string to_string(TaskSet s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (auto t : s.tasks()) {
    if (!first) os << ',';
    os << t.index;
    first = false;
  }
  os << '}';
  return os.str();
}

double ValuationMap::value(TaskSet subset) const {
  for (const auto& e : entries_) {
    if (e.bundle == subset) return e.value;
  }
  return 0.0;
}

bool ValuationMap::has(TaskSet bundle) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.bundle == bundle; });
}

std::vector<ValuationAtom> ValuationMap::atoms() const {
  std::vector<ValuationAtom> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({requester_, e.bundle, e.value});
  std::stable_sort(out.begin(), out.end(),
                   [](const ValuationAtom& a, const ValuationAtom& b) { return lex_less(a.bundle, b.bundle); });
  return out;
}

void ValuationMap::scale(double factor) {
  for (auto& e : entries_) e.value *= factor;
}

bool ValuationMap::subset_monotone() const {
  for (const auto& top : entries_) {
    if (top.bundle.size() > kMaxBundleSize) return false;
    const auto tasks = top.bundle.tasks();
    const std::size_t k = tasks.size();
    const std::uint32_t full = (1u << k) - 1;
    std::vector<double> v(std::size_t{1} << k);
    for (std::uint32_t m = 0; m <= full; ++m) {
      TaskSet s;
      for (std::size_t b = 0; b < k; ++b) {
        if (m & (1u << b)) s.insert(tasks[b]);
      }
      v[m] = value(s);
    }
    for (std::uint32_t m = 0; m <= full; ++m) {
      for (std::size_t b = 0; b < k; ++b) {
        if (!(m & (1u << b)) && v[m | (1u << b)] < v[m] - kTolerance) return false;
      }
    }
  }
  return true;
}

bool operator==(const ValuationMap& a, const ValuationMap& b) {
  if (a.requester_ != b.requester_ || a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].bundle != b.entries_[i].bundle || a.entries_[i].value != b.entries_[i].value) return false;
  }
  return true;
}

std::optional<double> EqosMatrix::find(AgentId performer, TaskId task) const {
  auto it = entries_.find({performer, task});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<AgentId> ReportProfile::agents() const {
  std::vector<AgentId> out(num_agents);
  for (std::size_t i = 0; i < num_agents; ++i) out[i] = AgentId{static_cast<std::uint32_t>(i)};
  return out;
}

std::vector<TaskId> ReportProfile::tasks() const {
  std::vector<TaskId> out(num_tasks);
  for (std::size_t i = 0; i < num_tasks; ++i) out[i] = TaskId{static_cast<std::uint32_t>(i)};
  return out;
}

const EqosMatrix* ReportProfile::eqos_of(AgentId reporter) const {
  if (reporter.index < eqos.size() && eqos[reporter.index].reporter() == reporter) return &eqos[reporter.index];
  for (const auto& m : eqos) {
    if (m.reporter() == reporter) return &m;
  }
  return nullptr;
}

EqosMatrix* ReportProfile::eqos_of(AgentId reporter) {
  return const_cast<EqosMatrix*>(std::as_const(*this).eqos_of(reporter));
}

const ValuationMap* ReportProfile::valuation_of(AgentId requester) const {
  for (const auto& v : valuations) {
    if (v.requester() == requester) return &v;
  }
  return nullptr;
}

ValuationMap* ReportProfile::valuation_of(AgentId requester) {
  return const_cast<ValuationMap*>(std::as_const(*this).valuation_of(requester));
}

std::vector<BidAtom> ReportProfile::bids_of(AgentId performer) const {
  std::vector<BidAtom> out;
  for (const auto& b : bids) {
    if (b.performer == performer) out.push_back(b);
  }
  return out;
}

void ReportProfile::normalize() {
  std::stable_sort(valuations.begin(), valuations.end(),
                   [](const ValuationMap& a, const ValuationMap& b) { return a.requester() < b.requester(); });
  for (auto& v : valuations) {
    std::stable_sort(v.entries().begin(), v.entries().end(),
                     [](const auto& a, const auto& b) { return lex_less(a.bundle, b.bundle); });
  }
  std::stable_sort(bids.begin(), bids.end(), [](const BidAtom& a, const BidAtom& b) {
    if (a.performer != b.performer) return a.performer < b.performer;
    return lex_less(a.bundle, b.bundle);
  });
  std::stable_sort(eqos.begin(), eqos.end(),
                   [](const EqosMatrix& a, const EqosMatrix& b) { return a.reporter() < b.reporter(); });
}

bool operator==(const ReportProfile& a, const ReportProfile& b) {
  if (a.num_agents != b.num_agents || a.num_tasks != b.num_tasks || a.free_disposal != b.free_disposal ||
      !(a.eqos_domain == b.eqos_domain) || a.valuations != b.valuations || a.eqos != b.eqos ||
      a.bids.size() != b.bids.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.bids.size(); ++i) {
    if (a.bids[i].performer != b.bids[i].performer || a.bids[i].bundle != b.bids[i].bundle ||
        a.bids[i].cost != b.bids[i].cost) {
      return false;
    }
  }
  return true;
}

namespace {

std::string agent_str(AgentId a) { return "agent " + std::to_string(a.index); }

class Collector {
 public:
  void add(std::string kind, std::string detail) { out_.push_back({std::move(kind), std::move(detail)}); }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

void check_bundle(Collector& c, const ReportProfile& p, TaskSet bundle, const std::string& where) {
  if (bundle.empty()) c.add("empty bundle", where);
  for (auto t : bundle.tasks()) {
    if (t.index >= p.num_tasks) c.add("unknown task", where + " references task " + std::to_string(t.index));
  }
  if (bundle.size() > kMaxBundleSize) c.add("bundle too large", where + " has " + std::to_string(bundle.size()) + " tasks");
}

}  // namespace

std::vector<Violation> validate_report_profile(const ReportProfile& p) {
  Collector c;
  if (p.num_agents == 0) c.add("empty instance", "no agents");
  if (p.num_tasks > TaskSet::kCapacity) c.add("too many tasks", std::to_string(p.num_tasks) + " tasks, limit 64");
  const auto& dom = p.eqos_domain;
  if (!(dom.lo >= 0.0 && dom.lo <= dom.hi && dom.hi <= 1.0)) {
    c.add("invalid EQOS domain", "[" + std::to_string(dom.lo) + ", " + std::to_string(dom.hi) + "]");
  }

  std::set<std::uint32_t> requesters;
  for (const auto& vm : p.valuations) {
    const auto who = agent_str(vm.requester());
    if (vm.requester().index >= p.num_agents) c.add("unknown agent", "valuation from " + who);
    if (!requesters.insert(vm.requester().index).second) c.add("duplicate valuation map", who);
    std::set<std::uint64_t> seen;
    for (const auto& e : vm.entries()) {
      const auto where = "valuation " + to_string(e.bundle) + " of " + who;
      check_bundle(c, p, e.bundle, where);
      if (!(e.value >= 0.0) || !std::isfinite(e.value)) c.add("negative value", where);
      if (!seen.insert(e.bundle.bits()).second) c.add("duplicate bundle", where);
    }
  }

  std::map<std::uint32_t, std::set<std::uint64_t>> bid_bundles;
  std::set<std::pair<std::uint32_t, std::uint32_t>> bid_pairs;
  for (const auto& b : p.bids) {
    const auto who = agent_str(b.performer);
    const auto where = "bid " + to_string(b.bundle) + " of " + who;
    if (b.performer.index >= p.num_agents) c.add("unknown agent", where);
    check_bundle(c, p, b.bundle, where);
    if (!(b.cost >= 0.0) || !std::isfinite(b.cost)) c.add("negative cost", where);
    if (!bid_bundles[b.performer.index].insert(b.bundle.bits()).second) c.add("duplicate bundle", where);
    for (auto t : b.bundle.tasks()) bid_pairs.insert({b.performer.index, t.index});
  }

  std::set<std::uint32_t> reporters;
  for (const auto& m : p.eqos) {
    const auto who = agent_str(m.reporter());
    if (m.reporter().index >= p.num_agents) c.add("unknown agent", "EQOS matrix of " + who);
    if (!reporters.insert(m.reporter().index).second) c.add("duplicate EQOS matrix", who);
    for (const auto& [key, value] : m.entries()) {
      const auto where = "EQOS of " + who + " about agent " + std::to_string(key.first.index) + " on task " +
                         std::to_string(key.second.index);
      if (key.first.index >= p.num_agents) c.add("unknown agent", where);
      if (key.second.index >= p.num_tasks) c.add("unknown task", where);
      if (!(value >= 0.0 && value <= 1.0)) {
        c.add("EQOS out of range", where + " = " + std::to_string(value));
      } else if (value < dom.lo - kTolerance || value > dom.hi + kTolerance) {
        c.add("EQOS outside domain", where + " = " + std::to_string(value));
      }
    }
    for (const auto& [perf, task] : bid_pairs) {
      if (!m.find(AgentId{perf}, TaskId{task})) {
        c.add("missing EQOS entry", who + " lacks (agent " + std::to_string(perf) + ", task " + std::to_string(task) + ")");
      }
    }
  }
  for (std::uint32_t a = 0; a < p.num_agents; ++a) {
    if (!reporters.count(a)) c.add("missing EQOS matrix", agent_str(AgentId{a}));
  }
  return c.take();
}

}  // namespace trustclear
