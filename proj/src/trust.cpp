#include "trustclear/trust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace trustclear {

namespace {

const EqosMatrix* find_matrix(std::span<const EqosMatrix> eqos, AgentId reporter) {
  if (reporter.index < eqos.size() && eqos[reporter.index].reporter() == reporter) return &eqos[reporter.index];
  for (const auto& m : eqos) {
    if (m.reporter() == reporter) return &m;
  }
  return nullptr;
}

std::string pair_str(AgentId performer, TaskId task) {
  return "(agent " + std::to_string(performer.index) + ", task " + std::to_string(task.index) + ")";
}

double lookup(std::span<const EqosMatrix> eqos, AgentId reporter, AgentId performer, TaskId task) {
  const auto* m = find_matrix(eqos, reporter);
  if (m == nullptr) {
    throw Error(ErrorKind::IncompleteEqos, "incomplete EQOS: no matrix from agent " + std::to_string(reporter.index));
  }
  auto v = m->find(performer, task);
  if (!v) {
    throw Error(ErrorKind::IncompleteEqos,
                "incomplete EQOS: agent " + std::to_string(reporter.index) + " lacks " + pair_str(performer, task));
  }
  return *v;
}

}  // namespace

TrustModel TrustModel::weighted_sum(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorKind::InvalidInput, "trust weight outside [0,1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kTolerance) {
    throw Error(ErrorKind::InvalidInput, "trust weights sum to " + std::to_string(sum) + ", expected 1");
  }
  TrustModel m;
  m.kind_ = Kind::WeightedSum;
  m.name_ = "weighted_sum";
  m.weights_ = std::move(weights);
  m.monotone_ = true;
  return m;
}

TrustModel TrustModel::uniform(std::size_t num_agents) {
  if (num_agents == 0) throw Error(ErrorKind::InvalidInput, "uniform trust needs at least one agent");
  return weighted_sum(std::vector<double>(num_agents, 1.0 / static_cast<double>(num_agents)));
}

TrustModel TrustModel::custom(std::string name, Eval eval, bool monotone) {
  TrustModel m;
  m.kind_ = Kind::Custom;
  m.name_ = std::move(name);
  m.eval_ = std::move(eval);
  m.monotone_ = monotone;
  return m;
}

TrustModel TrustModel::self_report() {
  return custom(
      "self_report",
      [](std::span<const EqosMatrix> eqos, AgentId performer, TaskId task) {
        return lookup(eqos, performer, performer, task);
      },
      true);
}

double TrustModel::evaluate(std::span<const EqosMatrix> eqos, AgentId performer, TaskId task) const {
  double p = 0.0;
  if (kind_ == Kind::WeightedSum) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (weights_[l] == 0.0) continue;
      p += weights_[l] * lookup(eqos, AgentId{static_cast<std::uint32_t>(l)}, performer, task);
    }
  } else {
    p = eval_(eqos, performer, task);
  }
  if (!(p >= -kTolerance && p <= 1.0 + kTolerance)) {
    throw Error(ErrorKind::InvalidInput, "trust model '" + name_ + "' returned " + std::to_string(p));
  }
  return std::clamp(p, 0.0, 1.0);
}

TrustModel TrustModel::without_reporter(AgentId reporter) const {
  if (kind_ == Kind::WeightedSum) {
    auto w = weights_;
    if (reporter.index < w.size()) w[reporter.index] = 0.0;
    const double rest = std::accumulate(w.begin(), w.end(), 0.0);
    if (rest <= 0.0) {
      throw Error(ErrorKind::Precondition,
                  "no trust weight left after removing agent " + std::to_string(reporter.index));
    }
    for (auto& x : w) x /= rest;
    return weighted_sum(std::move(w));
  }
  if (name_ == "self_report") return *this;
  auto inner = eval_;
  return custom(
      name_ + "-without-" + std::to_string(reporter.index),
      [inner, reporter](std::span<const EqosMatrix> eqos, AgentId performer, TaskId task) {
        std::vector<EqosMatrix> kept;
        for (const auto& m : eqos) {
          if (m.reporter() != reporter) kept.push_back(m);
        }
        return inner(kept, performer, task);
      },
      monotone_);
}

double weighted_sum_trust(const TrustModel& model, std::span<const EqosMatrix> eqos, AgentId performer,
                          TaskId task) {
  if (model.kind() != TrustModel::Kind::WeightedSum) {
    throw Error(ErrorKind::Precondition, "weighted_sum_trust needs a weighted-sum model");
  }
  return model.evaluate(eqos, performer, task);
}

TrustTable::TrustTable(std::size_t num_agents, std::size_t num_tasks)
    : agents_(num_agents), tasks_(num_tasks), p_(num_agents * num_tasks, std::numeric_limits<double>::quiet_NaN()) {}

std::size_t TrustTable::index(AgentId performer, TaskId task) const {
  return static_cast<std::size_t>(performer.index) * tasks_ + task.index;
}

bool TrustTable::has(AgentId performer, TaskId task) const {
  return performer.index < agents_ && task.index < tasks_ && !std::isnan(p_[index(performer, task)]);
}

double TrustTable::at(AgentId performer, TaskId task) const {
  if (!has(performer, task)) {
    throw Error(ErrorKind::IncompleteTrustTable, "incomplete trust table: no entry for " + pair_str(performer, task));
  }
  return p_[index(performer, task)];
}

void TrustTable::set(AgentId performer, TaskId task, double p) {
  if (performer.index >= agents_ || task.index >= tasks_) {
    throw Error(ErrorKind::InvalidInput, "trust entry " + pair_str(performer, task) + " outside table");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidInput, "trust value outside [0,1]");
  p_[index(performer, task)] = p;
}

bool operator==(const TrustTable& a, const TrustTable& b) {
  if (a.agents_ != b.agents_ || a.tasks_ != b.tasks_) return false;
  for (std::size_t i = 0; i < a.p_.size(); ++i) {
    const bool na = std::isnan(a.p_[i]);
    const bool nb = std::isnan(b.p_[i]);
    if (na != nb || (!na && a.p_[i] != b.p_[i])) return false;
  }
  return true;
}

TrustTable build_trust_table(const TrustModel& model, const ReportProfile& profile,
                             const std::optional<EqosMatrix>& override_matrix) {
  if (model.kind() == TrustModel::Kind::WeightedSum && model.weights().size() != profile.num_agents) {
    throw Error(ErrorKind::ShapeMismatch, "trust model has " + std::to_string(model.weights().size()) +
                                              " weights for " + std::to_string(profile.num_agents) + " agents");
  }
  std::vector<EqosMatrix> eqos = profile.eqos;
  if (override_matrix) {
    auto it = std::find_if(eqos.begin(), eqos.end(),
                           [&](const EqosMatrix& m) { return m.reporter() == override_matrix->reporter(); });
    if (it == eqos.end()) {
      eqos.push_back(*override_matrix);
    } else {
      *it = *override_matrix;
    }
  }
  std::sort(eqos.begin(), eqos.end(),
            [](const EqosMatrix& a, const EqosMatrix& b) { return a.reporter() < b.reporter(); });

  TrustTable table(profile.num_agents, profile.num_tasks);
  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& b : profile.bids) {
    for (auto t : b.bundle.tasks()) pairs.insert({b.performer.index, t.index});
  }
  for (const auto& [perf, task] : pairs) {
    table.set(AgentId{perf}, TaskId{task}, model.evaluate(eqos, AgentId{perf}, TaskId{task}));
  }
  return table;
}

double bundle_completion_trust(const TrustTable& table, AgentId performer, TaskSet done, TaskSet assigned) {
  if (!done.subset_of(assigned)) {
    throw Error(ErrorKind::Precondition, "completed set " + to_string(done) + " is not within " + to_string(assigned));
  }
  double prob = 1.0;
  for (auto t : assigned.tasks()) {
    const double p = table.at(performer, t);
    prob *= done.contains(t) ? p : 1.0 - p;
  }
  return prob;
}

double allocation_completion_trust(const TrustTable& table, AgentId requester, std::span<const Assignment> done,
                                   std::span<const Assignment> assigned) {
  for (const auto& a : assigned) {
    if (a.requester != requester) throw Error(ErrorKind::Precondition, "assignment targets another requester");
  }
  for (const auto& d : done) {
    if (std::find(assigned.begin(), assigned.end(), d) == assigned.end()) {
      throw Error(ErrorKind::Precondition, "completed assignment was not assigned");
    }
  }
  double prob = 1.0;
  for (const auto& a : assigned) {
    const double p = table.at(a.performer, a.task);
    const bool ok = std::find(done.begin(), done.end(), a) != done.end();
    prob *= ok ? p : 1.0 - p;
  }
  return prob;
}

bool spot_check_monotone(const TrustModel& model, const ReportProfile& profile, std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto base = build_trust_table(model, profile);
  for (int t = 0; t < trials; ++t) {
    ReportProfile bumped = profile;
    for (auto& m : bumped.eqos) {
      for (const auto& [key, v] : m.entries()) {
        if (unit(rng) < 0.5) m.set(key.first, key.second, v + (1.0 - v) * unit(rng));
      }
    }
    const auto after = build_trust_table(model, bumped);
    for (std::uint32_t a = 0; a < profile.num_agents; ++a) {
      for (std::uint32_t k = 0; k < profile.num_tasks; ++k) {
        if (base.has(AgentId{a}, TaskId{k}) && after.at(AgentId{a}, TaskId{k}) < base.at(AgentId{a}, TaskId{k}) - kTolerance) {
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace trustclear
