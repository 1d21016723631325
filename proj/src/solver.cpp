#include "trustclear/solver.hpp"

#include <algorithm>
#include <bit>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <thread>

namespace trustclear {

bool EdgeFilter::excludes(AgentId a) const { return std::find(excluded.begin(), excluded.end(), a) != excluded.end(); }

bool EdgeFilter::excludes_v(const ValuationHyperedge& e) const {
  if (excluded.empty()) return false;
  if (excludes(e.atom.requester)) return true;
  return std::any_of(e.cover.begin(), e.cover.end(), [&](const TpbNode& n) { return excludes(n.performer); });
}

bool EdgeFilter::excludes_c(const BidHyperedge& e) const { return excludes(e.atom.performer); }

bool tie_break_less(const Allocation& a, const Allocation& b) {
  const auto av = a.v_ids();
  const auto bv = b.v_ids();
  if (av != bv) return std::lexicographical_compare(av.begin(), av.end(), bv.begin(), bv.end());
  const auto ac = a.c_ids();
  const auto bc = b.c_ids();
  if (ac.size() != bc.size()) return ac.size() < bc.size();
  return std::lexicographical_compare(ac.begin(), ac.end(), bc.begin(), bc.end());
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("TRUSTCLEAR_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBoundScanCap = 64;
constexpr std::size_t kParallelMinEdges = 4000;
constexpr std::uint64_t kPassBudget = 200000;
constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();
constexpr std::size_t kMemoBytes = std::size_t{512} << 20;

struct LocalBid {
  TaskSet bundle;
  double cost;
  std::size_t id;
  /// Priced tasks of the bundle minus its cost.
  double gain = 0.0;
};

struct CostChoice {
  double cost = kInf;
  std::size_t id = 0;
};

struct Performer {
  AgentId agent;
  std::vector<LocalBid> bids;
  /// max(0, best gain) when the performer has no committed task.
  double idle_gain = 0.0;

  CostChoice min_superset(TaskSet used) const {
    CostChoice best;
    for (const auto& b : bids) {
      if (used.subset_of(b.bundle) && b.cost < best.cost) best = {b.cost, b.id};
    }
    return best;
  }

  CostChoice exact(TaskSet used) const {
    for (const auto& b : bids) {
      if (b.bundle == used) return {b.cost, b.id};
    }
    return {};
  }

  double best_gain(TaskSet used) const {
    if (used.empty()) return idle_gain;
    double best = -kInf;
    for (const auto& b : bids) {
      if (used.subset_of(b.bundle)) best = std::max(best, b.gain);
    }
    return best;
  }
};

struct Usage {
  std::uint32_t perf;
  TaskSet tasks;
};

struct Edge {
  std::size_t id;
  double weight;
  /// Weight minus the prices of the covered nodes.
  double priced = 0.0;
  std::vector<Usage> use;
};

/// Search input. The bound relaxes "every valued node is covered by a selected
/// bid" with non-negative prices on (performer, task) nodes: requesters then pick
/// their best priced edge and performers their best priced bid independently.
struct Prepared {
  bool free_disposal = false;
  std::size_t num_tasks = 0;
  std::vector<Performer> perfs;
  /// Edges per requester, priced weight descending.
  std::vector<std::vector<Edge>> req_edges;
  /// Positions into req_edges, weight descending.
  std::vector<std::vector<std::uint32_t>> by_weight;
  std::vector<double> price;
  std::size_t total_edges = 0;
  /// Relaxation value at the root with the fitted prices.
  double root_bound = 0.0;
  /// Value of some feasible allocation.
  double lower = 0.0;

  std::size_t node(std::uint32_t perf, TaskId t) const { return perf * num_tasks + t.index; }

  double price_of(std::uint32_t perf, TaskSet tasks) const {
    double sum = 0.0;
    for (auto t : tasks.tasks()) sum += price[node(perf, t)];
    return sum;
  }

  double price_of(const Edge& e) const {
    double sum = 0.0;
    for (const auto& u : e.use) sum += price_of(u.perf, u.tasks);
    return sum;
  }

  void apply_prices() {
    for (std::uint32_t k = 0; k < perfs.size(); ++k) {
      auto& perf = perfs[k];
      perf.idle_gain = 0.0;
      for (auto& b : perf.bids) {
        b.gain = price_of(k, b.bundle) - b.cost;
        perf.idle_gain = std::max(perf.idle_gain, b.gain);
      }
    }
    for (auto& edges : req_edges) {
      for (auto& e : edges) e.priced = e.weight - price_of(e);
    }
  }

  /// Sorts for the search and recomputes the root bound.
  void order() {
    total_edges = 0;
    for (auto& edges : req_edges) {
      std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.priced > b.priced; });
      total_edges += edges.size();
    }
    // Requesters with the most valuable options are decided first.
    std::stable_sort(req_edges.begin(), req_edges.end(),
                     [](const auto& a, const auto& b) { return a.front().priced > b.front().priced; });
    by_weight.clear();
    for (const auto& edges : req_edges) {
      std::vector<std::uint32_t> idx(edges.size());
      for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return edges[a].weight > edges[b].weight; });
      by_weight.push_back(std::move(idx));
    }
    root_bound = 0.0;
    for (const auto& perf : perfs) root_bound += perf.idle_gain;
    for (const auto& edges : req_edges) root_bound += std::max(0.0, edges.front().priced);
  }
};

/// Subgradient descent on the relaxation, starting from the current prices.
/// Any non-negative prices give a valid bound; tuning only tightens it. Returns
/// the best feasible value seen (at least `lower`).
double fit_prices(Prepared& p, double lower) {
  const std::size_t n = p.perfs.size() * p.num_tasks;
  p.price.resize(n, 0.0);
  if (n == 0 || p.req_edges.empty()) {
    p.apply_prices();
    return lower;
  }
  std::vector<int> slack(n, 0);
  auto dual = [&]() {
    p.apply_prices();
    std::fill(slack.begin(), slack.end(), 0);
    double d = 0.0;
    for (const auto& edges : p.req_edges) {
      const Edge* arg = nullptr;
      for (const auto& e : edges) {
        if (e.priced > 0.0 && (arg == nullptr || e.priced > arg->priced)) arg = &e;
      }
      if (arg == nullptr) continue;
      d += arg->priced;
      for (const auto& u : arg->use) {
        for (auto t : u.tasks.tasks()) --slack[p.node(u.perf, t)];
      }
    }
    for (std::uint32_t k = 0; k < p.perfs.size(); ++k) {
      const LocalBid* arg = nullptr;
      for (const auto& b : p.perfs[k].bids) {
        if (b.gain > 0.0 && (arg == nullptr || b.gain > arg->gain)) arg = &b;
      }
      if (arg == nullptr) continue;
      d += arg->gain;
      for (auto t : arg->bundle.tasks()) ++slack[p.node(k, t)];
    }
    return d;
  };
  // Greedy completion under the current prices; its value is a lower bound
  // that sets the step length.
  std::vector<TaskSet> used(p.perfs.size());
  std::vector<std::size_t> order(p.req_edges.size());
  auto greedy = [&]() {
    std::fill(used.begin(), used.end(), TaskSet{});
    for (std::size_t r = 0; r < order.size(); ++r) order[r] = r;
    auto top = [&](std::size_t r) {
      double v = 0.0;
      for (const auto& e : p.req_edges[r]) v = std::max(v, e.priced);
      return v;
    };
    std::vector<double> tops(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) tops[r] = top(r);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tops[a] > tops[b]; });
    double weight = 0.0;
    for (auto r : order) {
      const Edge* arg = nullptr;
      for (const auto& e : p.req_edges[r]) {
        if (e.priced <= 0.0 || (arg != nullptr && e.priced <= arg->priced)) continue;
        bool ok = true;
        for (const auto& u : e.use) {
          if (!(used[u.perf] & u.tasks).empty() ||
              !std::isfinite(p.perfs[u.perf].min_superset(used[u.perf] | u.tasks).cost)) {
            ok = false;
            break;
          }
        }
        if (ok) arg = &e;
      }
      if (arg == nullptr) continue;
      weight += arg->weight;
      for (const auto& u : arg->use) used[u.perf] = used[u.perf] | u.tasks;
    }
    double cost = 0.0;
    for (std::size_t k = 0; k < p.perfs.size(); ++k) {
      if (used[k].empty()) continue;
      cost += p.free_disposal ? p.perfs[k].min_superset(used[k]).cost : p.perfs[k].exact(used[k]).cost;
    }
    return std::isfinite(cost) ? weight - cost : 0.0;
  };
  double best = dual();
  lower = std::max({lower, 0.0, greedy()});
  std::vector<double> best_price = p.price;
  double mu = 1.0;
  int stale = 0;
  const int iterations = p.total_edges > 200000 ? 80 : 250;
  for (int it = 0; it < iterations && mu > 1e-4 && best - lower > kTolerance; ++it) {
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (slack[k] < 0 || p.price[k] > 0) norm += static_cast<double>(slack[k]) * slack[k];
    }
    if (norm == 0.0) break;
    const double step = mu * (best - lower) / norm;
    for (std::size_t k = 0; k < n; ++k) p.price[k] = std::max(0.0, p.price[k] - step * slack[k]);
    const double d = dual();
    lower = std::max(lower, greedy());
    if (d < best - 1e-12) {
      best = d;
      best_price = p.price;
      stale = 0;
    } else if (++stale >= 10) {
      mu /= 2;
      stale = 0;
      p.price = best_price;
      dual();
    }
  }
  p.price = std::move(best_price);
  p.apply_prices();
  return lower;
}

Prepared prepare(const AllocationHypergraph& graph, bool free_disposal, const EdgeFilter& filter) {
  Prepared p;
  p.free_disposal = free_disposal;
  p.num_tasks = graph.num_tasks;
  std::vector<int> local(graph.num_agents, -1);
  for (std::size_t a = 0; a < graph.c_by_performer.size(); ++a) {
    Performer perf{AgentId{static_cast<std::uint32_t>(a)}, {}};
    for (auto id : graph.c_by_performer[a]) {
      const auto& e = graph.c_edges[id];
      if (filter.excludes_c(e)) continue;
      perf.bids.push_back({e.atom.bundle, e.weight, e.id});
    }
    if (!perf.bids.empty()) {
      local[a] = static_cast<int>(p.perfs.size());
      p.perfs.push_back(std::move(perf));
    }
  }

  for (std::size_t r = 0; r < graph.v_by_requester.size(); ++r) {
    std::vector<Edge> edges;
    for (auto id : graph.v_by_requester[r]) {
      const auto& e = graph.v_edges[id];
      if (filter.excludes_v(e)) continue;
      Edge edge{e.id, e.weight, e.weight, {}};
      bool viable = true;
      for (const auto& n : e.cover) {
        const int k = local[n.performer.index];
        if (k < 0) {
          viable = false;
          break;
        }
        auto it = std::find_if(edge.use.begin(), edge.use.end(),
                               [&](const Usage& u) { return u.perf == static_cast<std::uint32_t>(k); });
        if (it == edge.use.end()) {
          edge.use.push_back({static_cast<std::uint32_t>(k), TaskSet{}});
          it = edge.use.end() - 1;
        }
        it->tasks.insert(n.task);
      }
      if (!viable) continue;
      for (const auto& u : edge.use) {
        if (!std::isfinite(p.perfs[u.perf].min_superset(u.tasks).cost)) viable = false;
      }
      if (viable) edges.push_back(std::move(edge));
    }
    if (edges.empty()) continue;
    p.total_edges += edges.size();
    p.req_edges.push_back(std::move(edges));
  }
  p.lower = fit_prices(p, 0.0);
  p.order();
  return p;
}

/// Drops edges and bids that cannot appear in any allocation worth at least
/// `lower`: forcing one in costs its shortfall against the best option of its
/// owner, which the root bound cannot absorb. Returns whether anything changed.
bool reduce(Prepared& p, double lower) {
  const double floor = lower - kTolerance;
  bool changed = false;
  for (auto& perf : p.perfs) {
    const auto before = perf.bids.size();
    std::erase_if(perf.bids, [&](const LocalBid& b) { return p.root_bound - perf.idle_gain + b.gain < floor; });
    changed |= perf.bids.size() != before;
  }
  for (auto& edges : p.req_edges) {
    const double top = std::max(0.0, edges.front().priced);
    const auto before = edges.size();
    std::erase_if(edges, [&](const Edge& e) {
      if (p.root_bound - top + e.priced < floor) return true;
      return std::any_of(e.use.begin(), e.use.end(), [&](const Usage& u) {
        return !std::isfinite(p.perfs[u.perf].min_superset(u.tasks).cost);
      });
    });
    changed |= edges.size() != before;
  }
  std::erase_if(p.req_edges, [](const auto& edges) { return edges.empty(); });
  return changed;
}

struct Candidate {
  double objective = 0.0;
  std::vector<std::size_t> v_ids;
  std::vector<std::size_t> c_ids;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.v_ids != b.v_ids) {
    return std::lexicographical_compare(a.v_ids.begin(), a.v_ids.end(), b.v_ids.begin(), b.v_ids.end());
  }
  if (a.c_ids.size() != b.c_ids.size()) return a.c_ids.size() < b.c_ids.size();
  return std::lexicographical_compare(a.c_ids.begin(), a.c_ids.end(), b.c_ids.begin(), b.c_ids.end());
}

/// True when `c` should replace `best`.
bool better(const Candidate& c, const Candidate& best) {
  if (c.objective > best.objective + kTolerance) return true;
  if (c.objective < best.objective - kTolerance) return false;
  return candidate_less(c, best);
}

void atomic_max(std::atomic<double>& target, double value) {
  double cur = target.load(std::memory_order_relaxed);
  while (value > cur && !target.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

/// Open-addressing map from packed search states to the best weight seen.
/// Grows up to a memory budget, then stops recording new states.
class StateTable {
 public:
  StateTable(std::size_t words, std::size_t max_bytes)
      : words_(words), max_cap_(std::max<std::size_t>(1024, std::bit_floor(max_bytes / ((words + 1) * 8)))) {}

  bool dominated(const std::uint64_t* key, double weight) {
    if (cap_ == 0) resize(1024);
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (std::size_t w = 0; w < words_; ++w) h = mix(h ^ key[w]);
    for (std::size_t i = h & (cap_ - 1);; i = (i + 1) & (cap_ - 1)) {
      if (std::isnan(weights_[i])) {
        if (size_ * 10 >= cap_ * 7) {
          if (cap_ >= max_cap_) return false;
          resize(cap_ * 2);
          return dominated(key, weight);
        }
        std::copy(key, key + words_, keys_.begin() + static_cast<std::ptrdiff_t>(i * words_));
        weights_[i] = weight;
        ++size_;
        return false;
      }
      if (std::equal(key, key + words_, keys_.begin() + static_cast<std::ptrdiff_t>(i * words_))) {
        if (weight < weights_[i] - kTolerance) return true;
        weights_[i] = std::max(weights_[i], weight);
        return false;
      }
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 29;
    x *= 0x94D049BB133111EBull;
    return x ^ (x >> 32);
  }

  void resize(std::size_t cap) {
    std::vector<std::uint64_t> keys(cap * words_);
    std::vector<double> weights(cap, std::numeric_limits<double>::quiet_NaN());
    keys.swap(keys_);
    weights.swap(weights_);
    const std::size_t old = cap_;
    cap_ = cap;
    size_ = 0;
    for (std::size_t j = 0; j < old; ++j) {
      if (std::isnan(weights[j])) continue;
      const std::uint64_t* key = keys.data() + j * words_;
      std::uint64_t h = 0x9E3779B97F4A7C15ull;
      for (std::size_t w = 0; w < words_; ++w) h = mix(h ^ key[w]);
      std::size_t i = h & (cap_ - 1);
      while (!std::isnan(weights_[i])) i = (i + 1) & (cap_ - 1);
      std::copy(key, key + words_, keys_.begin() + static_cast<std::ptrdiff_t>(i * words_));
      weights_[i] = weights[j];
      ++size_;
    }
  }

  std::size_t words_;
  std::size_t max_cap_;
  std::size_t cap_ = 0;
  std::size_t size_ = 0;
  std::vector<std::uint64_t> keys_;
  std::vector<double> weights_;
};

class Search {
 public:
  /// Subtrees whose bound is below `floor` are skipped even without an incumbent.
  /// The search gives up after `limit` nodes.
  Search(const Prepared& p, std::atomic<double>* shared, bool verify, double floor, std::uint64_t limit,
         std::size_t memo_bytes)
      : p_(p),
        shared_(shared),
        verify_(verify),
        floor_(floor),
        limit_(limit),
        used_(p.perfs.size()),
        sup_(p.perfs.size(), 0.0),
        key_(2 + p.perfs.size() * p.num_tasks / 64),
        states_(key_.size(), memo_bytes) {}

  /// Tries the given choice for the first requester (-1 = none), then searches the rest.
  void run_root_choice(int choice) {
    if (p_.req_edges.empty()) {
      leaf(0.0);
      return;
    }
    if (choice < 0) {
      dfs(1, 0.0, 0.0);
      return;
    }
    const auto& e = p_.req_edges[0][static_cast<std::size_t>(choice)];
    double sup_total = 0.0;
    std::vector<std::pair<std::uint32_t, double>> undo;
    if (apply(e, sup_total, undo)) {
      stack_.push_back(e.id);
      dfs(1, e.weight, sup_total);
      stack_.pop_back();
    }
    revert(e, undo);
  }

  void run_all() {
    if (p_.req_edges.empty()) {
      leaf(0.0);
      return;
    }
    dfs(0, 0.0, 0.0);
  }

  const Candidate& best() const { return best_; }
  std::uint64_t nodes() const { return nodes_; }
  std::uint64_t violations() const { return violations_; }
  bool aborted() const { return aborted_; }

 private:
  bool apply(const Edge& e, double& sup_total, std::vector<std::pair<std::uint32_t, double>>& undo) {
    bool ok = true;
    for (const auto& u : e.use) {
      if (!(used_[u.perf] & u.tasks).empty()) return false;
    }
    committed_priced_ += e.priced;
    for (const auto& u : e.use) {
      undo.push_back({u.perf, sup_[u.perf]});
      used_[u.perf] = used_[u.perf] | u.tasks;
      const double c = p_.perfs[u.perf].min_superset(used_[u.perf]).cost;
      sup_total += c - sup_[u.perf];
      sup_[u.perf] = c;
      if (!std::isfinite(c)) ok = false;
    }
    return ok;
  }

  void revert(const Edge& e, const std::vector<std::pair<std::uint32_t, double>>& undo) {
    if (undo.empty()) return;
    committed_priced_ -= e.priced;
    for (const auto& u : e.use) used_[u.perf] = used_[u.perf] - u.tasks;
    for (auto it = undo.rbegin(); it != undo.rend(); ++it) sup_[it->first] = it->second;
  }

  bool compatible(const Edge& e) const {
    for (const auto& u : e.use) {
      if (!(used_[u.perf] & u.tasks).empty()) return false;
    }
    return true;
  }

  double best_remaining(std::size_t r, bool priced) const {
    const auto& edges = p_.req_edges[r];
    const auto& order = p_.by_weight[r];
    const std::size_t n = edges.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Edge& e = priced ? edges[i] : edges[order[i]];
      const double w = priced ? e.priced : e.weight;
      if (w <= 0.0) return 0.0;
      if (i == kBoundScanCap) return w;
      if (compatible(e)) return w;
    }
    return 0.0;
  }

  struct Bound {
    double value;
    /// Priced bound without requester k's term. No child choosing edge e can
    /// exceed rest + e.priced, and the "none" child cannot exceed rest.
    double rest;
  };

  Bound bound(std::size_t k, double weight, double sup_total) const {
    double priced = committed_priced_;
    for (std::size_t q = 0; q < p_.perfs.size(); ++q) priced += p_.perfs[q].best_gain(used_[q]);
    double rem_weight = 0.0;
    double own = 0.0;
    for (std::size_t r = k; r < p_.req_edges.size(); ++r) {
      const double v = best_remaining(r, true);
      if (r == k) own = v;
      priced += v;
      rem_weight += best_remaining(r, false);
    }
    return {std::min(priced, weight - sup_total + rem_weight), priced - own};
  }

  double incumbent() const {
    double b = std::max(best_.objective, floor_);
    if (shared_ != nullptr) b = std::max(b, shared_->load(std::memory_order_relaxed));
    return b;
  }

  void leaf(double weight) {
    Candidate c;
    double cost = 0.0;
    for (std::size_t k = 0; k < p_.perfs.size(); ++k) {
      if (used_[k].empty()) continue;
      const auto choice =
          p_.free_disposal ? p_.perfs[k].min_superset(used_[k]) : p_.perfs[k].exact(used_[k]);
      if (!std::isfinite(choice.cost)) return;
      cost += choice.cost;
      c.c_ids.push_back(choice.id);
    }
    c.objective = weight - cost;
    c.v_ids = stack_;
    std::sort(c.v_ids.begin(), c.v_ids.end());
    std::sort(c.c_ids.begin(), c.c_ids.end());
    if (better(c, best_)) {
      best_ = std::move(c);
      if (shared_ != nullptr) atomic_max(*shared_, best_.objective);
    }
  }

  double exhaustive(std::size_t k, double weight) {
    if (k == p_.req_edges.size()) {
      double cost = 0.0;
      for (std::size_t q = 0; q < p_.perfs.size(); ++q) {
        if (used_[q].empty()) continue;
        const auto choice =
            p_.free_disposal ? p_.perfs[q].min_superset(used_[q]) : p_.perfs[q].exact(used_[q]);
        if (!std::isfinite(choice.cost)) return -kInf;
        cost += choice.cost;
      }
      return weight - cost;
    }
    double best = exhaustive(k + 1, weight);
    for (const auto& e : p_.req_edges[k]) {
      double dummy = 0.0;
      std::vector<std::pair<std::uint32_t, double>> undo;
      if (apply(e, dummy, undo)) best = std::max(best, exhaustive(k + 1, weight + e.weight));
      revert(e, undo);
    }
    return best;
  }

  void dfs(std::size_t k, double weight, double sup_total) {
    if (nodes_ >= limit_) {
      aborted_ = true;
      return;
    }
    ++nodes_;
    if (k == p_.req_edges.size()) {
      leaf(weight);
      return;
    }
    if (k > 0 && dominated(k, weight)) return;
    const Bound bd = bound(k, weight, sup_total);
    if (verify_ && bd.value < exhaustive(k, weight) - 1e-9) ++violations_;
    if (bd.value < incumbent() - kTolerance) return;
    for (const auto& e : p_.req_edges[k]) {
      if (bd.rest + e.priced < incumbent() - kTolerance) break;
      double sup_next = sup_total;
      std::vector<std::pair<std::uint32_t, double>> undo;
      if (apply(e, sup_next, undo)) {
        stack_.push_back(e.id);
        dfs(k + 1, weight + e.weight, sup_next);
        stack_.pop_back();
      }
      revert(e, undo);
    }
    if (bd.rest >= incumbent() - kTolerance) dfs(k + 1, weight, sup_total);
  }

  /// The rest of the search depends only on the depth and the used tasks, so a
  /// state reached again with strictly less weight cannot do better. Ties are
  /// kept because they may win the tie-break.
  bool dominated(std::size_t k, double weight) {
    std::fill(key_.begin(), key_.end(), 0);
    key_[0] = k;
    const std::size_t width = p_.num_tasks;
    for (std::size_t q = 0; q < used_.size(); ++q) {
      const std::uint64_t bits = used_[q].bits();
      if (bits == 0) continue;
      const std::size_t off = q * width;
      key_[1 + off / 64] |= bits << (off % 64);
      if (off % 64 + width > 64) key_[2 + off / 64] |= bits >> (64 - off % 64);
    }
    return states_.dominated(key_.data(), weight);
  }

  const Prepared& p_;
  std::atomic<double>* shared_;
  bool verify_;
  double floor_;
  std::uint64_t limit_;
  bool aborted_ = false;
  std::vector<TaskSet> used_;
  std::vector<double> sup_;
  std::vector<std::size_t> stack_;
  std::vector<std::uint64_t> key_;
  StateTable states_;
  /// Priced weight of the selected edges.
  double committed_priced_ = 0.0;
  Candidate best_;
  std::uint64_t nodes_ = 0;
  std::uint64_t violations_ = 0;
};

SolveResult materialize(const AllocationHypergraph& graph, const Candidate& best) {
  SolveResult out;
  double v = 0.0;
  double c = 0.0;
  for (auto id : best.v_ids) {
    out.allocation.selected_v.push_back(graph.v_edges[id]);
    v += graph.v_edges[id].weight;
  }
  for (auto id : best.c_ids) {
    out.allocation.selected_c.push_back(graph.c_edges[id]);
    c += graph.c_edges[id].weight;
  }
  out.objective = v - c;
  return out;
}

}  // namespace

SolveResult solve(const AllocationHypergraph& graph, bool free_disposal, const EdgeFilter& restriction,
                  const SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Prepared p = prepare(graph, free_disposal, restriction);
  SolveStats stats;

  unsigned threads = options.threads == 0 ? default_thread_count() : options.threads;
  if (p.total_edges < kParallelMinEdges || p.req_edges.empty() || options.verify_bounds) threads = 1;
  stats.threads_used = threads;

  // Returns the best candidate and whether the search ran to completion.
  auto pass = [&](double floor, std::uint64_t limit) {
    Candidate best;
    if (threads <= 1 || p.req_edges.empty()) {
      Search s(p, nullptr, options.verify_bounds, floor, limit, kMemoBytes);
      s.run_all();
      best = s.best();
      stats.nodes_explored += s.nodes();
      stats.bound_violations += s.violations();
      return std::pair{best, !s.aborted()};
    }
    const int choices = static_cast<int>(p.req_edges[0].size()) + 1;
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(choices));
    std::atomic<double> shared{0.0};
    std::atomic<int> next{0};
    std::vector<Candidate> bests(workers);
    std::vector<std::uint64_t> nodes(workers, 0);
    std::atomic<bool> complete{true};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        Search s(p, &shared, false, floor, limit / workers, kMemoBytes / workers);
        for (int c = next.fetch_add(1); c < choices && !s.aborted(); c = next.fetch_add(1)) {
          s.run_root_choice(c == choices - 1 ? -1 : c);
        }
        if (s.aborted()) complete = false;
        bests[t] = s.best();
        nodes[t] = s.nodes();
      });
    }
    for (auto& th : pool) th.join();
    double top = -kInf;
    for (const auto& b : bests) top = std::max(top, b.objective);
    bool have = false;
    for (const auto& b : bests) {
      if (b.objective < top - kTolerance) continue;
      if (!have || candidate_less(b, best)) best = b;
      have = true;
    }
    for (auto n : nodes) stats.nodes_explored += n;
    return std::pair{best, complete.load()};
  };

  // Budgeted passes guess the optimum just below the root bound. Nothing at or
  // above a floor is pruned because of it, so a complete pass whose best
  // reaches its floor is optimal. Otherwise its best value tightens the floor
  // and drops edges that cannot beat it. The final pass is unbudgeted and
  // floored at the best value known to be attainable.
  Candidate best;
  double lower = p.lower;
  bool solved = false;
  if (!options.verify_bounds) {
    for (double gap = std::max(kTolerance, 1e-3 * p.root_bound); p.root_bound - gap > lower + kTolerance; gap *= 4) {
      const double floor = p.root_bound - gap;
      auto [found, complete] = pass(floor, kPassBudget);
      if (!found.v_ids.empty() && found.objective >= floor - kTolerance && complete) {
        best = std::move(found);
        solved = true;
        break;
      }
      if (!found.v_ids.empty()) lower = std::max(lower, found.objective);
      for (int round = 0; round < 4 && reduce(p, lower); ++round) {
        lower = std::max(lower, fit_prices(p, lower));
        p.order();
      }
    }
  }
  if (!solved) best = pass(options.verify_bounds ? -kInf : lower, kUnlimited).first;
  auto out = materialize(graph, best);
  stats.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
  out.stats = stats;
  return out;
}

SolveResult brute_force_optimum(const AllocationHypergraph& graph, bool free_disposal,
                                const EdgeFilter& restriction) {
  const auto start = std::chrono::steady_clock::now();
  constexpr double kVGuard = 1e7;
  constexpr double kCGuard = 1e5;

  std::vector<std::vector<std::size_t>> v_groups;
  double v_product = 1.0;
  for (const auto& ids : graph.v_by_requester) {
    std::vector<std::size_t> kept;
    for (auto id : ids) {
      if (!restriction.excludes_v(graph.v_edges[id])) kept.push_back(id);
    }
    if (kept.empty()) continue;
    v_product *= static_cast<double>(kept.size() + 1);
    v_groups.push_back(std::move(kept));
  }
  std::vector<std::vector<std::size_t>> c_groups;
  double c_product = 1.0;
  for (const auto& ids : graph.c_by_performer) {
    std::vector<std::size_t> kept;
    for (auto id : ids) {
      if (!restriction.excludes_c(graph.c_edges[id])) kept.push_back(id);
    }
    if (kept.empty()) continue;
    c_product *= static_cast<double>(kept.size() + 1);
    c_groups.push_back(std::move(kept));
  }
  if (v_product > kVGuard || c_product > kCGuard) {
    throw Error(ErrorKind::OracleTooLarge, "instance too large for oracle");
  }

  // Every combination of at most one bid per performer, cheapest first.
  struct BidCombo {
    std::set<TpbNode> nodes;
    double cost = 0.0;
    std::vector<std::size_t> ids;
  };
  std::vector<BidCombo> combos{BidCombo{}};
  for (const auto& group : c_groups) {
    std::vector<BidCombo> next;
    for (const auto& base : combos) {
      next.push_back(base);
      for (auto id : group) {
        BidCombo c = base;
        for (const auto& n : graph.c_edges[id].cover) c.nodes.insert(n);
        c.cost += graph.c_edges[id].weight;
        c.ids.push_back(id);
        next.push_back(std::move(c));
      }
    }
    combos = std::move(next);
  }
  for (auto& c : combos) std::sort(c.ids.begin(), c.ids.end());
  std::stable_sort(combos.begin(), combos.end(), [](const BidCombo& a, const BidCombo& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.ids.size() != b.ids.size()) return a.ids.size() < b.ids.size();
    return std::lexicographical_compare(a.ids.begin(), a.ids.end(), b.ids.begin(), b.ids.end());
  });

  Candidate best;
  std::uint64_t visited = 0;
  std::vector<std::size_t> chosen;
  std::set<TpbNode> used;
  auto evaluate = [&] {
    ++visited;
    double weight = 0.0;
    for (auto id : chosen) weight += graph.v_edges[id].weight;
    for (const auto& c : combos) {
      const bool ok = free_disposal ? std::includes(c.nodes.begin(), c.nodes.end(), used.begin(), used.end())
                                    : c.nodes == used;
      if (!ok) continue;
      Candidate cand{weight - c.cost, chosen, c.ids};
      std::sort(cand.v_ids.begin(), cand.v_ids.end());
      if (better(cand, best)) best = std::move(cand);
      return;
    }
  };
  auto rec = [&](auto&& self, std::size_t g) -> void {
    if (g == v_groups.size()) {
      evaluate();
      return;
    }
    self(self, g + 1);
    for (auto id : v_groups[g]) {
      const auto& cover = graph.v_edges[id].cover;
      if (std::any_of(cover.begin(), cover.end(), [&](const TpbNode& n) { return used.count(n) > 0; })) continue;
      for (const auto& n : cover) used.insert(n);
      chosen.push_back(id);
      self(self, g + 1);
      chosen.pop_back();
      for (const auto& n : cover) used.erase(n);
    }
  };
  rec(rec, 0);

  auto out = materialize(graph, best);
  out.stats.nodes_explored = visited;
  out.stats.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
  return out;
}

}  // namespace trustclear
