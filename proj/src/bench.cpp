#include "trustclear/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "trustclear/hypergraph.hpp"
#include "trustclear/io.hpp"
#include "trustclear/simulator.hpp"
#include "trustclear/trust.hpp"

namespace trustclear {

void validate_gen_config(const GenConfig& c) {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidInput, "generator config: " + why); };
  if (c.n_tasks < 1 || c.n_requesters < 1 || c.n_performers < 1) fail("counts must be at least 1");
  if (c.n_tasks > TaskSet::kCapacity) fail("at most 64 tasks");
  if (!(c.geometric_p > 0.0 && c.geometric_p <= 1.0)) fail("geometric p must lie in (0,1]");
  if (!(c.value_lo >= 0.0 && c.value_lo <= c.value_hi)) fail("bad value range");
  if (!(c.cost_lo >= 0.0 && c.cost_lo <= c.cost_hi)) fail("bad cost range");
  if (!(c.eqos_lo >= 0.0 && c.eqos_lo <= c.eqos_hi && c.eqos_hi <= 1.0)) fail("bad EQOS range");
  if (c.max_bundle < 1 || c.max_bundle > kMaxBundleSize) fail("max bundle must be 1..16");
}

std::size_t geometric_draw(std::mt19937_64& rng, double p) {
  if (p >= 1.0) return 1;
  const double u = 1.0 - uniform_draw(rng);  // (0,1]
  return 1 + static_cast<std::size_t>(std::floor(std::log(u) / std::log1p(-p)));
}

TaskSet random_bundle(std::mt19937_64& rng, std::size_t n_tasks, std::size_t max_size) {
  const std::size_t top = std::min(n_tasks, max_size);
  // Pick the size with weight C(n,k), then a uniform subset of that size.
  std::vector<double> weight(top + 1, 0.0);
  double c = 1.0;
  for (std::size_t k = 1; k <= top; ++k) {
    c = c * static_cast<double>(n_tasks - k + 1) / static_cast<double>(k);
    weight[k] = c;
  }
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  double u = uniform_draw(rng) * total;
  std::size_t size = top;
  for (std::size_t k = 1; k <= top; ++k) {
    if (u < weight[k]) {
      size = k;
      break;
    }
    u -= weight[k];
  }
  std::vector<std::uint32_t> idx(n_tasks);
  std::iota(idx.begin(), idx.end(), 0u);
  TaskSet s;
  for (std::size_t k = 0; k < size; ++k) {
    const auto j = k + static_cast<std::size_t>(uniform_draw(rng) * static_cast<double>(n_tasks - k));
    std::swap(idx[k], idx[j]);
    s.insert(TaskId{idx[k]});
  }
  return s;
}

namespace {

double uniform_in(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform_draw(rng); }

bool comparable(TaskSet a, TaskSet b) { return a.subset_of(b) || b.subset_of(a); }

constexpr int kDrawAttempts = 200;

}  // namespace

ReportProfile generate_instance(const GenConfig& cfg) {
  validate_gen_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  ReportProfile p;
  p.num_tasks = cfg.n_tasks;
  p.num_agents = cfg.n_requesters + cfg.n_performers;
  p.free_disposal = cfg.free_disposal;

  for (std::size_t r = 0; r < cfg.n_requesters; ++r) {
    ValuationMap vm(AgentId{static_cast<std::uint32_t>(r)});
    const std::size_t k = geometric_draw(rng, cfg.geometric_p);
    std::vector<TaskSet> chosen;
    for (int attempt = 0; chosen.size() < k && attempt < kDrawAttempts; ++attempt) {
      const auto b = random_bundle(rng, cfg.n_tasks, cfg.max_bundle);
      if (std::any_of(chosen.begin(), chosen.end(), [&](TaskSet c) { return comparable(b, c); })) continue;
      chosen.push_back(b);
    }
    for (auto b : chosen) vm.add(b, uniform_in(rng, cfg.value_lo, cfg.value_hi));
    p.valuations.push_back(std::move(vm));
  }
  for (std::size_t q = 0; q < cfg.n_performers; ++q) {
    const AgentId perf{static_cast<std::uint32_t>(cfg.n_requesters + q)};
    const std::size_t k = geometric_draw(rng, cfg.geometric_p);
    std::vector<TaskSet> chosen;
    for (int attempt = 0; chosen.size() < k && attempt < kDrawAttempts; ++attempt) {
      const auto b = random_bundle(rng, cfg.n_tasks, cfg.max_bundle);
      if (std::find(chosen.begin(), chosen.end(), b) != chosen.end()) continue;
      chosen.push_back(b);
    }
    for (auto b : chosen) p.bids.push_back({perf, b, uniform_in(rng, cfg.cost_lo, cfg.cost_hi)});
  }
  std::vector<std::pair<AgentId, TaskId>> pairs;
  for (const auto& b : p.bids) {
    for (auto t : b.bundle.tasks()) pairs.push_back({b.performer, t});
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (std::uint32_t a = 0; a < p.num_agents; ++a) {
    EqosMatrix m(AgentId{a});
    for (const auto& [perf, task] : pairs) m.set(perf, task, uniform_in(rng, cfg.eqos_lo, cfg.eqos_hi));
    p.eqos.push_back(std::move(m));
  }
  p.normalize();
  return p;
}

std::vector<BenchRow> run_benchmark(const std::vector<GenConfig>& configs, std::size_t runs,
                                    const BenchOptions& options) {
  std::vector<BenchRow> rows;
  for (const auto& base : configs) {
    for (std::size_t run = 0; run < runs; ++run) {
      GenConfig cfg = base;
      cfg.seed = base.seed + run;
      BenchRow row;
      row.seed = cfg.seed;
      row.n_tasks = cfg.n_tasks;
      row.n_requesters = cfg.n_requesters;
      row.n_performers = cfg.n_performers;
      try {
        const auto profile = generate_instance(cfg);
        row.allocation_count = count_allocations(profile);
        row.c_edges = profile.bids.size();
        if (!options.instance_dir.empty()) {
          std::filesystem::create_directories(options.instance_dir);
          write_instance_file(std::filesystem::path(options.instance_dir) / (std::to_string(cfg.seed) + ".json"),
                              profile, TrustModel::uniform(profile.num_agents));
        }
        if (row.allocation_count > options.max_count) {
          row.error = "skipped: allocation count above limit";
        } else {
          const auto table = build_trust_table(TrustModel::uniform(profile.num_agents), profile);
          const auto graph = build_hypergraph(profile, table);
          row.v_edges = graph.v_edges.size();
          const auto start = std::chrono::steady_clock::now();
          const auto result = solve(graph, profile.free_disposal, {}, options.solve);
          const auto stop = std::chrono::steady_clock::now();
          row.solve_ms = std::chrono::duration<double, std::milli>(stop - start).count();
          row.objective = result.objective;
        }
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const BenchRow& a, const BenchRow& b) { return a.allocation_count < b.allocation_count; });
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& os) {
  os << "seed,n_tasks,n_requesters,n_performers,allocation_count,v_edges,c_edges,solve_ms,objective\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    os << r.seed << ',' << r.n_tasks << ',' << r.n_requesters << ',' << r.n_performers << ',' << r.allocation_count
       << ',' << r.v_edges << ',' << r.c_edges << ',';
    if (r.solve_ms) os << *r.solve_ms;
    os << ',';
    if (r.objective) os << *r.objective;
    os << '\n';
  }
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidInput, "spearman needs paired samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace trustclear
