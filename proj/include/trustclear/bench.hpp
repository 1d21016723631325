#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "trustclear/core.hpp"
#include "trustclear/solver.hpp"

namespace trustclear {

struct GenConfig {
  std::size_t n_tasks = 5;
  std::size_t n_requesters = 20;
  std::size_t n_performers = 15;
  double geometric_p = 0.23;
  double value_lo = 50.0;
  double value_hi = 300.0;
  double cost_lo = 10.0;
  double cost_hi = 200.0;
  double eqos_lo = 0.3;
  double eqos_hi = 1.0;
  std::size_t max_bundle = 5;
  bool free_disposal = true;
  std::uint64_t seed = 1;
};

void validate_gen_config(const GenConfig& config);

/// Number of atoms, geometric on {1, 2, ...} with success probability p.
std::size_t geometric_draw(std::mt19937_64& rng, double p);

/// Uniform among non-empty subsets of at most max_size of n tasks.
TaskSet random_bundle(std::mt19937_64& rng, std::size_t n_tasks, std::size_t max_size);

/// Requesters are agents 0..R-1, performers R..R+P-1. Valuation atoms of one
/// requester never nest, so every generated valuation map is subset-monotone.
ReportProfile generate_instance(const GenConfig& config);

struct BenchRow {
  std::uint64_t seed = 0;
  std::size_t n_tasks = 0;
  std::size_t n_requesters = 0;
  std::size_t n_performers = 0;
  std::uint64_t allocation_count = 0;
  std::size_t v_edges = 0;
  std::size_t c_edges = 0;
  std::optional<double> solve_ms;
  std::optional<double> objective;
  std::string error;
};

struct BenchOptions {
  SolveOptions solve;
  /// Skip solving when the count exceeds this (row keeps an error note).
  std::uint64_t max_count = std::numeric_limits<std::uint64_t>::max();
  /// When set, each instance is written here as <seed>.json.
  std::string instance_dir;
};

/// Runs `runs` seeds per config (seed, seed+1, ...); rows sorted by allocation count.
std::vector<BenchRow> run_benchmark(const std::vector<GenConfig>& configs, std::size_t runs,
                                    const BenchOptions& options = {});

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& os);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace trustclear
