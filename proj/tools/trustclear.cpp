#include <iostream>

#include "CLI11.hpp"
#include "trustclear/commands.hpp"

using namespace trustclear;

namespace {

void add_gen_flags(CLI::App* app, GenConfig& c) {
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--tasks", c.n_tasks, "number of tasks");
  app->add_option("--requesters", c.n_requesters, "number of requesters");
  app->add_option("--performers", c.n_performers, "number of performers");
  app->add_option("--geometric-p", c.geometric_p, "atoms per agent ~ Geometric(p) on {1,2,...}");
  app->add_option("--max-bundle", c.max_bundle, "largest bundle size");
  app->add_option("--value-lo", c.value_lo);
  app->add_option("--value-hi", c.value_hi);
  app->add_option("--cost-lo", c.cost_lo);
  app->add_option("--cost-hi", c.cost_hi);
  app->add_option("--eqos-lo", c.eqos_lo);
  app->add_option("--eqos-hi", c.eqos_hi);
  app->add_flag("!--strict", c.free_disposal, "require every executed task to be valued");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trustclear: exact clearing for trust-based task allocation"};
  app.require_subcommand(1);
  int code = kExitOk;

  SolveCommand solve_cmd;
  auto* solve = app.add_subcommand("solve", "optimal allocation of an instance");
  solve->add_option("instance", solve_cmd.instance)->required();
  solve->add_flag("--oracle", solve_cmd.oracle, "cross-check against brute force");
  solve->add_flag("--dump", solve_cmd.dump, "print the allocation hypergraph");
  solve->callback([&] { code = cmd_solve(solve_cmd, std::cout, std::cerr); });

  PayCommand pay_cmd;
  auto* pay = app.add_subcommand("pay", "payment schedule or realized transfers");
  pay->add_option("instance", pay_cmd.instance)->required();
  pay->add_option("--mechanism", pay_cmd.mechanism, "gtbm, single-task-tbm, porter, porter-extension, naive-vickrey");
  pay->add_option("--policy", pay_cmd.policy, "zero, fixed:<v>, min-marginal");
  pay->add_option("--outcome", pay_cmd.outcome, "bitmask, success or all-fail");
  pay->add_option("--vickrey-mode", pay_cmd.vickrey_mode, "certain or expected");
  pay->add_option("--out", pay_cmd.json_out, "write the schedule as JSON");
  pay->callback([&] { code = cmd_pay(pay_cmd, std::cout, std::cerr); });

  AuditCommand audit_cmd;
  auto* audit = app.add_subcommand("audit", "incentive-compatibility and rationality audit");
  audit->add_option("instance", audit_cmd.instance)->required();
  audit->add_option("--mechanism", audit_cmd.mechanism,
                    "gtbm, single-task-tbm, porter-extension, naive-vickrey, self-inclusive");
  audit->add_option("--policy", audit_cmd.policy, "zero, fixed:<v>, min-marginal");
  audit->add_option("--eqos-steps", audit_cmd.config.eqos_steps, "grid points per EQOS entry");
  audit->add_option("--scaling-steps", audit_cmd.config.scaling_steps, "grid points per scaling");
  audit->add_option("--scale-lo", audit_cmd.config.scale_lo);
  audit->add_option("--scale-hi", audit_cmd.config.scale_hi);
  audit->add_option("--samples", audit_cmd.config.samples, "random misreports per agent");
  audit->add_option("--seed", audit_cmd.config.seed);
  audit->add_option("--epsilon", audit_cmd.config.epsilon);
  audit->add_flag("--ir", audit_cmd.individual_rationality, "also audit individual rationality");
  audit->add_option("--true-types", audit_cmd.config.true_type_values, "EQOS values a true type may take (IR)");
  audit->add_option("--out", audit_cmd.json_out, "write the report as JSON");
  audit->callback([&] { code = cmd_audit(audit_cmd, std::cout, std::cerr); });

  std::string count_path;
  auto* count = app.add_subcommand("count", "number of feasible valuation hyperedges");
  count->add_option("instance", count_path)->required();
  count->callback([&] { code = cmd_count(count_path, std::cout, std::cerr); });

  GenCommand gen_cmd;
  auto* gen = app.add_subcommand("gen", "generate a random instance");
  add_gen_flags(gen, gen_cmd.config);
  gen->add_option("--out", gen_cmd.out_path, "output path (stdout if absent)");
  gen->callback([&] { code = cmd_gen(gen_cmd, std::cout, std::cerr); });

  BenchCommand bench_cmd;
  auto* bench = app.add_subcommand("bench", "generate, count and solve a batch");
  add_gen_flags(bench, bench_cmd.config);
  bench->add_option("--runs", bench_cmd.runs, "instances (seeds seed..seed+runs-1)");
  bench->add_option("--max-count", bench_cmd.options.max_count, "skip solving above this allocation count");
  bench->add_option("--threads", bench_cmd.options.solve.threads, "solver threads (0 = auto)");
  bench->add_option("--instances", bench_cmd.options.instance_dir, "directory to save generated instances");
  bench->add_option("--out", bench_cmd.csv_out, "CSV path (stdout if absent)");
  bench->callback([&] { code = cmd_bench(bench_cmd, std::cout, std::cerr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }
  return code;
}
