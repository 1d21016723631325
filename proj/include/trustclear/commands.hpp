#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trustclear/bench.hpp"
#include "trustclear/mechanism.hpp"
#include "trustclear/simulator.hpp"

namespace trustclear {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInput = 2;

DiscountPolicy parse_policy(const std::string& text);
MechanismKind parse_mechanism(const std::string& text);
VickreyMode parse_vickrey_mode(const std::string& text);

/// "success", "all-fail", a decimal number or a 0b-prefixed bit string.
std::uint64_t parse_outcome(const std::string& text, std::uint64_t all_success);

struct SolveCommand {
  std::string instance;
  bool oracle = false;
  bool dump = false;
};
int cmd_solve(const SolveCommand& cmd, std::ostream& out, std::ostream& err);

struct PayCommand {
  std::string instance;
  std::string mechanism = "gtbm";
  std::string policy = "zero";
  std::optional<std::string> outcome;
  std::string vickrey_mode = "expected";
  std::string json_out;
};
int cmd_pay(const PayCommand& cmd, std::ostream& out, std::ostream& err);

struct AuditCommand {
  std::string instance;
  std::string mechanism = "gtbm";
  std::string policy = "zero";
  AuditConfig config;
  bool individual_rationality = false;
  std::string json_out;
};
int cmd_audit(const AuditCommand& cmd, std::ostream& out, std::ostream& err);

int cmd_count(const std::string& instance, std::ostream& out, std::ostream& err);

struct GenCommand {
  GenConfig config;
  std::string out_path;
};
int cmd_gen(const GenCommand& cmd, std::ostream& out, std::ostream& err);

struct BenchCommand {
  GenConfig config;
  std::size_t runs = 10;
  std::string csv_out;
  BenchOptions options;
};
int cmd_bench(const BenchCommand& cmd, std::ostream& out, std::ostream& err);

}  // namespace trustclear
