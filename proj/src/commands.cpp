#include "trustclear/commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "trustclear/io.hpp"

namespace trustclear {

DiscountPolicy parse_policy(const std::string& text) {
  if (text == "zero") return DiscountPolicy::zero();
  if (text == "min-marginal") return DiscountPolicy::min_marginal();
  if (text.rfind("fixed:", 0) == 0) {
    const auto value = text.substr(6);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw Error(ErrorKind::InvalidInput, "bad fixed policy '" + text + "'");
    return DiscountPolicy::fixed_value(v);
  }
  throw Error(ErrorKind::InvalidInput, "unknown policy '" + text + "' (zero, fixed:<v>, min-marginal)");
}

MechanismKind parse_mechanism(const std::string& text) {
  for (auto k : {MechanismKind::Gtbm, MechanismKind::SingleTaskTbm, MechanismKind::Porter,
                 MechanismKind::PorterExtension, MechanismKind::NaiveVickrey}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorKind::InvalidInput, "unknown mechanism '" + text + "'");
}

VickreyMode parse_vickrey_mode(const std::string& text) {
  if (text == "certain") return VickreyMode::Certain;
  if (text == "expected") return VickreyMode::Expected;
  throw Error(ErrorKind::InvalidInput, "unknown vickrey mode '" + text + "'");
}

std::uint64_t parse_outcome(const std::string& text, std::uint64_t all_success) {
  if (text == "success") return all_success;
  if (text == "all-fail") return 0;
  std::uint64_t v = 0;
  if (text.rfind("0b", 0) == 0 && text.size() > 2 && text.size() <= 66) {
    for (char c : text.substr(2)) {
      if (c != '0' && c != '1') throw Error(ErrorKind::InvalidInput, "bad outcome '" + text + "'");
      v = (v << 1) | static_cast<std::uint64_t>(c - '0');
    }
  } else {
    std::size_t used = 0;
    try {
      v = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) throw Error(ErrorKind::InvalidInput, "bad outcome '" + text + "'");
  }
  if ((v & ~all_success) != 0) throw Error(ErrorKind::InvalidInput, "outcome has bits beyond the assignments");
  return v;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << (std::abs(v) < 5e-5 ? 0.0 : v);
  return os.str();
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

Instance load_valid(const std::string& path, std::ostream& err, bool& ok) {
  auto inst = read_instance_file(path);
  const auto violations = validate_report_profile(inst.profile);
  ok = violations.empty();
  for (const auto& v : violations) err << "violation: " << v.kind << ": " << v.detail << '\n';
  return inst;
}

void print_allocation(const SolveResult& r, std::ostream& out) {
  out << "assignments:\n";
  for (const auto& a : r.allocation.assignments()) {
    out << "  task " << a.task.index << " requester " << a.requester.index << " performer " << a.performer.index
        << '\n';
  }
  out << "bids:\n";
  for (const auto& e : r.allocation.selected_c) {
    out << "  performer " << e.atom.performer.index << " bundle " << to_string(e.atom.bundle) << " cost "
        << fmt(e.weight) << '\n';
  }
  std::vector<std::uint32_t> performers;
  for (const auto& e : r.allocation.selected_c) performers.push_back(e.atom.performer.index);
  if (performers.empty()) {
    out << "winner: none";
  } else if (performers.size() == 1) {
    out << "winner: agent " << performers.front();
  } else {
    out << "winners: agents";
    for (std::size_t k = 0; k < performers.size(); ++k) out << (k ? ", " : " ") << performers[k];
  }
  out << ", objective " << fmt(r.objective) << '\n';
}

}  // namespace

int cmd_solve(const SolveCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    bool ok = true;
    const auto inst = load_valid(cmd.instance, err, ok);
    if (!ok) return kExitInput;
    const auto table = build_trust_table(inst.model, inst.profile);
    const auto graph = build_hypergraph(inst.profile, table);
    if (cmd.dump) dump_hypergraph(graph, out);
    const auto result = solve(graph, inst.profile.free_disposal);
    print_allocation(result, out);
    if (cmd.oracle) {
      const auto oracle = brute_force_optimum(graph, inst.profile.free_disposal);
      const bool match = std::abs(oracle.objective - result.objective) <= 1e-6;
      out << "oracle: objective " << fmt(oracle.objective) << (match ? ", match" : ", MISMATCH") << '\n';
      if (!match) return kExitFail;
    }
    return kExitOk;
  });
}

int cmd_pay(const PayCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    bool ok = true;
    const auto inst = load_valid(cmd.instance, err, ok);
    if (!ok) return kExitInput;
    const auto& p = inst.profile;
    const auto mech = parse_mechanism(cmd.mechanism);
    const auto policy = parse_policy(cmd.policy);
    PaymentSchedule s;
    TrustTable table = build_trust_table(inst.model, p);
    switch (mech) {
      case MechanismKind::Gtbm:
        s = gtbm_payment_schedule(p, inst.model, gtbm_allocate(p, inst.model), policy);
        break;
      case MechanismKind::SingleTaskTbm:
        s = single_task_tbm(p, inst.model, policy);
        break;
      case MechanismKind::Porter:
        s = porter_schedule(p);
        table = build_trust_table(TrustModel::self_report(), p);
        break;
      case MechanismKind::PorterExtension:
        s = porter_extension_schedule(p, inst.model);
        break;
      case MechanismKind::NaiveVickrey:
        s = naive_vickrey_schedule(p, inst.model, parse_vickrey_mode(cmd.vickrey_mode));
        break;
    }
    out << "mechanism: " << to_string(mech) << ", policy: " << to_string(policy) << '\n';
    if (s.winner) out << "winner: agent " << s.winner->index << '\n';
    out << "assignments (pattern bit order):\n";
    for (std::size_t k = 0; k < s.assignments().size(); ++k) {
      const auto& a = s.assignments()[k];
      out << "  bit " << k << ": task " << a.task.index << " requester " << a.requester.index << " performer "
          << a.performer.index << '\n';
    }
    const std::size_t n = s.assignments().size();
    if (cmd.outcome) {
      const auto mask = parse_outcome(*cmd.outcome, s.all_success());
      out << "outcome: pattern " << mask << '\n';
      for (const auto& t : s.agents()) out << "agent " << t.agent.index << ": " << fmt(s.payment(t.agent, mask)) << '\n';
      out << "centre balance: " << fmt(s.centre_balance(mask)) << '\n';
    } else {
      for (const auto& t : s.agents()) {
        out << "agent " << t.agent.index << "  B " << fmt(t.discount) << "  expected "
            << fmt(s.expected_payment(t.agent, table)) << '\n';
        std::vector<std::uint64_t> masks;
        if (n <= 6) {
          for (std::uint64_t m = s.all_success() + 1; m-- > 0;) masks.push_back(m);
        } else {
          masks = {s.all_success(), 0};
        }
        for (auto m : masks) out << "  pattern " << m << ": " << fmt(s.payment(t.agent, m)) << '\n';
      }
    }
    if (!cmd.json_out.empty()) {
      std::ofstream f(cmd.json_out);
      if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + cmd.json_out);
      f << schedule_to_json(s, &table).dump(2) << '\n';
    }
    return kExitOk;
  });
}

int cmd_audit(const AuditCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    bool ok = true;
    const auto inst = load_valid(cmd.instance, err, ok);
    if (!ok) return kExitInput;
    auto config = cmd.config;
    if (cmd.mechanism == "gtbm" || cmd.mechanism == "single-task-tbm") {
      config.rule = PaymentRule::Gtbm;
    } else if (cmd.mechanism == "porter-extension") {
      config.rule = PaymentRule::PorterExtension;
    } else if (cmd.mechanism == "naive-vickrey") {
      config.rule = PaymentRule::NaiveVickreyExpected;
    } else if (cmd.mechanism == "self-inclusive") {
      config.rule = PaymentRule::SelfInclusive;
    } else {
      throw Error(ErrorKind::InvalidInput, "audit does not support mechanism '" + cmd.mechanism + "'");
    }
    const auto policy = parse_policy(cmd.policy);
    const auto ic = audit_incentive_compatibility(inst.profile, inst.model, policy, config);
    out << format_audit_table(ic);
    nlohmann::json doc;
    doc["incentive_compatibility"] = audit_to_json(ic);
    bool pass = ic.pass;
    if (cmd.individual_rationality) {
      const auto ir = audit_individual_rationality(inst.profile, inst.model, policy, config);
      out << format_audit_table(ir);
      doc["individual_rationality"] = audit_to_json(ir);
      pass = pass && ir.pass;
    }
    if (!cmd.json_out.empty()) {
      std::ofstream f(cmd.json_out);
      if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + cmd.json_out);
      f << doc.dump(2) << '\n';
    }
    out << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitOk : kExitFail;
  });
}

int cmd_count(const std::string& instance, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto inst = read_instance_file(instance);
    out << count_allocations(inst.profile) << '\n';
    return kExitOk;
  });
}

int cmd_gen(const GenCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto profile = generate_instance(cmd.config);
    const auto model = TrustModel::uniform(profile.num_agents);
    if (cmd.out_path.empty()) {
      out << instance_to_json(profile, model).dump(2) << '\n';
    } else {
      write_instance_file(cmd.out_path, profile, model);
    }
    return kExitOk;
  });
}

int cmd_bench(const BenchCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_gen_config(cmd.config);
    const auto rows = run_benchmark({cmd.config}, cmd.runs, cmd.options);
    for (const auto& r : rows) {
      if (!r.error.empty()) err << "seed " << r.seed << ": " << r.error << '\n';
    }
    if (cmd.csv_out.empty()) {
      write_bench_csv(rows, out);
    } else {
      std::ofstream f(cmd.csv_out);
      if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + cmd.csv_out);
      write_bench_csv(rows, f);
      std::vector<double> counts;
      std::vector<double> times;
      for (const auto& r : rows) {
        if (!r.solve_ms) continue;
        counts.push_back(static_cast<double>(r.allocation_count));
        times.push_back(*r.solve_ms);
      }
      out << "rows: " << rows.size() << ", solved: " << counts.size();
      if (counts.size() >= 2) out << ", spearman(count, time): " << fmt(spearman(counts, times));
      out << '\n';
    }
    return kExitOk;
  });
}

}  // namespace trustclear
