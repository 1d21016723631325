#include "trustclear/io.hpp"

#include <fstream>
#include <sstream>

namespace trustclear {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorKind::InvalidInput, "instance file: " + why); }

const json& field(const json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name)) bad(std::string("missing field '") + name + "'");
  return obj.at(name);
}

std::uint32_t index_of(const json& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 0xffffffffLL) {
    bad(std::string(what) + " must be a non-negative integer");
  }
  return static_cast<std::uint32_t>(v.get<long long>());
}

double number_of(const json& v, const char* what) {
  if (!v.is_number()) bad(std::string(what) + " must be a number");
  return v.get<double>();
}

TaskSet bundle_of(const json& v) {
  if (!v.is_array()) bad("bundle must be an array of task indices");
  TaskSet s;
  for (const auto& t : v) {
    const auto k = index_of(t, "task");
    if (k >= TaskSet::kCapacity) bad("task index " + std::to_string(k) + " exceeds 63");
    if (s.contains(TaskId{k})) bad("bundle repeats task " + std::to_string(k));
    s.insert(TaskId{k});
  }
  return s;
}

json bundle_json(TaskSet s) {
  json arr = json::array();
  for (auto t : s.tasks()) arr.push_back(t.index);
  return arr;
}

}  // namespace

TrustModel trust_model_from_json(const json& doc, std::size_t num_agents) {
  if (doc.is_null()) return TrustModel::uniform(num_agents);
  const auto kind = field(doc, "kind");
  if (!kind.is_string()) bad("trust_model.kind must be a string");
  const auto k = kind.get<std::string>();
  if (k == "weighted_sum") {
    std::vector<double> w;
    const auto& arr = field(doc, "weights");
    if (!arr.is_array()) bad("trust_model.weights must be an array");
    for (const auto& x : arr) w.push_back(number_of(x, "weight"));
    if (w.size() != num_agents) bad("trust_model.weights needs one weight per agent");
    return TrustModel::weighted_sum(std::move(w));
  }
  if (k == "uniform") return TrustModel::uniform(num_agents);
  if (k == "self_report") return TrustModel::self_report();
  bad("unknown trust model kind '" + k + "'");
}

json trust_model_to_json(const TrustModel& model) {
  if (model.kind() == TrustModel::Kind::WeightedSum) return {{"kind", "weighted_sum"}, {"weights", model.weights()}};
  if (model.name() == "self_report") return {{"kind", "self_report"}};
  throw Error(ErrorKind::InvalidInput, "trust model '" + model.name() + "' cannot be serialized");
}

Instance parse_instance(const json& doc) {
  if (!doc.is_object()) bad("top level must be an object");
  ReportProfile p;
  p.num_tasks = index_of(field(doc, "tasks"), "tasks");
  p.num_agents = index_of(field(doc, "agents"), "agents");
  if (doc.contains("free_disposal")) {
    if (!doc["free_disposal"].is_boolean()) bad("free_disposal must be a boolean");
    p.free_disposal = doc["free_disposal"].get<bool>();
  }
  if (doc.contains("eqos_domain")) {
    const auto& d = doc["eqos_domain"];
    if (!d.is_array() || d.size() != 2) bad("eqos_domain must be [lo, hi]");
    p.eqos_domain = {number_of(d[0], "eqos_domain"), number_of(d[1], "eqos_domain")};
  }
  if (doc.contains("valuations")) {
    for (const auto& v : doc["valuations"]) {
      ValuationMap vm(AgentId{index_of(field(v, "requester"), "requester")});
      for (const auto& a : field(v, "atoms")) vm.add(bundle_of(field(a, "bundle")), number_of(field(a, "value"), "value"));
      p.valuations.push_back(std::move(vm));
    }
  }
  if (doc.contains("bids")) {
    for (const auto& b : doc["bids"]) {
      const AgentId perf{index_of(field(b, "performer"), "performer")};
      for (const auto& a : field(b, "atoms")) {
        p.bids.push_back({perf, bundle_of(field(a, "bundle")), number_of(field(a, "cost"), "cost")});
      }
    }
  }
  if (doc.contains("eqos")) {
    for (const auto& m : doc["eqos"]) {
      EqosMatrix mat(AgentId{index_of(field(m, "reporter"), "reporter")});
      for (const auto& e : field(m, "entries")) {
        const AgentId perf{index_of(field(e, "performer"), "performer")};
        const TaskId task{index_of(field(e, "task"), "task")};
        if (mat.find(perf, task)) bad("duplicate EQOS entry");
        mat.set(perf, task, number_of(field(e, "value"), "EQOS value"));
      }
      p.eqos.push_back(std::move(mat));
    }
  }
  p.normalize();
  const json model_doc = doc.contains("trust_model") ? doc["trust_model"] : json();
  auto model = trust_model_from_json(model_doc, p.num_agents);
  return {std::move(p), std::move(model)};
}

Instance parse_instance_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse_instance(doc);
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

Instance read_instance_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance_text(ss.str());
}

json instance_to_json(const ReportProfile& profile, const TrustModel& model) {
  ReportProfile p = profile;
  p.normalize();
  json doc;
  doc["tasks"] = p.num_tasks;
  doc["agents"] = p.num_agents;
  doc["trust_model"] = trust_model_to_json(model);
  doc["free_disposal"] = p.free_disposal;
  doc["eqos_domain"] = {p.eqos_domain.lo, p.eqos_domain.hi};
  json vals = json::array();
  for (const auto& vm : p.valuations) {
    json atoms = json::array();
    for (const auto& e : vm.entries()) atoms.push_back({{"bundle", bundle_json(e.bundle)}, {"value", e.value}});
    vals.push_back({{"requester", vm.requester().index}, {"atoms", atoms}});
  }
  doc["valuations"] = vals;
  json bids = json::array();
  for (std::size_t i = 0; i < p.bids.size();) {
    const auto perf = p.bids[i].performer;
    json atoms = json::array();
    for (; i < p.bids.size() && p.bids[i].performer == perf; ++i) {
      atoms.push_back({{"bundle", bundle_json(p.bids[i].bundle)}, {"cost", p.bids[i].cost}});
    }
    bids.push_back({{"performer", perf.index}, {"atoms", atoms}});
  }
  doc["bids"] = bids;
  json eqos = json::array();
  for (const auto& m : p.eqos) {
    json entries = json::array();
    for (const auto& [key, v] : m.entries()) {
      entries.push_back({{"performer", key.first.index}, {"task", key.second.index}, {"value", v}});
    }
    eqos.push_back({{"reporter", m.reporter().index}, {"entries", entries}});
  }
  doc["eqos"] = eqos;
  return doc;
}

void write_instance_file(const std::filesystem::path& path, const ReportProfile& profile, const TrustModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
  out << instance_to_json(profile, model).dump(2) << '\n';
}

json schedule_to_json(const PaymentSchedule& s, const TrustTable* table) {
  json doc;
  doc["mechanism"] = to_string(s.mechanism);
  doc["winner"] = s.winner ? json(s.winner->index) : json();
  json assigns = json::array();
  for (std::size_t k = 0; k < s.assignments().size(); ++k) {
    const auto& a = s.assignments()[k];
    assigns.push_back({{"bit", k}, {"task", a.task.index}, {"requester", a.requester.index},
                       {"performer", a.performer.index}});
  }
  doc["assignments"] = assigns;
  const std::size_t n = s.assignments().size();
  if (n > 16) throw Error(ErrorKind::InvalidInput, "too many assignments to list every completion pattern");
  json agents = json::array();
  for (const auto& t : s.agents()) {
    json pays = json::array();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      pays.push_back({{"pattern", mask}, {"payment", s.payment(t.agent, mask)}});
    }
    json a = {{"agent", t.agent.index}, {"discount", t.discount}, {"payments", pays}};
    if (table != nullptr) a["expected_payment"] = s.expected_payment(t.agent, *table);
    agents.push_back(a);
  }
  doc["agents"] = agents;
  return doc;
}

json audit_to_json(const AuditReport& r) {
  json doc;
  doc["kind"] = r.kind;
  doc["rule"] = to_string(r.rule);
  doc["policy"] = to_string(r.policy);
  doc["epsilon"] = r.epsilon;
  doc["full_grid"] = r.full_grid;
  doc["pass"] = r.pass;
  doc["note"] = r.note;
  json agents = json::array();
  for (const auto& a : r.agents) {
    json j = {{"agent", a.agent.index},       {"truthful_utility", a.truthful_utility},
              {"max_gain", a.max_gain},       {"min_utility", a.min_utility},
              {"evaluated", a.evaluated}};
    if (a.best_deviation) j["best_deviation"] = a.best_deviation->describe();
    if (!a.worst_type.empty()) j["worst_type"] = a.worst_type;
    agents.push_back(j);
  }
  doc["agents"] = agents;
  return doc;
}

}  // namespace trustclear
