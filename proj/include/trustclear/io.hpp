#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "trustclear/core.hpp"
#include "trustclear/mechanism.hpp"
#include "trustclear/simulator.hpp"
#include "trustclear/trust.hpp"

namespace trustclear {

struct Instance {
  ReportProfile profile;
  TrustModel model;
};

/// Parses the instance document; the profile comes back normalized.
Instance parse_instance(const nlohmann::json& doc);
Instance parse_instance_text(const std::string& text);
Instance read_instance_file(const std::filesystem::path& path);

nlohmann::json trust_model_to_json(const TrustModel& model);
TrustModel trust_model_from_json(const nlohmann::json& doc, std::size_t num_agents);

nlohmann::json instance_to_json(const ReportProfile& profile, const TrustModel& model);
void write_instance_file(const std::filesystem::path& path, const ReportProfile& profile, const TrustModel& model);

/// Contingent schedule: per agent, (pattern, payment) for every completion pattern.
nlohmann::json schedule_to_json(const PaymentSchedule& schedule, const TrustTable* table = nullptr);
nlohmann::json audit_to_json(const AuditReport& report);

}  // namespace trustclear
