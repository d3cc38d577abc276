#include "dermeval/triage.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <sstream>

#include "json.hpp"

namespace dermeval {

const char* to_string(Zone zone) {
  switch (zone) {
    case Zone::Green: return "green";
    case Zone::Yellow: return "yellow";
    case Zone::Red: return "red";
  }
  return "green";
}

const char* to_string(Urgency u) {
  switch (u) {
    case Urgency::UrgentOncologist3d: return "oncologist-urgent-3d";
    case Urgency::OncoDermatologist: return "onco-dermatologist";
    case Urgency::ScheduledDermatologist: return "dermatologist-scheduled";
  }
  return "oncologist-urgent-3d";
}

Zone route(double p, double green_threshold, double red_threshold) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::ProbabilityOutOfRange, "p = " + std::to_string(p));
  if (p < green_threshold) return Zone::Green;
  if (p < red_threshold) return Zone::Yellow;
  return Zone::Red;
}

RoutingDecision zone_action(Zone zone, std::optional<Stage2Class> stage2_class) {
  RoutingDecision decision;
  decision.zone = zone;
  switch (zone) {
    case Zone::Green:
      decision.actions = {"record-in-medical-record", "inform-patient",
                          "re-examine-in-6-12-months"};
      break;
    case Zone::Yellow:
      decision.actions = {"dermatologist-referral", "repeat-dermoscopy",
                          "biopsy-if-zone-repeats"};
      break;
    case Zone::Red:
      decision.actions = {"urgent-referral", "priority-appointment", "biopsy-or-excision"};
      if (!stage2_class) {
        decision.audit = "missing-stage2-class";
        break;
      }
      switch (*stage2_class) {
        case Stage2Class::MEL:
          decision.urgency = Urgency::UrgentOncologist3d;
          decision.urgency_note = "recommended within 3 working days";
          break;
        case Stage2Class::SCC:
          decision.urgency = Urgency::OncoDermatologist;
          break;
        case Stage2Class::BCC:
          decision.urgency = Urgency::ScheduledDermatologist;
          decision.urgency_note = "scheduled consultation followed by biopsy";
          break;
      }
      break;
  }
  return decision;
}

// ---------------------------------------------------------------------------
// Dates
// ---------------------------------------------------------------------------

namespace {

std::chrono::sys_days to_sys_days(const Date& d) {
  return std::chrono::sys_days(std::chrono::year_month_day(
      std::chrono::year(d.year), std::chrono::month(d.month), std::chrono::day(d.day)));
}

Date from_sys_days(std::chrono::sys_days sd) {
  std::chrono::year_month_day ymd(sd);
  return Date{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

}  // namespace

Date parse_date(const std::string& iso) {
  Date d;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(iso);
  if (!(in >> d.year >> dash1 >> d.month >> dash2 >> d.day) || dash1 != '-' ||
      dash2 != '-' || !in.eof())
    throw Error(ErrorCode::ParseError, "expected YYYY-MM-DD, got '" + iso + "'");
  std::chrono::year_month_day ymd{std::chrono::year(d.year), std::chrono::month(d.month),
                                  std::chrono::day(d.day)};
  if (!ymd.ok()) throw Error(ErrorCode::ParseError, "invalid calendar date '" + iso + "'");
  return d;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

Date add_days(const Date& d, int days) {
  return from_sys_days(to_sys_days(d) + std::chrono::days(days));
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

RegistryEntry make_registry_entry(const std::string& case_id, Zone zone,
                                  const Date& decision_date, bool referral_issued,
                                  std::optional<Urgency> urgency) {
  RegistryEntry entry;
  entry.case_id = case_id;
  entry.zone = zone;
  entry.decision_date = decision_date;
  entry.control_date = add_days(decision_date, kControlIntervalDays);
  entry.referral_issued = referral_issued;
  entry.urgency = urgency;
  return entry;
}

void Registry::register_case(const RegistryEntry& entry) {
  if (entry.zone == Zone::Green)
    throw Error(ErrorCode::GreenZoneNotRegistrable,
                entry.case_id + ": only yellow and red cases enter the registry");
  if (entry.control_date != add_days(entry.decision_date, kControlIntervalDays))
    throw Error(ErrorCode::InvariantViolation,
                entry.case_id + ": control date is not decision date + 28 days");

  auto it = live_.find(entry.case_id);
  if (it != live_.end()) {
    audit_.push_back({entry.case_id, "superseded by re-registration", it->second});
    RegistryEntry updated = entry;
    updated.registration_count = it->second.registration_count + 1;
    it->second = updated;
  } else {
    live_.emplace(entry.case_id, entry);
  }
}

bool Registry::confirm_attendance(const std::string& case_id, const Date&) {
  auto it = live_.find(case_id);
  if (it == live_.end()) return false;
  it->second.attendance_confirmed = true;
  return true;
}

std::vector<RegistryEntry> Registry::followup_due(const Date& today) const {
  std::vector<RegistryEntry> due;
  for (const auto& [id, entry] : live_) {
    if (!entry.attendance_confirmed && entry.control_date <= today) due.push_back(entry);
  }
  std::stable_sort(due.begin(), due.end(), [](const RegistryEntry& a, const RegistryEntry& b) {
    return a.control_date != b.control_date ? a.control_date < b.control_date
                                            : a.case_id < b.case_id;
  });
  return due;
}

std::string Registry::register_event_line(const RegistryEntry& entry) {
  nlohmann::json j;
  j["event"] = "register";
  j["case_id"] = entry.case_id;
  j["zone"] = to_string(entry.zone);
  j["decision_date"] = format_date(entry.decision_date);
  j["control_date"] = format_date(entry.control_date);
  j["referral_issued"] = entry.referral_issued;
  if (entry.urgency) j["urgency"] = to_string(*entry.urgency);
  return j.dump();
}

std::string Registry::confirm_event_line(const std::string& case_id, const Date& date) {
  nlohmann::json j;
  j["event"] = "confirm-attendance";
  j["case_id"] = case_id;
  j["date"] = format_date(date);
  return j.dump();
}

Registry Registry::replay(std::istream& event_log) {
  Registry registry;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(event_log, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  "registry log line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string event = j.value("event", "");
    if (event == "register") {
      const std::string zone_name = j.at("zone").get<std::string>();
      Zone zone = Zone::Yellow;
      if (zone_name == "red") zone = Zone::Red;
      else if (zone_name == "yellow") zone = Zone::Yellow;
      else if (zone_name == "green") zone = Zone::Green;
      else
        throw Error(ErrorCode::ParseError,
                    "registry log line " + std::to_string(line_no) + ": zone '" +
                        zone_name + "'");
      std::optional<Urgency> urgency;
      if (j.contains("urgency")) {
        const std::string u = j["urgency"].get<std::string>();
        if (u == "oncologist-urgent-3d") urgency = Urgency::UrgentOncologist3d;
        else if (u == "onco-dermatologist") urgency = Urgency::OncoDermatologist;
        else if (u == "dermatologist-scheduled") urgency = Urgency::ScheduledDermatologist;
      }
      RegistryEntry entry =
          make_registry_entry(j.at("case_id").get<std::string>(), zone,
                              parse_date(j.at("decision_date").get<std::string>()),
                              j.value("referral_issued", false), urgency);
      registry.register_case(entry);
    } else if (event == "confirm-attendance") {
      registry.confirm_attendance(j.at("case_id").get<std::string>(),
                                  parse_date(j.at("date").get<std::string>()));
    } else {
      throw Error(ErrorCode::ParseError,
                  "registry log line " + std::to_string(line_no) + ": event '" + event + "'");
    }
  }
  return registry;
}

// ---------------------------------------------------------------------------
// Zone distribution
// ---------------------------------------------------------------------------

ZoneDistribution zone_distribution(const std::vector<double>& probabilities,
                                   double green_threshold, double red_threshold) {
  ZoneDistribution dist;
  for (double p : probabilities) {
    Zone z = route(p, green_threshold, red_threshold);
    ++dist.counts[std::size_t(z)];
  }
  dist.total = probabilities.size();
  if (dist.total > 0) {
    for (std::size_t i = 0; i < 3; ++i) {
      // half-up in tenths of a percent, exact integer arithmetic
      dist.percent_tenths[i] =
          std::int64_t((2000 * dist.counts[i] + dist.total) / (2 * dist.total));
    }
  }
  return dist;
}

}  // namespace dermeval
