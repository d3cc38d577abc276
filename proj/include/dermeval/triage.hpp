#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dermeval/error.hpp"
#include "dermeval/tensor_io.hpp"

namespace dermeval {

enum class Zone { Green, Yellow, Red };

const char* to_string(Zone zone);

/// Green iff p < green_threshold, Yellow iff green <= p < red, Red iff p >= red.
Zone route(double p, double green_threshold = 0.15, double red_threshold = 0.50);

enum class Urgency { UrgentOncologist3d, OncoDermatologist, ScheduledDermatologist };

const char* to_string(Urgency u);

struct RoutingDecision {
  Zone zone = Zone::Green;
  std::vector<std::string> actions;
  std::optional<Urgency> urgency;
  std::optional<std::string> urgency_note;  // e.g. the recommended referral window
  std::optional<std::string> audit;         // set for red-zone cases missing a class
};

RoutingDecision zone_action(Zone zone, std::optional<Stage2Class> stage2_class);

// ---------------------------------------------------------------------------
// Referral registry
// ---------------------------------------------------------------------------

struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;
};

Date parse_date(const std::string& iso);       // "YYYY-MM-DD"
std::string format_date(const Date& d);
Date add_days(const Date& d, int days);

inline constexpr int kControlIntervalDays = 28;

struct RegistryEntry {
  std::string case_id;
  Zone zone = Zone::Yellow;
  Date decision_date;
  Date control_date;  // always decision_date + 28 days
  bool referral_issued = false;
  bool attendance_confirmed = false;
  std::optional<Urgency> urgency;
  int registration_count = 1;
};

/// Builds an entry with the control date derived from the decision date.
RegistryEntry make_registry_entry(const std::string& case_id, Zone zone,
                                  const Date& decision_date, bool referral_issued,
                                  std::optional<Urgency> urgency);

struct AuditRecord {
  std::string case_id;
  std::string note;
  RegistryEntry superseded;
};

/// Live referral state reconstructed from an append-only event log. Writes
/// must be serialized by the caller (single-writer contract); the object
/// itself is a plain value.
class Registry {
 public:
  /// Upserts; a duplicate case_id replaces the live entry and records the
  /// prior version in the audit trail. Green entries are rejected.
  void register_case(const RegistryEntry& entry);

  /// Marks attendance on the live entry. Returns false when the case is
  /// unknown.
  bool confirm_attendance(const std::string& case_id, const Date& date);

  /// Entries with control_date <= today and attendance not confirmed,
  /// sorted by control date (case_id breaks ties).
  std::vector<RegistryEntry> followup_due(const Date& today) const;

  const std::map<std::string, RegistryEntry>& live() const { return live_; }
  const std::vector<AuditRecord>& audit_trail() const { return audit_; }

  // event-log persistence (one JSON object per line)
  static std::string register_event_line(const RegistryEntry& entry);
  static std::string confirm_event_line(const std::string& case_id, const Date& date);
  static Registry replay(std::istream& event_log);

 private:
  std::map<std::string, RegistryEntry> live_;
  std::vector<AuditRecord> audit_;
};

// ---------------------------------------------------------------------------
// Zone distribution
// ---------------------------------------------------------------------------

struct ZoneDistribution {
  std::array<std::uint64_t, 3> counts{0, 0, 0};  // green, yellow, red
  std::uint64_t total = 0;
  /// Percentages in tenths of a percent, rounded half-up; absent when the
  /// input is empty.
  std::array<std::optional<std::int64_t>, 3> percent_tenths;
};

ZoneDistribution zone_distribution(const std::vector<double>& probabilities,
                                   double green_threshold = 0.15,
                                   double red_threshold = 0.50);

}  // namespace dermeval
