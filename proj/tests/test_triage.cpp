#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "dermeval/triage.hpp"

using namespace dermeval;

TEST_CASE("route") {
  CHECK(route(0.71) == Zone::Red);
  CHECK(route(0.15) == Zone::Yellow);
  CHECK(route(0.50) == Zone::Red);
  CHECK(route(0.0) == Zone::Green);
  CHECK(route(1.0) == Zone::Red);
  CHECK(route(0.1499) == Zone::Green);
  CHECK(route(0.4999) == Zone::Yellow);

  SUBCASE("probability outside [0,1]") {
    try {
      route(1.01);
      FAIL("expected ProbabilityOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProbabilityOutOfRange);
    }
    CHECK_THROWS_AS(route(-0.01), Error);
  }

  SUBCASE("monotone step function") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      double p1 = uni(rng), p2 = uni(rng);
      if (p1 > p2) std::swap(p1, p2);
      CHECK(int(route(p1)) <= int(route(p2)));
    }
  }

  SUBCASE("custom thresholds") {
    CHECK(route(0.2, 0.25, 0.6) == Zone::Green);
    CHECK(route(0.25, 0.25, 0.6) == Zone::Yellow);
    CHECK(route(0.6, 0.25, 0.6) == Zone::Red);
  }
}

TEST_CASE("zone_action") {
  SUBCASE("red-zone urgency by nosology") {
    CHECK(*zone_action(Zone::Red, Stage2Class::MEL).urgency == Urgency::UrgentOncologist3d);
    CHECK(*zone_action(Zone::Red, Stage2Class::SCC).urgency == Urgency::OncoDermatologist);
    CHECK(*zone_action(Zone::Red, Stage2Class::BCC).urgency ==
          Urgency::ScheduledDermatologist);
  }

  SUBCASE("melanoma urgency carries the referral window note") {
    auto d = zone_action(Zone::Red, Stage2Class::MEL);
    REQUIRE(d.urgency_note.has_value());
    CHECK(d.urgency_note->find("3 working days") != std::string::npos);
  }

  SUBCASE("green zone: record, inform, recheck window") {
    auto d = zone_action(Zone::Green, std::nullopt);
    CHECK(!d.urgency.has_value());
    REQUIRE(d.actions.size() == 3);
    CHECK(d.actions[2] == "re-examine-in-6-12-months");
  }

  SUBCASE("yellow zone includes the repeat-biopsy flag") {
    auto d = zone_action(Zone::Yellow, std::nullopt);
    CHECK(d.actions[2] == "biopsy-if-zone-repeats");
    CHECK(!d.audit.has_value());
  }

  SUBCASE("red without a stage-2 class is flagged, not rejected") {
    auto d = zone_action(Zone::Red, std::nullopt);
    CHECK(!d.urgency.has_value());
    REQUIRE(d.audit.has_value());
    CHECK(*d.audit == "missing-stage2-class");
    CHECK(d.actions[0] == "urgent-referral");
  }

  SUBCASE("urgency present iff red with a class") {
    CHECK(!zone_action(Zone::Yellow, Stage2Class::MEL).urgency.has_value());
    CHECK(!zone_action(Zone::Green, Stage2Class::BCC).urgency.has_value());
  }
}

TEST_CASE("calendar dates") {
  CHECK(format_date(add_days(parse_date("2025-12-26"), 28)) == "2026-01-23");
  CHECK(format_date(add_days(parse_date("2026-02-01"), 28)) == "2026-03-01");
  CHECK(parse_date("2026-04-24") == Date{2026, 4, 24});
  CHECK_THROWS_AS(parse_date("not-a-date"), Error);
  CHECK_THROWS_AS(parse_date("2026-13-01"), Error);
  CHECK_THROWS_AS(parse_date("2026-02-30"), Error);
}

TEST_CASE("registry") {
  const Date decision = parse_date("2025-12-26");

  SUBCASE("entries get the 28-day control point") {
    auto entry = make_registry_entry("S8-001", Zone::Red, decision, true,
                                     Urgency::UrgentOncologist3d);
    CHECK(format_date(entry.control_date) == "2026-01-23");
  }

  SUBCASE("green cases are not registrable") {
    Registry registry;
    auto entry = make_registry_entry("g", Zone::Green, decision, false, std::nullopt);
    try {
      registry.register_case(entry);
      FAIL("expected GreenZoneNotRegistrable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GreenZoneNotRegistrable);
    }
  }

  SUBCASE("tampered control date is rejected") {
    Registry registry;
    auto entry = make_registry_entry("y", Zone::Yellow, decision, true, std::nullopt);
    entry.control_date = add_days(entry.control_date, 1);
    CHECK_THROWS_AS(registry.register_case(entry), Error);
  }

  SUBCASE("re-registration keeps one live entry and an audit record") {
    Registry registry;
    registry.register_case(make_registry_entry("y1", Zone::Yellow, decision, true, std::nullopt));
    registry.register_case(
        make_registry_entry("y1", Zone::Red, add_days(decision, 40), true,
                            Urgency::ScheduledDermatologist));
    CHECK(registry.live().size() == 1);
    REQUIRE(registry.audit_trail().size() == 1);
    CHECK(registry.audit_trail()[0].superseded.zone == Zone::Yellow);
    const auto& live = registry.live().at("y1");
    CHECK(live.zone == Zone::Red);
    CHECK(live.registration_count == 2);
  }

  SUBCASE("followup_due: inclusive boundary, confirmed cases drop out") {
    Registry registry;
    registry.register_case(make_registry_entry("a", Zone::Red, decision, true, std::nullopt));
    registry.register_case(
        make_registry_entry("b", Zone::Yellow, add_days(decision, 1), true, std::nullopt));
    registry.register_case(
        make_registry_entry("c", Zone::Yellow, add_days(decision, 60), true, std::nullopt));

    const Date control_a = parse_date("2026-01-23");
    auto due = registry.followup_due(control_a);
    REQUIRE(due.size() == 1);  // b's control point is one day later
    CHECK(due[0].case_id == "a");

    due = registry.followup_due(add_days(control_a, 1));
    CHECK(due.size() == 2);
    CHECK(due[0].case_id == "a");
    CHECK(due[1].case_id == "b");

    registry.confirm_attendance("a", add_days(control_a, 1));
    due = registry.followup_due(add_days(control_a, 1));
    REQUIRE(due.size() == 1);
    CHECK(due[0].case_id == "b");

    CHECK(!registry.confirm_attendance("unknown", control_a));
  }

  SUBCASE("empty registry yields an empty due list") {
    Registry registry;
    CHECK(registry.followup_due(parse_date("2030-01-01")).empty());
  }

  SUBCASE("event log round-trip") {
    Registry registry;
    auto entry =
        make_registry_entry("r1", Zone::Red, decision, true, Urgency::UrgentOncologist3d);
    registry.register_case(entry);

    std::ostringstream log;
    log << Registry::register_event_line(entry) << "\n";
    log << Registry::confirm_event_line("r1", add_days(decision, 30)) << "\n";

    std::istringstream in(log.str());
    Registry replayed = Registry::replay(in);
    REQUIRE(replayed.live().count("r1") == 1);
    const auto& live = replayed.live().at("r1");
    CHECK(live.zone == Zone::Red);
    CHECK(live.attendance_confirmed);
    CHECK(live.urgency == Urgency::UrgentOncologist3d);
    CHECK(format_date(live.control_date) == "2026-01-23");
  }
}

TEST_CASE("registry random event sequences preserve the invariants") {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    Registry registry;
    // shadow model: last registration per id + confirmation flag
    struct Shadow {
      Date control;
      bool confirmed = false;
    };
    std::map<std::string, Shadow> shadow;
    const Date base = parse_date("2026-01-01");

    const int ops = 1 + int(rng() % 30);
    for (int op = 0; op < ops; ++op) {
      const std::string id = "case" + std::to_string(rng() % 8);
      const Date date = add_days(base, int(rng() % 90));
      if (rng() % 3 != 0) {
        const Zone zone = rng() % 2 ? Zone::Yellow : Zone::Red;
        registry.register_case(make_registry_entry(id, zone, date, true, std::nullopt));
        shadow[id] = Shadow{add_days(date, 28), false};
      } else if (!shadow.empty()) {
        if (registry.confirm_attendance(id, date)) shadow.at(id).confirmed = true;
      }
    }

    CHECK(registry.live().size() == shadow.size());
    for (const auto& [id, entry] : registry.live()) {
      CHECK(entry.control_date == add_days(entry.decision_date, 28));
      CHECK(entry.control_date == shadow.at(id).control);
    }

    const Date today = add_days(base, 60);
    auto due = registry.followup_due(today);
    std::size_t expected = 0;
    for (const auto& [id, s] : shadow)
      if (!s.confirmed && s.control <= today) ++expected;
    CHECK(due.size() == expected);
  }
}

TEST_CASE("zone_distribution") {
  SUBCASE("empty input reports absent percentages") {
    auto dist = zone_distribution({});
    CHECK(dist.total == 0);
    CHECK(dist.counts == std::array<std::uint64_t, 3>{0, 0, 0});
    for (const auto& pct : dist.percent_tenths) CHECK(!pct.has_value());
  }

  SUBCASE("single probability") {
    auto dist = zone_distribution({0.2});
    CHECK(dist.counts == std::array<std::uint64_t, 3>{0, 1, 0});
    CHECK(*dist.percent_tenths[0] == 0);
    CHECK(*dist.percent_tenths[1] == 1000);
    CHECK(*dist.percent_tenths[2] == 0);
  }

  SUBCASE("counts sum to the input size; percentages sum to ~100") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> probs(1 + rng() % 300);
      for (auto& p : probs) p = uni(rng);
      auto dist = zone_distribution(probs);
      CHECK(dist.counts[0] + dist.counts[1] + dist.counts[2] == probs.size());
      const std::int64_t pct_sum =
          *dist.percent_tenths[0] + *dist.percent_tenths[1] + *dist.percent_tenths[2];
      CHECK(pct_sum >= 999);
      CHECK(pct_sum <= 1001);
    }
  }
}
