// SPDX-License-Identifier: Apache-2.0
#include <numeric>

#include "doctest.h"
#include "evsim/attack.hpp"

using namespace evsim;

namespace {

Scenario bench() {
  Scenario s;
  s.schedule_end_s = 86400;
  s.evses.push_back(EvseConfig{"evse-1", 22, "bench"});
  s.evses.push_back(EvseConfig{"evse-2", 150, "depot"});
  return s;
}

FuzzRecord rec(OcppAction a, int bucket, double latency) {
  FuzzRecord r;
  r.action = a;
  r.outcome = OutcomeCode::from_bucket(bucket);
  r.latency_s = latency;
  r.server_alive_after = bucket != 4;
  return r;
}

}  // namespace

TEST_CASE("schedule examples") {
  const Scenario s = bench();
  CHECK(schedule({}, s).empty());

  const std::vector<AttackPlan> l1 = {{AttackKind::BrokenWireL1, "evse-1-cable", 18, std::nullopt, Json::object()}};
  const auto e1 = schedule(l1, s);
  REQUIRE(e1.size() == 1);
  CHECK(e1[0] == AttackEvent{18.0, 0, true});

  const std::vector<AttackPlan> l3 = {{AttackKind::BrokenWireL3, "*", 43200, 28800.0, Json::object()}};
  const auto e3 = schedule(l3, s);
  REQUIRE(e3.size() == 2);
  CHECK(e3[0].at / 3600 == 12.0);
  CHECK(e3[0].is_start);
  CHECK(e3[1].at / 3600 == 20.0);
  CHECK(!e3[1].is_start);
}

TEST_CASE("schedule orders by time, ends before starts, and rejects ghosts") {
  const Scenario s = bench();
  const std::vector<AttackPlan> plans = {
      {AttackKind::BrokenWireL3, "evse-2", 100, 50.0, Json::object()},
      {AttackKind::BrokenWireL3, "evse-1", 10, 90.0, Json::object()},
      {AttackKind::Fuzzification, "csms", 5, std::nullopt, Json{{"strategy", "random"}}}};
  const auto ev = schedule(plans, s);
  REQUIRE(ev.size() == 5);
  CHECK(ev[0] == AttackEvent{5, 2, true});
  CHECK(ev[1] == AttackEvent{10, 1, true});
  CHECK(ev[2] == AttackEvent{100, 1, false});
  CHECK(ev[3] == AttackEvent{100, 0, true});
  CHECK(ev[4] == AttackEvent{150, 0, false});

  const std::vector<AttackPlan> ghost = {{AttackKind::BrokenWireL1, "ghost", 1, std::nullopt, Json::object()}};
  CHECK_THROWS_AS(schedule(ghost, s), UnresolvedTarget);
}

TEST_CASE("exec_broken_wire_l1 severs and records layer L1") {
  SimLink l;
  l.id = "evse-1-cable";
  const TelemetryRecord r = exec_broken_wire_l1(l, at_seconds(18));
  CHECK(l.severed);
  CHECK(r.kind == RecordKind::AttackStart);
  CHECK(r.layer == Layer::L1);
  CHECK(r.ts == 18.0);
  CHECK(r.payload["layers"] == "L1-L2");
}

TEST_CASE("power disruption arithmetic") {
  Rng rng(1);
  const std::vector<std::string> ids = {"evse-1"};
  const PowerModifier m = exec_broken_wire_l3(ids, PowerDisruptionParams{0.45, 0.0}, 43200, 72000);
  CHECK(35.0 * m.factor("evse-1", 16 * 3600.0, rng) == doctest::Approx(19.25).epsilon(1e-12));
  const PowerModifier half = exec_broken_wire_l3(ids, PowerDisruptionParams{0.5, 0.0}, 0, 10);
  CHECK(30.0 * half.factor("evse-1", 5, rng) == 15.0);

  Rng untouched(1);
  Rng probe(1);
  CHECK(m.factor("evse-1", 43199.999, probe) == 1.0);
  CHECK(m.factor("evse-1", 72000, probe) == 1.0);
  CHECK(m.factor("evse-2", 50000, probe) == 1.0);
  CHECK(probe() == untouched());

  CHECK_THROWS_AS(PowerModifier({"evse-1"}, PowerDisruptionParams{}, 10, 10), std::invalid_argument);
}

TEST_CASE("jittered factor stays in its band") {
  Rng rng(3);
  const PowerModifier m({"a"}, PowerDisruptionParams{0.45, 0.03}, 0, 100);
  for (int i = 0; i < 5000; ++i) {
    const double f = m.factor("a", 50, rng);
    CHECK(f >= 0.52);
    CHECK(f <= 0.58);
  }
}

TEST_CASE("classify examples") {
  CHECK(classify("", OcppFrame{CallResult{"m", Json{{"currentTime", "T"}}}}, 0.01, true) == OutcomeCode{3, 1});
  CHECK(classify("", std::nullopt, 0.0, false) == OutcomeCode{3, 4});
  CHECK(classify("", OcppFrame{CallError{"m", "FormationViolation", "", Json::object()}}, 0.0, true) ==
        OutcomeCode{4, 5});
}

TEST_CASE("classify over every constructed response shape") {
  std::vector<std::optional<OcppFrame>> shapes = {std::nullopt};
  for (const Json& p : {Json::object(), Json{{"currentTime", "T"}}, Json{{"status", "Accepted"}},
                        Json{{"status", "Rejected"}}, Json{{"status", "UnknownVendorId"}},
                        Json{{"idTokenInfo", {{"status", "Accepted"}}}},
                        Json{{"idTokenInfo", {{"status", "Unknown"}}}},
                        Json{{"statusInfo", {{"reasonCode", "NotImplemented"}}}},
                        Json{{"statusInfo", {{"reasonCode", "JsonParse"}}}},
                        Json{{"status", "Accepted"}, {"error", "JsonParse"}}}) {
    shapes.push_back(OcppFrame{CallResult{"m", p}});
  }
  for (const char* code : {"FormatViolation", "FormationViolation", "SecurityError", "TypeConstraintViolation",
                           "OccurrenceConstraintViolation", "ProtocolError", "PropertyConstraintViolation",
                           "InternalError", "GenericError", "NotImplemented", "NotSupported"}) {
    shapes.push_back(OcppFrame{CallError{"m", code, "", Json::object()}});
    shapes.push_back(OcppFrame{CallError{"m", code, "", Json{{"unknownEntity", ".x"}}}});
  }
  std::set<int> buckets;
  for (const auto& s : shapes) {
    for (bool alive : {true, false}) {
      const OutcomeCode c = classify("", s, 0.01, alive);
      CHECK(c.bucket >= 1);
      CHECK(c.bucket <= 7);
      CHECK(c.wire_type == (c.bucket <= 4 ? 3 : 4));
      CHECK(classify("", s, 0.01, alive) == c);
      if (!alive) CHECK(c.bucket == 4);
      buckets.insert(c.bucket);
    }
  }
  CHECK(buckets.size() == 7);
  CHECK_THROWS_AS(classify("", OcppFrame{Call{"m", OcppAction::Heartbeat, Json::object()}}, 0, true),
                  Unclassifiable);
}

TEST_CASE("summarize_fuzz examples") {
  CHECK(summarize_fuzz({}).empty());

  std::vector<FuzzRecord> hb(100, rec(OcppAction::Heartbeat, 1, 0.010));
  const auto rows = summarize_fuzz(hb);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].pct[0] == 100.0);
  CHECK(rows[0].mean_latency_s * 1000 == doctest::Approx(10.0));

  std::vector<FuzzRecord> pf;
  for (int i = 0; i < 34; ++i) pf.push_back(rec(OcppAction::PublishFirmwareStatusNotificationReq, 2, 0.01));
  for (int i = 0; i < 66; ++i) pf.push_back(rec(OcppAction::PublishFirmwareStatusNotificationReq, 5, 0.01));
  const auto split = summarize_fuzz(pf);
  REQUIRE(split.size() == 1);
  CHECK(split[0].pct[1] == doctest::Approx(34.0));
  CHECK(split[0].pct[4] == doctest::Approx(66.0));
  CHECK(std::accumulate(split[0].pct.begin(), split[0].pct.end(), 0.0) == doctest::Approx(100.0));

  const std::string csv = fuzz_summary_csv(rows);
  CHECK(csv == "action,pct_3_1,pct_3_2,pct_3_3,pct_3_4,pct_4_5,pct_4_6,pct_4_7,mean_latency_ms\n"
               "Heartbeat,100.00,0.00,0.00,0.00,0.00,0.00,0.00,10.000\n");
}

TEST_CASE("fuzz records survive JSON") {
  FuzzRecord r = rec(OcppAction::ClearCacheReq, 7, 0.003);
  r.seq = 12;
  r.mutation = MutationMode::WrongType;
  r.sent = R"([2,"fz-00000001","ClearCache",{}])";
  r.hint_bucket = 7;
  r.t_s = 1.5;
  CHECK(fuzz_record_from_json(fuzz_record_to_json(r)) == r);
  CHECK(OutcomeCode::from_bucket(6).label() == "(4,6)");
  CHECK_THROWS(OutcomeCode::from_bucket(0));
}
