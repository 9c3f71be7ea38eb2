// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "doctest.h"
#include "evsim/charging_fsm.hpp"

using namespace evsim;
namespace ev = evsim::session_event;

namespace {

EvConfig ev_cfg() { return EvConfig{"ev-1", 50, 0.2, 7, 0, "evse-1", std::nullopt}; }

EvseSlot slot() {
  EvseSlot s;
  s.config.id = "evse-1";
  s.config.max_power_kw = 22;
  return s;
}

// Answers the outstanding request the way the EVSE daemon would.
Transition answer(const Transition& t, double now) {
  REQUIRE(!t.outbox.empty());
  const EvseAnswer a = evse_answer(t.outbox.back(), slot().config, 0.2, 5.0);
  return advance(t.session, ev::MsgArrived{a.response}, at_seconds(now));
}

Transition to_charge(double start = 5.0) {
  EvseSlot sl = slot();
  Transition t = plug_in(ev_cfg(), sl, at_seconds(start));
  t = answer(t, start + 0.2);  // -> Initialize
  t = answer(t, start + 0.4);  // -> Check
  t = answer(t, start + 0.6);  // -> Charge
  REQUIRE(t.session.state == SessionState::Charge);
  return t;
}

std::size_t count_kind(const Transition& t, RecordKind k) {
  std::size_t n = 0;
  for (const auto& r : t.records) n += r.kind == k;
  return n;
}

}  // namespace

TEST_CASE("plug_in on a free EVSE enters Mated") {
  EvseSlot sl = slot();
  const Transition t = plug_in(ev_cfg(), sl, at_seconds(5));
  CHECK(t.session.state == SessionState::Mated);
  CHECK(t.session.state_entered_at.seconds == 5.0);
  CHECK(sl.occupied());
  REQUIRE(t.outbox.size() == 1);
  CHECK(t.outbox[0].kind == V2gKind::SessionSetupReq);
  CHECK(count_kind(t, RecordKind::StateTransition) == 1);
}

TEST_CASE("plug_in on an EVSE held in Charge throws") {
  EvseSlot sl = slot();
  sl.session = to_charge().session;
  CHECK_THROWS_AS(plug_in(ev_cfg(), sl, at_seconds(10)), EvseOccupied);
}

TEST_CASE("sequential sessions get distinct ids") {
  EvseSlot sl = slot();
  const Transition a = plug_in(ev_cfg(), sl, at_seconds(0));
  sl.session = plug_out(a.session, at_seconds(1)).session;
  const Transition b = plug_in(ev_cfg(), sl, at_seconds(2));
  CHECK(a.session.id != b.session.id);
}

TEST_CASE("Check with passing checks enters Charge awaiting ChargingStatusRes") {
  const Transition t = to_charge(5.0);
  REQUIRE(t.session.awaiting);
  CHECK(t.session.awaiting->kind == V2gKind::ChargingStatusRes);
  CHECK(t.session.awaiting->deadline.seconds == doctest::Approx(5.6 + 2.0));
  CHECK(t.session.delivered_kw == 7.0);
}

TEST_CASE("recoverable fault in Charge falls back to Mated with no power") {
  const Transition t =
      advance(to_charge().session, ev::FaultRaised{"overheat", Severity::Recoverable}, at_seconds(10));
  CHECK(t.session.state == SessionState::Mated);
  CHECK(t.session.delivered_kw == 0.0);
}

TEST_CASE("PlugOut in Charge goes straight to Unmated with one broken-connection record") {
  const Transition t = advance(to_charge().session, ev::PlugOut{}, at_seconds(10));
  CHECK(t.session.state == SessionState::Unmated);
  std::size_t broken = 0;
  for (const auto& r : t.records) {
    broken += r.kind == RecordKind::Error && r.payload.value("code", "") == "broken-connection";
  }
  CHECK(broken == 1);
  CHECK(t.session.error_flag == "abrupt-disconnect");
}

TEST_CASE("fault edges from the handshake states") {
  EvseSlot sl = slot();
  Transition t = plug_in(ev_cfg(), sl, at_seconds(0));
  t = answer(t, 0.2);
  REQUIRE(t.session.state == SessionState::Initialize);
  CHECK(advance(t.session, ev::FaultRaised{"spoofed-auth", Severity::Recoverable}, at_seconds(0.3))
            .session.state == SessionState::Mated);
  t = answer(t, 0.4);
  REQUIRE(t.session.state == SessionState::Check);
  CHECK(advance(t.session, ev::FaultRaised{"iso", Severity::Recoverable}, at_seconds(0.5)).session.state ==
        SessionState::Initialize);
  CHECK(advance(t.session, ev::FaultRaised{"iso", Severity::Abort}, at_seconds(0.5)).session.state ==
        SessionState::Unmated);
}

TEST_CASE("emergency from Charge skips power-down") {
  const Transition t = advance(to_charge().session, ev::FaultRaised{"arc", Severity::Emergency}, at_seconds(9));
  CHECK(t.session.state == SessionState::Unmated);
  CHECK(t.session.error_flag.has_value());
}

TEST_CASE("SocFull and UserInterrupt lead to PowerDown then Unmated") {
  for (const SessionEvent& e : {SessionEvent{ev::SocFull{}}, SessionEvent{ev::UserInterrupt{}}}) {
    Transition t = advance(to_charge().session, e, at_seconds(20));
    CHECK(t.session.state == SessionState::PowerDown);
    REQUIRE(t.outbox.size() == 1);
    CHECK(t.outbox[0].kind == V2gKind::SessionStopReq);
    t = answer(t, 25);
    CHECK(t.session.state == SessionState::Unmated);
    CHECK(!t.session.error_flag);
  }
}

TEST_CASE("charging_tick near full follows the battery formula") {
  ChargingSession s = to_charge().session;
  s.delivered_kw = 22;
  s.awaiting.reset();
  // One second at 22 kW adds 22 / (3600 * 50) of charge.
  const TickResult one = charging_tick(s, ev_cfg(), BatteryState{0.999, 50}, at_seconds(30), 1.0);
  CHECK(one.battery.soc == doctest::Approx(0.999 + 22.0 / 180000.0).epsilon(1e-12));
  CHECK(!one.soc_full);
  CHECK(one.request.kind == V2gKind::ChargingStatusReq);
  REQUIRE(one.session.awaiting);
  CHECK(one.session.awaiting->deadline.seconds == 32.0);

  const TickResult nine = charging_tick(s, ev_cfg(), BatteryState{0.999, 50}, at_seconds(30), 9.0);
  CHECK(nine.battery.soc == 1.0);
  CHECK(nine.soc_full);
  const Transition down = advance(nine.session, session_event::SocFull{}, at_seconds(39));
  CHECK(down.session.state == SessionState::PowerDown);
}

TEST_CASE("zero-power tick still sends the heartbeat") {
  ChargingSession s = to_charge().session;
  s.delivered_kw = 0;
  const TickResult r = charging_tick(s, ev_cfg(), BatteryState{0.4, 50}, at_seconds(30), 1.0);
  CHECK(r.battery.soc == 0.4);
  CHECK(r.request.kind == V2gKind::ChargingStatusReq);
  CHECK(!r.soc_full);
}

TEST_CASE("unanswered status request times out to Unmated") {
  const Transition t = to_charge(5.0);
  const SimTime deadline = t.session.awaiting->deadline;
  const Transition out = advance(t.session, ev::Timeout{}, deadline);
  CHECK(out.session.state == SessionState::Unmated);
  CHECK(out.session.state_entered_at.seconds == deadline.seconds);
  CHECK(out.session.error_flag == "timeout:ChargingStatusRes");
}

TEST_CASE("charging_tick outside Charge is illegal") {
  EvseSlot sl = slot();
  const Transition t = plug_in(ev_cfg(), sl, at_seconds(0));
  CHECK_THROWS_AS(charging_tick(t.session, ev_cfg(), BatteryState{0.1, 50}, at_seconds(1), 1.0), IllegalEvent);
}

TEST_CASE("plug_out variants") {
  Transition t = advance(to_charge().session, ev::SocFull{}, at_seconds(20));
  const Transition clean = plug_out(t.session, at_seconds(25));
  CHECK(clean.session.state == SessionState::Unmated);
  CHECK(!clean.session.error_flag);

  const Transition abrupt = plug_out(to_charge().session, at_seconds(9));
  CHECK(abrupt.session.error_flag == "abrupt-disconnect");

  const Transition idem = plug_out(clean.session, at_seconds(30));
  CHECK(idem.session == clean.session);
  CHECK(idem.records.empty());
}

TEST_CASE("events outside the table are rejected") {
  EvseSlot sl = slot();
  const Transition t = plug_in(ev_cfg(), sl, at_seconds(0));
  CHECK_THROWS_AS(advance(t.session, ev::SocFull{}, at_seconds(1)), IllegalEvent);
  CHECK_THROWS_AS(advance(t.session, ev::PlugIn{}, at_seconds(1)), IllegalEvent);
  const V2gMessage wrong{V2gKind::CableCheckRes, t.session.id, Json::object()};
  CHECK_THROWS_AS(advance(t.session, ev::MsgArrived{wrong}, at_seconds(1)), IllegalEvent);
  const Transition dead = plug_out(t.session, at_seconds(1));
  CHECK_THROWS_AS(advance(dead.session, ev::Timeout{}, at_seconds(2)), IllegalEvent);
  CHECK_THROWS_AS(advance(dead.session, ev::FaultRaised{"x", Severity::Abort}, at_seconds(2)), IllegalEvent);
}

TEST_CASE("recoverable faults from Initialize or Check never land in Charge") {
  EvseSlot sl = slot();
  Transition t = plug_in(ev_cfg(), sl, at_seconds(0));
  t = answer(t, 0.2);
  for (int i = 0; i < 2; ++i) {
    const Transition f = advance(t.session, ev::FaultRaised{"cable", Severity::Recoverable}, at_seconds(1));
    CHECK(f.session.state != SessionState::Charge);
    CHECK(f.session.delivered_kw == 0.0);
    t = answer(t, 0.4);
  }
}
