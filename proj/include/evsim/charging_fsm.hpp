// SPDX-License-Identifier: Apache-2.0
// Charging session state machine between one EV and one EVSE.
//
// States and handshake phases:
//
//   Unmated --plug_in--> Mated --SessionSetup--> Initialize --PowerDelivery-->
//   Check --CableCheck--> Charge --(SocFull|UserInterrupt)--> PowerDown
//   --SessionStop after ramp--> Unmated
//
// Fault edges: Initialize/Charge recoverable -> Mated (handshake restarts),
// Check recoverable -> Initialize (retry), abort or emergency -> Unmated,
// Charge PlugOut -> Unmated without a power-down, any Timeout -> Unmated.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "evsim/core_model.hpp"
#include "evsim/sim_time.hpp"
#include "evsim/telemetry.hpp"

namespace evsim {

enum class SessionState { Unmated, Mated, Initialize, Check, Charge, PowerDown };

std::string_view state_name(SessionState s);
std::optional<SessionState> state_from_name(std::string_view name);

enum class V2gKind {
  SessionSetupReq,
  SessionSetupRes,
  CableCheckReq,
  CableCheckRes,
  PowerDeliveryReq,
  PowerDeliveryRes,
  ChargingStatusReq,
  ChargingStatusRes,
  SessionStopReq,
  SessionStopRes,
};

std::string_view v2g_kind_name(V2gKind k);
std::optional<V2gKind> v2g_kind_from_name(std::string_view name);
bool is_request(V2gKind k);
V2gKind response_for(V2gKind request);

struct V2gMessage {
  V2gKind kind{};
  std::string session_id;
  Json payload = Json::object();
  bool operator==(const V2gMessage&) const = default;
};

Json v2g_to_json(const V2gMessage& m);
V2gMessage v2g_from_json(const Json& j);

struct Awaiting {
  V2gKind kind{};
  SimTime deadline;
  bool operator==(const Awaiting&) const = default;
};

struct SessionLimits {
  double power_limit_kw = 0.0;  // min(EV rate, EVSE power)
  double charge_status_timeout_s = 2.0;
  double state_timeout_s = 2.0;
  double power_down_ramp_s = 5.0;
  bool operator==(const SessionLimits&) const = default;
};

struct ChargingSession {
  std::string id;
  SessionState state = SessionState::Unmated;
  std::string ev_id;
  std::string evse_id;
  SimTime state_entered_at;
  std::optional<Awaiting> awaiting;
  double delivered_kw = 0.0;
  std::optional<std::string> error_flag;
  SessionLimits limits;

  bool operator==(const ChargingSession&) const = default;
};

enum class Severity { Recoverable, Abort, Emergency };

std::string_view severity_name(Severity s);

namespace session_event {
struct PlugIn {};
struct PlugOut {};
struct MsgArrived {
  V2gMessage msg;
};
struct Timeout {};
struct FaultRaised {
  std::string code;
  Severity severity = Severity::Recoverable;
};
struct SocFull {};
struct UserInterrupt {};
}  // namespace session_event

using SessionEvent =
    std::variant<session_event::PlugIn, session_event::PlugOut, session_event::MsgArrived,
                 session_event::Timeout, session_event::FaultRaised, session_event::SocFull,
                 session_event::UserInterrupt>;

std::string_view event_name(const SessionEvent& ev);

/// Event not accepted by the transition table for the session's state.
class IllegalEvent : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EvseOccupied : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Transition {
  ChargingSession session;
  std::vector<V2gMessage> outbox;
  std::vector<TelemetryRecord> records;
};

// An EVSE and the session it currently holds, if any. The EVSE is free when
// it holds no session or its session is Unmated.
struct EvseSlot {
  EvseConfig config;
  std::optional<ChargingSession> session;
  std::uint64_t sessions_started = 0;

  bool occupied() const { return session && session->state != SessionState::Unmated; }
};

/// Mates `ev` to the slot's EVSE: new session in Mated with the
/// SessionSetupReq handshake already sent. Throws EvseOccupied.
Transition plug_in(const EvConfig& ev, EvseSlot& slot, SimTime now, double power_down_ramp_s = 5.0);

/// Applies the transition table. Throws IllegalEvent for events the table
/// does not accept in the current state.
Transition advance(const ChargingSession& s, const SessionEvent& ev, SimTime now);

bool is_legal(const ChargingSession& s, const SessionEvent& ev);

struct TickResult {
  ChargingSession session;
  V2gMessage request;
  BatteryState battery;
  bool soc_full = false;
  double effective_kw = 0.0;
};

/// One Charge-state tick: sends ChargingStatusReq, integrates the battery at
/// delivered_kw * power_scale over dt_s. Requires state Charge.
TickResult charging_tick(const ChargingSession& s, const EvConfig& ev_cfg, BatteryState b,
                         SimTime now, double dt_s, double power_scale = 1.0);

/// Physical unplug. Clean from Mated/PowerDown, abrupt (error_flag
/// "abrupt-disconnect") from the active states, idempotent from Unmated.
Transition plug_out(const ChargingSession& s, SimTime now);

struct EvseAnswer {
  V2gMessage response;
  double delay_s = 0.0;
};

/// The EVSE daemon's reply to an EV request and the processing delay before
/// it is sent.
EvseAnswer evse_answer(const V2gMessage& request, const EvseConfig& evse, double handshake_delay_s,
                       double power_down_ramp_s);

}  // namespace evsim
