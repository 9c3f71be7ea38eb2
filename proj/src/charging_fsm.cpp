// SPDX-License-Identifier: Apache-2.0
#include "evsim/charging_fsm.hpp"

#include <algorithm>
#include <array>

namespace evsim {

namespace {

constexpr std::array<std::pair<SessionState, std::string_view>, 6> kStateNames = {{
    {SessionState::Unmated, "Unmated"},
    {SessionState::Mated, "Mated"},
    {SessionState::Initialize, "Initialize"},
    {SessionState::Check, "Check"},
    {SessionState::Charge, "Charge"},
    {SessionState::PowerDown, "PowerDown"},
}};

constexpr std::array<std::pair<V2gKind, std::string_view>, 10> kV2gNames = {{
    {V2gKind::SessionSetupReq, "SessionSetupReq"},
    {V2gKind::SessionSetupRes, "SessionSetupRes"},
    {V2gKind::CableCheckReq, "CableCheckReq"},
    {V2gKind::CableCheckRes, "CableCheckRes"},
    {V2gKind::PowerDeliveryReq, "PowerDeliveryReq"},
    {V2gKind::PowerDeliveryRes, "PowerDeliveryRes"},
    {V2gKind::ChargingStatusReq, "ChargingStatusReq"},
    {V2gKind::ChargingStatusRes, "ChargingStatusRes"},
    {V2gKind::SessionStopReq, "SessionStopReq"},
    {V2gKind::SessionStopRes, "SessionStopRes"},
}};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Accumulates the outputs of one transition.
class Step {
 public:
  Step(const ChargingSession& s, SimTime now) : now_(now) { t_.session = s; }

  ChargingSession& session() { return t_.session; }

  void enter(SessionState to, std::string_view reason) {
    ChargingSession& s = t_.session;
    Json payload = {{"from", std::string(state_name(s.state))},
                    {"to", std::string(state_name(to))},
                    {"reason", std::string(reason)}};
    s.state = to;
    s.state_entered_at = now_;
    s.awaiting.reset();
    if (to != SessionState::Charge) s.delivered_kw = 0.0;
    if (to == SessionState::Unmated && s.error_flag) payload["error_flag"] = *s.error_flag;
    record(RecordKind::StateTransition, std::move(payload));
  }

  void send(V2gKind kind, Json payload, double window_s) {
    ChargingSession& s = t_.session;
    t_.outbox.push_back(V2gMessage{kind, s.id, std::move(payload)});
    s.awaiting = Awaiting{response_for(kind), SimTime{now_.seconds + window_s, now_.seq}};
  }

  void record(RecordKind kind, Json payload) {
    TelemetryRecord r = make_record(now_.seconds, "evse:" + t_.session.evse_id, kind, std::move(payload));
    r.session_id = t_.session.id;
    t_.records.push_back(std::move(r));
  }

  // Merges extra fields into the most recent record.
  void annotate(const Json& extra) {
    if (!t_.records.empty()) t_.records.back().payload.update(extra);
  }

  Transition finish() { return std::move(t_); }

 private:
  Transition t_;
  SimTime now_;
};

void start_handshake(Step& step) {
  const ChargingSession& s = step.session();
  step.send(V2gKind::SessionSetupReq, Json{{"ev_id", s.ev_id}}, s.limits.state_timeout_s);
}

void request_power(Step& step) {
  const ChargingSession& s = step.session();
  step.send(V2gKind::PowerDeliveryReq, Json{{"requested_kw", s.limits.power_limit_kw}},
            s.limits.state_timeout_s);
}

void enter_charge(Step& step) {
  step.enter(SessionState::Charge, "checks-passed");
  ChargingSession& s = step.session();
  s.delivered_kw = s.limits.power_limit_kw;
  step.send(V2gKind::ChargingStatusReq, Json::object(), s.limits.charge_status_timeout_s);
}

void enter_power_down(Step& step, std::string_view reason) {
  const double from_kw = step.session().delivered_kw;
  step.enter(SessionState::PowerDown, reason);
  ChargingSession& s = step.session();
  step.send(V2gKind::SessionStopReq, Json{{"reason", std::string(reason)}},
            s.limits.power_down_ramp_s + s.limits.state_timeout_s);
  step.annotate(Json{{"ramp_from_kw", from_kw}, {"ramp_s", s.limits.power_down_ramp_s}});
}

void terminate(Step& step, std::string flag, std::string_view reason) {
  step.session().error_flag = std::move(flag);
  step.enter(SessionState::Unmated, reason);
}

[[noreturn]] void illegal(const ChargingSession& s, const SessionEvent& ev) {
  throw IllegalEvent("event " + std::string(event_name(ev)) + " not accepted in state " +
                     std::string(state_name(s.state)) + " (session " + s.id + ")");
}

void on_msg(Step& step, const ChargingSession& s, const V2gMessage& msg, const SessionEvent& ev) {
  if (!s.awaiting || s.awaiting->kind != msg.kind || msg.session_id != s.id) illegal(s, ev);
  switch (s.state) {
    case SessionState::Mated:
      step.enter(SessionState::Initialize, "session-setup-complete");
      request_power(step);
      return;
    case SessionState::Initialize: {
      ChargingSession& cur = step.session();
      if (msg.payload.contains("granted_kw") && msg.payload["granted_kw"].is_number()) {
        cur.limits.power_limit_kw =
            std::min(cur.limits.power_limit_kw, msg.payload["granted_kw"].get<double>());
      }
      step.enter(SessionState::Check, "parameters-exchanged");
      step.send(V2gKind::CableCheckReq, Json::object(), cur.limits.state_timeout_s);
      return;
    }
    case SessionState::Check:
      if (msg.payload.value("status", std::string("Ok")) == "Ok") {
        enter_charge(step);
      } else {
        step.record(RecordKind::Error, Json{{"code", "cable-check-failed"}, {"severity", "recoverable"}});
        step.enter(SessionState::Initialize, "cable-check-failed");
        request_power(step);
      }
      return;
    case SessionState::Charge:
      step.session().awaiting.reset();
      return;
    case SessionState::PowerDown:
      step.enter(SessionState::Unmated, "power-down-complete");
      return;
    case SessionState::Unmated:
      break;
  }
  illegal(s, ev);
}

void on_fault(Step& step, const ChargingSession& s, const session_event::FaultRaised& f,
              const SessionEvent& ev) {
  if (s.state == SessionState::Unmated) illegal(s, ev);
  step.record(RecordKind::Error, Json{{"code", f.code}, {"severity", std::string(severity_name(f.severity))}});
  if (f.severity != Severity::Recoverable) {
    terminate(step, "fault:" + f.code,
              f.severity == Severity::Emergency ? "emergency-shutdown" : "session-aborted");
    return;
  }
  switch (s.state) {
    case SessionState::Initialize:
      step.enter(SessionState::Mated, "recoverable-fault");
      start_handshake(step);
      return;
    case SessionState::Check:
      step.enter(SessionState::Initialize, "recoverable-fault");
      request_power(step);
      return;
    case SessionState::Charge:
      step.enter(SessionState::Mated, "recoverable-fault");
      start_handshake(step);
      return;
    case SessionState::Mated:
    case SessionState::PowerDown:
    case SessionState::Unmated:
      return;  // recorded, state kept
  }
}

}  // namespace

std::string_view state_name(SessionState s) {
  for (const auto& [state, name] : kStateNames) {
    if (state == s) return name;
  }
  return "?";
}

std::optional<SessionState> state_from_name(std::string_view name) {
  for (const auto& [state, n] : kStateNames) {
    if (n == name) return state;
  }
  return std::nullopt;
}

std::string_view v2g_kind_name(V2gKind k) {
  for (const auto& [kind, name] : kV2gNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<V2gKind> v2g_kind_from_name(std::string_view name) {
  for (const auto& [kind, n] : kV2gNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

bool is_request(V2gKind k) { return static_cast<int>(k) % 2 == 0; }

V2gKind response_for(V2gKind request) {
  if (!is_request(request)) throw std::invalid_argument("not a request kind");
  return static_cast<V2gKind>(static_cast<int>(request) + 1);
}

Json v2g_to_json(const V2gMessage& m) {
  return Json{{"kind", std::string(v2g_kind_name(m.kind))}, {"session_id", m.session_id}, {"payload", m.payload}};
}

V2gMessage v2g_from_json(const Json& j) {
  const auto kind = v2g_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown V2G message kind");
  return V2gMessage{*kind, j.at("session_id").get<std::string>(), j.value("payload", Json::object())};
}

std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::Recoverable: return "recoverable";
    case Severity::Abort: return "abort";
    case Severity::Emergency: return "emergency";
  }
  return "?";
}

std::string_view event_name(const SessionEvent& ev) {
  return std::visit(overloaded{
                        [](const session_event::PlugIn&) -> std::string_view { return "PlugIn"; },
                        [](const session_event::PlugOut&) -> std::string_view { return "PlugOut"; },
                        [](const session_event::MsgArrived&) -> std::string_view { return "MsgArrived"; },
                        [](const session_event::Timeout&) -> std::string_view { return "Timeout"; },
                        [](const session_event::FaultRaised&) -> std::string_view { return "FaultRaised"; },
                        [](const session_event::SocFull&) -> std::string_view { return "SocFull"; },
                        [](const session_event::UserInterrupt&) -> std::string_view { return "UserInterrupt"; },
                    },
                    ev);
}

Transition plug_in(const EvConfig& ev, EvseSlot& slot, SimTime now, double power_down_ramp_s) {
  if (slot.occupied()) {
    throw EvseOccupied("EVSE '" + slot.config.id + "' is held by session " + slot.session->id);
  }
  ++slot.sessions_started;
  ChargingSession s;
  s.id = slot.config.id + "#" + std::to_string(slot.sessions_started);
  s.state = SessionState::Unmated;
  s.ev_id = ev.id;
  s.evse_id = slot.config.id;
  s.state_entered_at = now;
  s.limits = SessionLimits{std::min(ev.max_charge_rate_kw, slot.config.max_power_kw),
                           slot.config.charge_status_timeout_s, slot.config.state_timeout_s,
                           power_down_ramp_s};

  Step step(s, now);
  step.enter(SessionState::Mated, "plug-in");
  start_handshake(step);
  Transition t = step.finish();
  slot.session = t.session;
  return t;
}

bool is_legal(const ChargingSession& s, const SessionEvent& ev) {
  using S = SessionState;
  return std::visit(
      overloaded{
          [&](const session_event::PlugIn&) { return s.state == S::Unmated; },
          [&](const session_event::PlugOut&) { return true; },
          [&](const session_event::MsgArrived& m) {
            return s.state != S::Unmated && s.awaiting && s.awaiting->kind == m.msg.kind &&
                   m.msg.session_id == s.id;
          },
          [&](const session_event::Timeout&) { return s.awaiting.has_value(); },
          [&](const session_event::FaultRaised&) { return s.state != S::Unmated; },
          [&](const session_event::SocFull&) { return s.state == S::Charge; },
          [&](const session_event::UserInterrupt&) { return s.state == S::Charge; },
      },
      ev);
}

Transition advance(const ChargingSession& s, const SessionEvent& ev, SimTime now) {
  Step step(s, now);
  std::visit(
      overloaded{
          [&](const session_event::PlugIn&) {
            if (s.state != SessionState::Unmated) illegal(s, ev);
            step.session().error_flag.reset();
            step.enter(SessionState::Mated, "plug-in");
            start_handshake(step);
          },
          [&](const session_event::PlugOut&) {
            switch (s.state) {
              case SessionState::Unmated:
                return;
              case SessionState::Mated:
              case SessionState::PowerDown:
                step.enter(SessionState::Unmated, "plug-out");
                return;
              case SessionState::Initialize:
              case SessionState::Check:
              case SessionState::Charge:
                step.record(RecordKind::Error, Json{{"code", "broken-connection"},
                                                    {"state", std::string(state_name(s.state))}});
                terminate(step, "abrupt-disconnect", "broken-connection");
                return;
            }
          },
          [&](const session_event::MsgArrived& m) { on_msg(step, s, m.msg, ev); },
          [&](const session_event::Timeout&) {
            if (!s.awaiting) illegal(s, ev);
            const std::string awaited(v2g_kind_name(s.awaiting->kind));
            step.record(RecordKind::Error, Json{{"code", "timeout"}, {"awaiting", awaited}});
            terminate(step, "timeout:" + awaited, "timeout");
          },
          [&](const session_event::FaultRaised& f) { on_fault(step, s, f, ev); },
          [&](const session_event::SocFull&) {
            if (s.state != SessionState::Charge) illegal(s, ev);
            enter_power_down(step, "soc-full");
          },
          [&](const session_event::UserInterrupt&) {
            if (s.state != SessionState::Charge) illegal(s, ev);
            enter_power_down(step, "user-interrupt");
          },
      },
      ev);
  return step.finish();
}

TickResult charging_tick(const ChargingSession& s, const EvConfig& ev_cfg, BatteryState b,
                         SimTime now, double dt_s, double power_scale) {
  if (s.state != SessionState::Charge) {
    throw IllegalEvent("charging tick outside Charge (session " + s.id + " in " +
                       std::string(state_name(s.state)) + ")");
  }
  (void)ev_cfg;
  TickResult r;
  r.session = s;
  r.effective_kw = s.delivered_kw * power_scale;
  r.battery = battery_step(b, r.effective_kw, dt_s);
  r.request = V2gMessage{V2gKind::ChargingStatusReq, s.id,
                         Json{{"soc", r.battery.soc}, {"delivered_kw", r.effective_kw}}};
  // An unanswered request keeps its deadline; re-arming would postpone the
  // timeout indefinitely on a dead link.
  if (!r.session.awaiting) {
    r.session.awaiting = Awaiting{V2gKind::ChargingStatusRes,
                                  SimTime{now.seconds + s.limits.charge_status_timeout_s, now.seq}};
  }
  r.soc_full = r.battery.soc >= 1.0;
  return r;
}

Transition plug_out(const ChargingSession& s, SimTime now) {
  return advance(s, session_event::PlugOut{}, now);
}

EvseAnswer evse_answer(const V2gMessage& request, const EvseConfig& evse, double handshake_delay_s,
                       double power_down_ramp_s) {
  EvseAnswer a;
  a.response.session_id = request.session_id;
  switch (request.kind) {
    case V2gKind::SessionSetupReq:
      a.response.kind = V2gKind::SessionSetupRes;
      a.response.payload = Json{{"response_code", "OK"}, {"evse_id", evse.id}};
      a.delay_s = handshake_delay_s;
      break;
    case V2gKind::PowerDeliveryReq: {
      const double requested = request.payload.value("requested_kw", evse.max_power_kw);
      a.response.kind = V2gKind::PowerDeliveryRes;
      a.response.payload = Json{{"granted_kw", std::min(requested, evse.max_power_kw)}};
      a.delay_s = handshake_delay_s;
      break;
    }
    case V2gKind::CableCheckReq:
      a.response.kind = V2gKind::CableCheckRes;
      a.response.payload = Json{{"status", "Ok"}};
      a.delay_s = handshake_delay_s;
      break;
    case V2gKind::ChargingStatusReq:
      a.response.kind = V2gKind::ChargingStatusRes;
      a.response.payload = Json{{"evse_max_power_kw", evse.max_power_kw}};
      a.delay_s = 0.0;
      break;
    case V2gKind::SessionStopReq:
      a.response.kind = V2gKind::SessionStopRes;
      a.response.payload = Json{{"response_code", "OK"}};
      a.delay_s = power_down_ramp_s;
      break;
    default:
      throw std::invalid_argument("EVSE received a response kind: " +
                                  std::string(v2g_kind_name(request.kind)));
  }
  return a;
}

}  // namespace evsim
