// SPDX-License-Identifier: Apache-2.0
// Discrete-event loop. Every mutable piece of the simulation lives in Sim and
// is touched only from its event handlers, one event at a time.
#include "evsim/runner.hpp"

#include <chrono>
#include <cmath>
#include <queue>
#include <thread>
#include <variant>

namespace evsim {

namespace {

namespace ev {
struct PlugIn {
  std::size_t ev;
};
struct Tick {};
struct Timer {
  std::size_t evse;
  std::string session_id;
  double deadline;
};
struct Net {
  std::string link_id;
  NetEvent event;
};
struct EvseReply {
  std::size_t evse;
  V2gMessage msg;
};
struct AttackStart {
  std::size_t plan;
};
struct AttackEnd {
  std::size_t plan;
};
struct PowerSample {};
struct Heartbeat {
  std::size_t evse;
};
struct Interrupt {
  std::size_t ev;
};
struct End {};
}  // namespace ev

using Payload = std::variant<ev::PlugIn, ev::Tick, ev::Timer, ev::Net, ev::EvseReply,
                             ev::AttackStart, ev::AttackEnd, ev::PowerSample, ev::Heartbeat,
                             ev::Interrupt, ev::End>;

struct Event {
  SimTime at;
  Payload payload;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const { return b.at < a.at; }
};

struct EvseRuntime {
  EvseSlot slot;
  std::optional<std::size_t> ev;  // EV currently plugged in
  std::optional<double> armed;    // deadline a Timer is queued for
};

class Sim {
 public:
  Sim(const Scenario& s, const RunOptions& opts)
      : sc_(s), opts_(opts), driver_(make_driver(opts.driver, s.seed)), power_rng_(derive_seed(s.seed, 4)) {
    for (const EvseConfig& e : sc_.evses) {
      evses_.push_back(EvseRuntime{EvseSlot{e, std::nullopt, 0}, std::nullopt, std::nullopt});
      driver_->connect(e);
    }
    for (const EvConfig& e : sc_.evs) battery_.push_back(BatteryState{e.initial_soc, e.battery_capacity_kwh});
    driver_->set_packet_observer([this](const std::string& link, PacketEvent e, double t, const Envelope&) {
      PacketCounters& c = pending_packets_[link][static_cast<std::int64_t>(std::floor(t))];
      switch (e) {
        case PacketEvent::Sent: ++c.sent; break;
        case PacketEvent::Delivered: ++c.delivered; break;
        case PacketEvent::Lost: ++c.lost; break;
        case PacketEvent::Retransmitted: ++c.retransmitted; break;
        case PacketEvent::Errored: ++c.errored; break;
      }
    });
    bus_.subscribe("v2g/+/req", [this](std::string_view topic, std::string_view payload) {
      evse_receive(topic, payload);
    });
    bus_.subscribe("v2g/+/res", [this](std::string_view topic, std::string_view payload) {
      ev_receive(topic, payload);
    });
  }

  RunResult run() {
    const double end = sc_.schedule_end_s;
    push(end, ev::End{});
    for (std::size_t i = 0; i < sc_.evs.size(); ++i) {
      push(sc_.evs[i].plug_in_time_s, ev::PlugIn{i});
      if (sc_.evs[i].interrupt_at_s) push(*sc_.evs[i].interrupt_at_s, ev::Interrupt{i});
    }
    push(0.0, ev::Tick{});
    if (!sc_.baseline_load_profile.empty()) push(0.0, ev::PowerSample{});
    for (std::size_t i = 0; i < evses_.size(); ++i) push(0.0, ev::Heartbeat{i});
    for (const AttackEvent& a : schedule(sc_.attacks, sc_)) {
      if (a.is_start) {
        push(a.at, ev::AttackStart{a.plan_index});
      } else {
        push(a.at, ev::AttackEnd{a.plan_index});
      }
    }

    emit(make_record(0.0, "runner", RecordKind::ScenarioStart,
                     Json{{"seed", sc_.seed},
                          {"driver", std::string(driver_name(opts_.driver))},
                          {"evs", sc_.evs.size()},
                          {"evses", sc_.evses.size()},
                          {"attacks", sc_.attacks.size()},
                          {"schedule_end_s", end}}));

    const auto wall_start = std::chrono::steady_clock::now();
    while (!queue_.empty()) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.at;
      if (opts_.realtime) {
        std::this_thread::sleep_until(wall_start + std::chrono::duration<double>(now_.seconds));
      }
      flush_packets(false);
      if (std::holds_alternative<ev::End>(e.payload)) break;
      std::visit([this](auto& p) { handle(p); }, e.payload);
    }
    now_ = SimTime{std::max(now_.seconds, end), now_.seq};
    flush_packets(true);

    std::size_t active = 0;
    for (const EvseRuntime& r : evses_) active += r.slot.occupied() ? 1 : 0;
    RunResult result;
    result.exit = active == 0 ? RunExit::Completed : RunExit::Interrupted;
    emit(make_record(now_.seconds, "runner", RecordKind::ScenarioEnd,
                     Json{{"exit", result.exit == RunExit::Completed ? "Completed" : "Interrupted"},
                          {"active_sessions", active}}));
    result.store = std::move(store_);
    result.packet_logs = driver_->packet_logs();
    result.fuzz_records = std::move(fuzz_);
    return result;
  }

 private:
  template <class P>
  void push(double at, P payload) {
    queue_.push(Event{SimTime{at, next_seq_++}, Payload{std::move(payload)}});
  }

  void emit(TelemetryRecord r) { store_.append(std::move(r)); }

  // Packet counters are folded into one record per link and second, written
  // once that second has passed.
  void flush_packets(bool all) {
    for (auto& [link, buckets] : pending_packets_) {
      while (!buckets.empty()) {
        const auto it = buckets.begin();
        if (!all && static_cast<double>(it->first + 1) > now_.seconds) break;
        const PacketCounters& c = it->second;
        emit(make_record(now_.seconds, "link:" + link, RecordKind::Packet,
                         Json{{"link", link},
                              {"t", it->first},
                              {"sent", c.sent},
                              {"delivered", c.delivered},
                              {"lost", c.lost},
                              {"retransmitted", c.retransmitted},
                              {"errored", c.errored}}));
        buckets.erase(it);
      }
    }
  }

  const std::string& evse_id(std::size_t i) const { return evses_[i].slot.config.id; }

  std::optional<std::size_t> evse_index(std::string_view id) const {
    for (std::size_t i = 0; i < evses_.size(); ++i) {
      if (evse_id(i) == id) return i;
    }
    return std::nullopt;
  }

  void transmit(std::size_t evse, const V2gMessage& msg, bool from_ev) {
    const std::string& id = evse_id(evse);
    const std::string source = from_ev ? "ev:" + sc_.evs[*evses_[evse].ev].id : "evse:" + id;
    TelemetryRecord r = make_record(now_.seconds, source, RecordKind::V2gMsg,
                                    Json{{"kind", std::string(v2g_kind_name(msg.kind))},
                                         {"direction", from_ev ? "ev->evse" : "evse->ev"},
                                         {"payload", msg.payload}});
    r.session_id = msg.session_id;
    r.layer = Layer::L2;
    emit(std::move(r));
    Envelope env;
    env.topic = "v2g/" + id + (from_ev ? "/req" : "/res");
    env.payload = v2g_to_json(msg).dump();
    env.sent_at = now_;
    env.id = ++envelope_ids_;
    const std::string link = cable_link_id(id);
    for (NetEvent& n : driver_->transmit(link, env, now_)) push(n.at, ev::Net{link, std::move(n)});
  }

  // Applies a transition of the session held by `evse`.
  void apply(std::size_t evse, Transition t) {
    EvseRuntime& rt = evses_[evse];
    const bool was_occupied = rt.slot.occupied();
    rt.slot.session = std::move(t.session);
    for (TelemetryRecord& r : t.records) emit(std::move(r));
    for (const V2gMessage& m : t.outbox) transmit(evse, m, true);
    arm(evse);
    if (!rt.slot.occupied()) {
      if (was_occupied) status_notification(evse, "Available");
      rt.ev.reset();
      rt.armed.reset();
    }
  }

  void arm(std::size_t evse) {
    EvseRuntime& rt = evses_[evse];
    const ChargingSession& s = *rt.slot.session;
    if (!s.awaiting || rt.armed == s.awaiting->deadline.seconds) return;
    rt.armed = s.awaiting->deadline.seconds;
    push(*rt.armed, ev::Timer{evse, s.id, *rt.armed});
  }

  void step(std::size_t evse, const SessionEvent& e) {
    apply(evse, advance(*evses_[evse].slot.session, e, now_));
  }

  ChargingSession* active_session(std::size_t evse) {
    EvseRuntime& rt = evses_[evse];
    return rt.slot.occupied() ? &*rt.slot.session : nullptr;
  }

  double power_scale(std::size_t evse, double t) {
    double f = 1.0;
    for (const PowerModifier& m : modifiers_) f *= m.factor(evse_id(evse), t, power_rng_);
    return f;
  }

  // --- OCPP side channel to the CSMS ---------------------------------------

  void ocpp_call(std::size_t evse, OcppAction action, Json payload) {
    Call call{"ocpp-" + std::to_string(++ocpp_ids_), action, std::move(payload)};
    const CsmsReply reply = csms_handle(csms_, sc_.csms, call, now_);
    TelemetryRecord r = make_record(now_.seconds, "evse:" + evse_id(evse), RecordKind::OcppMsg,
                                    Json{{"action", std::string(action_name(action))},
                                         {"request", encode_frame(call)},
                                         {"response", reply.response ? Json(encode_frame(*reply.response)) : Json()},
                                         {"latency_s", reply.latency_s}});
    r.layer = Layer::L4;
    emit(std::move(r));
  }

  void status_notification(std::size_t evse, std::string_view status) {
    ocpp_call(evse, OcppAction::StatusNotificationReq,
              Json{{"timestamp", virtual_timestamp(now_.seconds)},
                   {"connectorStatus", std::string(status)},
                   {"evseId", evse + 1},
                   {"connectorId", 1}});
  }

  // --- handlers --------------------------------------------------------------

  void handle(ev::PlugIn& p) {
    const EvConfig& car = sc_.evs[p.ev];
    const auto idx = evse_index(car.target_evse);
    if (!idx) throw InternalInvariantViolation("EV " + car.id + " targets unknown EVSE");
    EvseRuntime& rt = evses_[*idx];
    if (rt.slot.occupied()) {
      emit(make_record(now_.seconds, "ev:" + car.id, RecordKind::Error,
                       Json{{"code", "evse-occupied"}, {"evse", car.target_evse}}));
      return;
    }
    rt.ev = p.ev;
    Transition t = plug_in(car, rt.slot, now_, sc_.timing.power_down_ramp_s);
    status_notification(*idx, "Occupied");
    apply(*idx, std::move(t));
  }

  void handle(ev::Tick&) {
    const double dt = sc_.timing.tick_s;
    for (std::size_t i = 0; i < evses_.size(); ++i) {
      ChargingSession* s = active_session(i);
      if (!s || s->state != SessionState::Charge) continue;
      EvseRuntime& rt = evses_[i];
      const std::size_t car = *rt.ev;
      // Only the part of the tick actually spent in Charge delivers energy.
      const double span = std::min(dt, now_.seconds - s->state_entered_at.seconds);
      if (span <= 0) continue;
      TickResult r = charging_tick(*s, sc_.evs[car], battery_[car], now_, span, power_scale(i, now_.seconds));
      battery_[car] = r.battery;
      rt.slot.session = r.session;
      transmit(i, r.request, true);
      arm(i);
      if (r.soc_full) step(i, session_event::SocFull{});
    }
    if (now_.seconds + dt < sc_.schedule_end_s) push(now_.seconds + dt, ev::Tick{});
  }

  void handle(ev::Timer& t) {
    EvseRuntime& rt = evses_[t.evse];
    if (rt.armed == t.deadline) rt.armed.reset();
    ChargingSession* s = active_session(t.evse);
    if (!s || s->id != t.session_id || !s->awaiting || s->awaiting->deadline.seconds != t.deadline) {
      return;  // answered or superseded
    }
    step(t.evse, session_event::Timeout{});
  }

  void handle(ev::Net& n) {
    bool delivered = false;
    for (NetEvent& f : driver_->on_event(n.link_id, n.event, now_, delivered)) {
      push(f.at, ev::Net{n.link_id, std::move(f)});
    }
    if (n.event.kind == NetEventKind::DeliveryFailure) {
      emit(make_record(now_.seconds, "link:" + n.link_id, RecordKind::Error,
                       Json{{"code", "delivery-failure"},
                            {"envelope", n.event.env.id},
                            {"attempts", n.event.env.attempt}}));
    }
    if (delivered) bus_.publish(n.event.env.topic, n.event.env.payload);
  }

  void evse_receive(std::string_view topic, std::string_view payload) {
    const auto idx = evse_index(topic.substr(4, topic.rfind('/') - 4));
    if (!idx) return;
    const V2gMessage msg = v2g_from_json(Json::parse(payload));
    const ChargingSession* s = active_session(*idx);
    if (!s || s->id != msg.session_id) return;  // stale
    EvseAnswer a = evse_answer(msg, evses_[*idx].slot.config, sc_.timing.handshake_delay_s,
                               sc_.timing.power_down_ramp_s);
    push(now_.seconds + a.delay_s, ev::EvseReply{*idx, std::move(a.response)});
  }

  void handle(ev::EvseReply& r) {
    const ChargingSession* s = active_session(r.evse);
    if (!s || s->id != r.msg.session_id) return;
    transmit(r.evse, r.msg, false);
  }

  void ev_receive(std::string_view topic, std::string_view payload) {
    const auto idx = evse_index(topic.substr(4, topic.rfind('/') - 4));
    if (!idx) return;
    session_event::MsgArrived arrived{v2g_from_json(Json::parse(payload))};
    const ChargingSession* s = active_session(*idx);
    if (!s || !is_legal(*s, arrived)) return;  // late answer to a request no longer pending
    step(*idx, arrived);
  }

  void handle(ev::AttackStart& a) {
    const AttackPlan& plan = sc_.attacks[a.plan];
    switch (plan.kind) {
      case AttackKind::BrokenWireL1: {
        const std::string link =
            driver_->has_link(plan.target_id) ? plan.target_id : cable_link_id(plan.target_id);
        driver_->sever(link, now_);
        emit(broken_wire_l1_record(link, now_.seconds));
        return;
      }
      case AttackKind::BrokenWireL3: {
        std::vector<std::string> ids;
        for (const EvseConfig& e : sc_.evses) {
          if (plan.target_id == kAllEvses || plan.target_id == e.id) ids.push_back(e.id);
        }
        const PowerDisruptionParams p = power_params(plan);
        modifiers_.push_back(exec_broken_wire_l3(ids, p, plan.start_s, plan.start_s + *plan.duration_s));
        TelemetryRecord r = make_record(now_.seconds, "attack", RecordKind::AttackStart,
                                        Json{{"attack", std::string(attack_kind_name(plan.kind))},
                                             {"target", plan.target_id},
                                             {"layers", "L3-L4"},
                                             {"reduction_factor", p.reduction_factor},
                                             {"jitter", p.jitter},
                                             {"end_s", plan.start_s + *plan.duration_s}});
        r.layer = Layer::L3;
        emit(std::move(r));
        for (std::size_t i = 0; i < evses_.size(); ++i) {
          if (!modifiers_.back().targets(evse_id(i)) || !active_session(i)) continue;
          step(i, session_event::FaultRaised{"power-disruption", Severity::Recoverable});
        }
        return;
      }
      case AttackKind::Fuzzification: {
        const FuzzPlan fp = fuzz_plan(plan, sc_.seed);
        TelemetryRecord r = make_record(now_.seconds, "attack", RecordKind::AttackStart,
                                        Json{{"attack", std::string(attack_kind_name(plan.kind))},
                                             {"target", plan.target_id},
                                             {"layers", "L2"},
                                             {"params", plan.params}});
        r.layer = Layer::L2;
        emit(std::move(r));
        std::vector<FuzzRecord> recs = run_fuzz(fp, csms_, sc_.csms, now_.seconds);
        for (const FuzzRecord& f : recs) {
          TelemetryRecord fr = make_record(now_.seconds, "csms", RecordKind::FuzzRecord, fuzz_record_to_json(f));
          fr.layer = Layer::L2;
          emit(std::move(fr));
        }
        const bool restarted = !csms_.alive;
        if (restarted) csms_ = csms_restart(std::move(csms_));
        TelemetryRecord end = make_record(now_.seconds, "attack", RecordKind::AttackEnd,
                                          Json{{"attack", std::string(attack_kind_name(plan.kind))},
                                               {"records", recs.size()},
                                               {"csms_restarted", restarted}});
        end.layer = Layer::L2;
        emit(std::move(end));
        if (!fuzz_) fuzz_.emplace();
        fuzz_->insert(fuzz_->end(), recs.begin(), recs.end());
        return;
      }
    }
  }

  void handle(ev::AttackEnd& a) {
    const AttackPlan& plan = sc_.attacks[a.plan];
    Json payload{{"attack", std::string(attack_kind_name(plan.kind))}, {"target", plan.target_id}};
    TelemetryRecord r = make_record(now_.seconds, "attack", RecordKind::AttackEnd, payload);
    if (plan.kind == AttackKind::BrokenWireL1) {
      const std::string link =
          driver_->has_link(plan.target_id) ? plan.target_id : cable_link_id(plan.target_id);
      driver_->restore(link);
      r.layer = Layer::L1;
    } else if (plan.kind == AttackKind::BrokenWireL3) {
      r.layer = Layer::L3;
    } else {
      return;  // campaigns finish within their start event
    }
    emit(std::move(r));
  }

  void handle(ev::PowerSample&) {
    const double t = now_.seconds;
    const double expected = baseline_load(sc_.baseline_load_profile, t);
    double rated = 0.0;
    double effective = 0.0;
    for (std::size_t i = 0; i < evses_.size(); ++i) {
      const double kw = evses_[i].slot.config.max_power_kw;
      rated += kw;
      effective += kw * power_scale(i, t);
    }
    const double delivered = rated > 0 ? expected * (effective / rated) : expected;
    emit(make_record(t, "grid", RecordKind::PowerSample,
                     Json{{"expected_mw", expected}, {"delivered_mw", delivered}}));
    if (t + sc_.timing.power_sample_s < sc_.schedule_end_s) {
      push(t + sc_.timing.power_sample_s, ev::PowerSample{});
    }
  }

  void handle(ev::Heartbeat& h) {
    ocpp_call(h.evse, OcppAction::Heartbeat, Json::object());
    const double next = now_.seconds + evses_[h.evse].slot.config.heartbeat_interval_s;
    if (next < sc_.schedule_end_s) push(next, ev::Heartbeat{h.evse});
  }

  void handle(ev::Interrupt& in) {
    for (std::size_t i = 0; i < evses_.size(); ++i) {
      if (evses_[i].ev != in.ev) continue;
      const ChargingSession* s = active_session(i);
      if (s && s->state == SessionState::Charge) step(i, session_event::UserInterrupt{});
    }
  }

  void handle(ev::End&) {}

  const Scenario& sc_;
  RunOptions opts_;
  std::unique_ptr<SimDriver> driver_;
  Rng power_rng_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  SimTime now_;
  TelemetryStore store_;
  TopicBus bus_;
  std::vector<EvseRuntime> evses_;
  std::vector<BatteryState> battery_;
  std::vector<PowerModifier> modifiers_;
  CsmsState csms_;
  std::optional<std::vector<FuzzRecord>> fuzz_;
  std::map<std::string, std::map<std::int64_t, PacketCounters>> pending_packets_;
  std::uint64_t envelope_ids_ = 0;
  std::uint64_t ocpp_ids_ = 0;
};

}  // namespace

ScenarioInvalid::ScenarioInvalid(std::vector<Violation> v)
    : std::runtime_error([&] {
        std::string msg = "scenario invalid:";
        for (const Violation& x : v) msg += " " + x.path + ": " + x.reason + ";";
        return msg;
      }()),
      violations_(std::move(v)) {}

RunResult run(const Scenario& scenario, const RunOptions& options) {
  std::vector<Violation> v = validate_scenario(scenario);
  if (!v.empty()) throw ScenarioInvalid(std::move(v));
  try {
    Sim sim(scenario, options);
    return sim.run();
  } catch (const IllegalEvent& e) {
    throw InternalInvariantViolation(e.what());
  } catch (const OutOfOrder& e) {
    throw InternalInvariantViolation(e.what());
  } catch (const UnresolvedTarget& e) {
    throw ScenarioInvalid({Violation{"attacks", e.what()}});
  }
}

}  // namespace evsim
