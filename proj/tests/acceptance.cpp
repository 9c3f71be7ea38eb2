// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "evsim/runner.hpp"

using namespace evsim;
namespace ev = evsim::session_event;

namespace {

struct Verdict {
  bool ok = true;
  std::string note;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      note = what;
    }
  }
};

Scenario golden(const char* name) {
  return load_scenario_file(std::string(EVSIM_SOURCE_DIR "/scenarios/") + name);
}

std::vector<TelemetryRecord> of_kind(const RunResult& r, RecordKind k) {
  Query q;
  q.kind = k;
  return r.store.query(q);
}

std::optional<TelemetryRecord> last_unmated(const RunResult& r) {
  std::optional<TelemetryRecord> out;
  for (const auto& t : of_kind(r, RecordKind::StateTransition)) {
    if (t.payload["to"] == "Unmated") out = t;
  }
  return out;
}

const RunResult& l1_run() {
  static const RunResult r = run(golden("broken_wire_l1.scn"));
  return r;
}

Verdict c1() {
  Verdict v;
  const Scenario s = golden("broken_wire_l1.scn");
  const RunResult& r = l1_run();
  const auto u = last_unmated(r);
  v.require(u.has_value(), "no Unmated transition");
  if (!u) return v;
  char buf[96];
  std::snprintf(buf, sizeof buf, "Unmated at %.3f, window [18, %.3f]", u->ts, 20.0 + s.timing.tick_s);
  v.require(u->ts >= 18.0 && u->ts <= 20.0 + s.timing.tick_s, buf);
  if (v.ok) v.note = buf;
  return v;
}

Verdict c2() {
  Verdict v;
  const RunResult& r = l1_run();
  const auto it = r.packet_logs.find("evse-1-cable");
  v.require(it != r.packet_logs.end(), "no packet log for evse-1-cable");
  if (!v.ok) return v;
  bool after = false;
  for (const auto& [t, c] : it->second.buckets()) {
    if (t < 18) v.require(c.errored == 0, "errored packet before t=18 at t=" + std::to_string(t));
    if (t >= 18 && c.errored > 0) after = true;
  }
  v.require(after, "no errored packet at t >= 18");
  const auto u = last_unmated(r);
  v.require(u.has_value(), "no Unmated transition");
  if (!u) return v;
  std::size_t late = 0;
  for (const auto& m : of_kind(r, RecordKind::V2gMsg)) late += m.seq > u->seq;
  v.require(late == 0, std::to_string(late) + " v2g messages after Unmated");
  return v;
}

Verdict c3() {
  Verdict v;
  const Scenario s = golden("broken_wire_l3.scn");
  const RunResult r = run(s);
  const AttackPlan& plan = s.attacks.at(0);
  const double w0 = plan.start_s;
  const double w1 = plan.start_s + plan.duration_s.value_or(0);
  std::size_t in = 0, in_band = 0;
  double exp_e = 0, dev_e = 0, worst_out = 0;
  for (const auto& rec : of_kind(r, RecordKind::PowerSample)) {
    const double e = rec.payload["expected_mw"].get<double>();
    const double d = rec.payload["delivered_mw"].get<double>();
    if (rec.ts >= w0 && rec.ts < w1) {
      ++in;
      in_band += d >= 15.0 && d <= 22.0;
      exp_e += e;
      dev_e += e - d;
    } else {
      worst_out = std::max(worst_out, std::abs(e - d));
    }
  }
  v.require(in > 0, "no power samples inside the window");
  if (!v.ok) return v;
  const double frac = static_cast<double>(in_band) / static_cast<double>(in);
  const double ratio = dev_e / exp_e;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu window samples, %.1f%% in [15,22] MW, deviation ratio %.4f, max outside %.3g",
                in, 100 * frac, ratio, worst_out);
  v.require(frac >= 0.95, buf);
  v.require(ratio >= 0.40 && ratio <= 0.50, buf);
  v.require(worst_out <= 1e-9, buf);
  if (v.ok) v.note = buf;
  return v;
}

Verdict c4() {
  Verdict v;
  CsmsState st;
  const auto recs = run_random_fuzz(FuzzPlan{}, st, CsmsPolicy{});
  v.require(recs.size() == 1000, "records: " + std::to_string(recs.size()));
  const auto rows = summarize_fuzz(recs);
  v.require(rows.size() == 10, "rows: " + std::to_string(rows.size()));
  for (const auto& row : rows) {
    const double sum = std::accumulate(row.pct.begin(), row.pct.end(), 0.0);
    v.require(std::abs(sum - 100.0) <= 0.1, std::string(action_name(row.action)) + " sums to " + std::to_string(sum));
  }
  return v;
}

Verdict c5() {
  Verdict v;
  CsmsState st;
  const auto recs = run_random_fuzz(FuzzPlan{}, st, CsmsPolicy{});
  std::map<OcppAction, FuzzSummaryRow> rows;
  for (const auto& row : summarize_fuzz(recs)) rows[row.action] = row;
  const auto pct = [&](OcppAction a, int bucket) { return rows[a].pct[static_cast<std::size_t>(bucket - 1)]; };
  const auto name = [](OcppAction a) { return std::string(action_name(a)); };
  for (const auto& [a, b] : std::vector<std::pair<OcppAction, int>>{
           {OcppAction::Heartbeat, 1},
           {OcppAction::BootNotification, 4},
           {OcppAction::DataTransferReq, 2},
           {OcppAction::Get15118EVCertificateReq, 3}}) {
    v.require(pct(a, b) == 100.0, name(a) + " bucket " + std::to_string(b) + " at " + std::to_string(pct(a, b)));
  }
  const double cert_ms = rows[OcppAction::Get15118EVCertificateReq].mean_latency_s * 1000;
  v.require(std::abs(cert_ms - 573.0) <= 1.0, "certificate latency " + std::to_string(cert_ms) + " ms");
  const double cc5 = pct(OcppAction::ClearCacheReq, 5);
  const double cc7 = pct(OcppAction::ClearCacheReq, 7);
  v.require(cc5 >= 90.0, "ClearCache (4,5) at " + std::to_string(cc5));
  v.require(std::abs(cc5 + cc7 - 100.0) <= 1e-9, "ClearCache remainder outside (4,7)");
  char buf[96];
  std::snprintf(buf, sizeof buf, "ClearCache %.0f%% (4,5) / %.0f%% (4,7), cert %.1f ms", cc5, cc7, cert_ms);
  if (v.ok) v.note = buf;
  return v;
}

Verdict c6() {
  Verdict v;
  CsmsPolicy p;
  p.require_boot_first = true;
  p.boot_shutdown_policy = BootPolicy::AcceptBoot;
  for (const std::string& t : fuzz_token_pool()) p.known_id_tokens.insert(t);
  const auto rate = [](const std::vector<FuzzRecord>& recs) {
    double n = 0, hit = 0;
    for (const auto& r : recs) {
      if (r.action != OcppAction::AuthorizeReq) continue;
      ++n;
      hit += r.outcome == OutcomeCode{3, 1};
    }
    return hit / n;
  };
  std::ostringstream note;
  for (std::uint64_t seed : {0ULL, 7ULL, 2024ULL}) {
    FuzzPlan plan;
    plan.seed = seed;
    CsmsState a;
    const double random_rate = rate(run_random_fuzz(plan, a, p));
    plan.strategy = FuzzStrategy::StateBased;
    CsmsState b;
    const double state_rate = rate(run_state_fuzz(plan, b, p));
    note << "seed " << seed << ": " << state_rate << " >= " << random_rate << "; ";
    v.require(state_rate >= random_rate, note.str());
  }
  if (v.ok) v.note = note.str();
  return v;
}

Verdict c7() {
  Verdict v;
  std::vector<std::optional<OcppFrame>> shapes = {std::nullopt};
  const std::vector<Json> result_payloads = {
      Json::object(),
      Json{{"currentTime", "T"}},
      Json{{"status", "Accepted"}},
      Json{{"status", "Rejected"}},
      Json{{"status", "Failed"}},
      Json{{"status", "UnknownVendorId"}},
      Json{{"idTokenInfo", {{"status", "Accepted"}}}},
      Json{{"idTokenInfo", {{"status", "Unknown"}}}},
      Json{{"idTokenInfo", {{"status", "Blocked"}}}},
      Json{{"statusInfo", {{"reasonCode", "NotImplemented"}}}},
      Json{{"statusInfo", {{"reasonCode", "JsonParse"}}}},
      Json{{"status", "Accepted"}, {"error", "JsonParse"}},
      Json{{"status", "Failed"}, {"statusInfo", {{"reasonCode", "JsonParse"}}}},
      Json{{"status", 3}},
      Json{{"statusInfo", "odd"}}};
  for (const Json& p : result_payloads) shapes.push_back(OcppFrame{CallResult{"m", p}});
  const std::vector<std::string> codes = {
      "FormatViolation", "FormationViolation", "SecurityError", "TypeConstraintViolation",
      "OccurrenceConstraintViolation", "ProtocolError", "PropertyConstraintViolation", "InternalError",
      "GenericError", "NotImplemented", "NotSupported", "RpcFrameworkError"};
  for (const std::string& c : codes) {
    shapes.push_back(OcppFrame{CallError{"m", c, "", Json::object()}});
    shapes.push_back(OcppFrame{CallError{"m", c, "", Json{{"unknownEntity", ".reason"}}}});
    shapes.push_back(OcppFrame{CallError{"m", c, "", Json::array()}});
  }
  std::set<int> seen;
  std::size_t cases = 0;
  for (const auto& s : shapes) {
    for (bool alive : {true, false}) {
      ++cases;
      OutcomeCode first;
      try {
        first = classify("", s, 0.01, alive);
      } catch (const std::exception& e) {
        v.require(false, std::string("classify threw: ") + e.what());
        continue;
      }
      const OutcomeCode again = classify("", s, 0.01, alive);
      v.require(first == again, "classification not stable");
      v.require(first.bucket >= 1 && first.bucket <= 7, "bucket out of range");
      v.require(first.wire_type == (first.bucket <= 4 ? 3 : 4), "wire/bucket pairing broken");
      if (!alive) v.require(first == OutcomeCode{3, 4}, "dead server not (3,4)");
      seen.insert(first.bucket);
    }
  }
  v.require(seen.size() == 7, "only " + std::to_string(seen.size()) + " buckets reachable");
  bool threw = false;
  try {
    classify("", OcppFrame{Call{"m", OcppAction::Heartbeat, Json::object()}}, 0, true);
  } catch (const Unclassifiable&) {
    threw = true;
  }
  v.require(threw, "CALL response not rejected");
  if (v.ok) v.note = std::to_string(cases) + " shapes, all 7 buckets reachable";
  return v;
}

Verdict c8() {
  Verdict v;
  for (const char* name : {"broken_wire_l1.scn", "broken_wire_l3.scn"}) {
    const Scenario s = golden(name);
    v.require(to_jsonl(run(s).store) == to_jsonl(run(s).store), std::string(name) + " differs between runs");
  }
  return v;
}

Verdict c9() {
  Verdict v;
  Rng rng(0xC0FFEE);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    Scenario s;
    s.seed = rng();
    const double ticks[] = {0.5, 1.0, 2.0};
    s.timing.tick_s = ticks[uniform_index(rng, 3)];
    EvseConfig evse{"evse-1", uniform(rng, 3.0, 350.0), "lot"};
    evse.heartbeat_interval_s = 60;
    EvConfig car{"ev-1", uniform(rng, 20.0, 100.0), uniform(rng, 0.6, 0.98), uniform(rng, 3.0, 150.0),
                 uniform(rng, 0.0, 30.0), "evse-1", std::nullopt};
    const double rate = std::min(car.max_charge_rate_kw, evse.max_power_kw);
    const double oracle_s = car.battery_capacity_kwh * (1.0 - car.initial_soc) / rate * 3600.0;
    s.evses.push_back(evse);
    s.evs.push_back(car);
    s.schedule_end_s = car.plug_in_time_s + oracle_s + 120;
    const RunResult r = run(s);
    std::optional<double> charge, down;
    for (const auto& t : of_kind(r, RecordKind::StateTransition)) {
      if (t.payload["to"] == "Charge" && !charge) charge = t.ts;
      if (t.payload["to"] == "PowerDown" && !down) down = t.ts;
    }
    v.require(charge && down, "scenario " + std::to_string(i) + " never finished charging");
    if (!charge || !down) continue;
    const double err = std::abs((*down - *charge) - oracle_s);
    worst = std::max(worst, err / s.timing.tick_s);
    char buf[128];
    std::snprintf(buf, sizeof buf, "scenario %d: charged %.3f s, oracle %.3f s, tick %.1f", i, *down - *charge,
                  oracle_s, s.timing.tick_s);
    v.require(err <= s.timing.tick_s, buf);
  }
  if (v.ok) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "worst error %.3f ticks", worst);
    v.note = buf;
  }
  return v;
}

// Transition table, written independently of the FSM implementation.
const std::set<std::pair<std::string, std::string>>& allowed_edges() {
  static const std::set<std::pair<std::string, std::string>> e = {
      {"Unmated", "Mated"},   {"Mated", "Initialize"},   {"Mated", "Unmated"},  {"Initialize", "Check"},
      {"Initialize", "Mated"}, {"Initialize", "Unmated"}, {"Check", "Charge"},    {"Check", "Initialize"},
      {"Check", "Unmated"},    {"Charge", "PowerDown"},   {"Charge", "Mated"},    {"Charge", "Unmated"},
      {"PowerDown", "Unmated"}};
  return e;
}

Verdict c10() {
  Verdict v;
  Rng rng(10000);
  const EvseConfig evse_cfg{"evse-1", 22, "bench"};
  std::size_t steps = 0, charge_entries = 0;
  for (int trace = 0; trace < 10000 && v.ok; ++trace) {
    EvseSlot slot;
    slot.config = evse_cfg;
    const EvConfig car{"ev-1", 50, uniform(rng, 0, 0.9), uniform(rng, 3, 50), 0, "evse-1", std::nullopt};
    BatteryState battery{car.initial_soc, car.battery_capacity_kwh};
    double now = 0;
    std::vector<std::string> path;
    std::optional<ChargingSession> s;
    const auto absorb = [&](const Transition& t) {
      for (const auto& rec : t.records) {
        if (rec.kind != RecordKind::StateTransition) continue;
        const std::string from = rec.payload["from"], to = rec.payload["to"];
        v.require(allowed_edges().count({from, to}) == 1, "illegal edge " + from + " -> " + to);
        if (to == "Charge") {
          ++charge_entries;
          const std::size_t n = path.size();
          v.require(n >= 2 && path[n - 1] == "Check" && path[n - 2] == "Initialize",
                    "Charge entered without Initialize then Check");
        }
        path.push_back(to);
      }
      v.require(t.session.delivered_kw == 0.0 || t.session.state == SessionState::Charge,
                "power delivered outside Charge");
      v.require(t.session.delivered_kw <= std::min(car.max_charge_rate_kw, evse_cfg.max_power_kw) + 1e-12,
                "power above the limit");
      s = t.session;
    };
    const int len = 5 + static_cast<int>(uniform_index(rng, 60));
    for (int k = 0; k < len && v.ok; ++k, ++steps) {
      now += uniform(rng, 0.01, 1.0);
      const SimTime at = at_seconds(now);
      if (!s || s->state == SessionState::Unmated) {
        if (!s) path.push_back("Unmated");
        slot.session = s;
        absorb(plug_in(car, slot, at));
        continue;
      }
      std::vector<std::function<void()>> moves;
      if (s->awaiting) {
        moves.push_back([&] {
          V2gMessage req{s->awaiting->kind == V2gKind::SessionSetupRes       ? V2gKind::SessionSetupReq
                         : s->awaiting->kind == V2gKind::PowerDeliveryRes    ? V2gKind::PowerDeliveryReq
                         : s->awaiting->kind == V2gKind::CableCheckRes       ? V2gKind::CableCheckReq
                         : s->awaiting->kind == V2gKind::ChargingStatusRes   ? V2gKind::ChargingStatusReq
                                                                             : V2gKind::SessionStopReq,
                         s->id, Json{{"requested_kw", car.max_charge_rate_kw}}};
          EvseAnswer a = evse_answer(req, evse_cfg, 0.2, 5.0);
          if (a.response.kind == V2gKind::CableCheckRes && uniform01(rng) < 0.2) a.response.payload["status"] = "Fail";
          absorb(advance(*s, ev::MsgArrived{a.response}, at));
        });
        moves.push_back([&] { absorb(advance(*s, ev::Timeout{}, at)); });
      }
      moves.push_back([&] { absorb(advance(*s, ev::PlugOut{}, at)); });
      moves.push_back([&] {
        const Severity sev = static_cast<Severity>(uniform_index(rng, 3));
        absorb(advance(*s, ev::FaultRaised{"random", sev}, at));
      });
      if (s->state == SessionState::Charge) {
        moves.push_back([&] { absorb(advance(*s, ev::SocFull{}, at)); });
        moves.push_back([&] { absorb(advance(*s, ev::UserInterrupt{}, at)); });
        for (int w = 0; w < 4; ++w) {
          moves.push_back([&] {
            const TickResult r = charging_tick(*s, car, battery, at, 1.0);
            v.require(r.battery.soc >= battery.soc, "soc decreased on a tick");
            battery = r.battery;
            s = r.session;
          });
        }
      }
      const double before = battery.soc;
      const bool charging = s->state == SessionState::Charge;
      try {
        moves[uniform_index(rng, moves.size())]();
      } catch (const IllegalEvent& e) {
        v.require(false, std::string("legal event rejected: ") + e.what());
      }
      if (!charging) v.require(battery.soc == before, "soc changed outside Charge");
    }
  }
  if (v.ok) v.note = std::to_string(steps) + " events, " + std::to_string(charge_entries) + " Charge entries";
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double budget_ms;
  Verdict (*fn)();
};

}  // namespace

int main() {
  const Criterion all[] = {
      {1, "broken-wire-l1-timeout", 1000, c1},
      {2, "packet-series-shape", 1000, c2},
      {3, "l3-power-deviation", 5000, c3},
      {4, "fuzz-cardinality", 5000, c4},
      {5, "reference-csms-fuzz-table", 5000, c5},
      {6, "state-order-advantage", 5000, c6},
      {7, "classifier-exhaustiveness", 1000, c7},
      {8, "determinism", 5000, c8},
      {9, "charging-time-oracle", 10000, c9},
      {10, "fsm-property-suite", 30000, c10},
  };
  int failed = 0;
  for (const Criterion& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.fn();
    } catch (const std::exception& e) {
      v.ok = false;
      v.note = std::string("exception: ") + e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (v.ok && ms > c.budget_ms) {
      v.ok = false;
      v.note = "over the " + std::to_string(static_cast<int>(c.budget_ms)) + " ms budget";
    }
    failed += !v.ok;
    std::printf("%s %d %s (%.0f ms)%s%s\n", v.ok ? "PASS" : "FAIL", c.id, c.name, ms, v.note.empty() ? "" : ": ",
                v.note.c_str());
  }
  return failed == 0 ? 0 : 1;
}
