// SPDX-License-Identifier: Apache-2.0
#include "evsim/attack.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace evsim {

namespace {

bool resolves(const AttackPlan& p, const Scenario& s) {
  switch (p.kind) {
    case AttackKind::BrokenWireL1:
      for (const EvseConfig& e : s.evses) {
        if (p.target_id == e.id || p.target_id == cable_link_id(e.id)) return true;
      }
      return false;
    case AttackKind::BrokenWireL3:
      return p.target_id == kAllEvses || find_evse(s, p.target_id) != nullptr;
    case AttackKind::Fuzzification:
      return p.target_id == kCsmsId;
  }
  return false;
}

const std::set<std::string>& format_family() {
  static const std::set<std::string> codes = {
      "FormatViolation",         "FormationViolation",            "SecurityError",
      "TypeConstraintViolation", "OccurrenceConstraintViolation", "ProtocolError"};
  return codes;
}

std::optional<std::string> string_at(const Json& j, std::initializer_list<const char*> path) {
  const Json* cur = &j;
  for (const char* key : path) {
    if (!cur->is_object() || !cur->contains(key)) return std::nullopt;
    cur = &(*cur)[key];
  }
  if (!cur->is_string()) return std::nullopt;
  return cur->get<std::string>();
}

}  // namespace

std::vector<AttackEvent> schedule(std::span<const AttackPlan> plans, const Scenario& scenario) {
  std::vector<AttackEvent> events;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const AttackPlan& p = plans[i];
    if (!resolves(p, scenario)) {
      throw UnresolvedTarget("attack " + std::to_string(i) + " (" +
                             std::string(attack_kind_name(p.kind)) + ") targets unknown '" +
                             p.target_id + "'");
    }
    events.push_back(AttackEvent{p.start_s, i, true});
    if (p.duration_s) events.push_back(AttackEvent{p.start_s + *p.duration_s, i, false});
  }
  // Ends before starts at the same instant so back-to-back windows do not overlap.
  std::stable_sort(events.begin(), events.end(), [](const AttackEvent& a, const AttackEvent& b) {
    if (a.at != b.at) return a.at < b.at;
    return !a.is_start && b.is_start;
  });
  return events;
}

TelemetryRecord broken_wire_l1_record(std::string_view link_id, double at_s) {
  TelemetryRecord r = make_record(at_s, "attack", RecordKind::AttackStart,
                                  Json{{"attack", std::string(attack_kind_name(AttackKind::BrokenWireL1))},
                                       {"target", std::string(link_id)},
                                       {"layers", "L1-L2"}});
  r.layer = Layer::L1;
  return r;
}

TelemetryRecord exec_broken_wire_l1(SimLink& link, SimTime at) {
  sever(link, at);
  return broken_wire_l1_record(link.id, at.seconds);
}

PowerModifier::PowerModifier(std::set<std::string> evse_ids, PowerDisruptionParams params,
                             double start_s, double end_s)
    : evse_ids_(std::move(evse_ids)), params_(params), start_s_(start_s), end_s_(end_s) {
  if (!(start_s < end_s)) throw std::invalid_argument("power disruption window is empty");
}

bool PowerModifier::targets(std::string_view evse_id) const {
  return evse_ids_.count(std::string(evse_id)) > 0;
}

double PowerModifier::draw_factor(Rng& rng) const {
  double f = 1.0 - params_.reduction_factor;
  if (params_.jitter > 0) f += uniform(rng, -params_.jitter, params_.jitter);
  return f;
}

double PowerModifier::factor(std::string_view evse_id, double t_s, Rng& rng) const {
  if (!active(t_s) || !targets(evse_id)) return 1.0;
  return draw_factor(rng);
}

PowerModifier exec_broken_wire_l3(std::span<const std::string> evse_ids, PowerDisruptionParams p,
                                  double start_s, double end_s) {
  return PowerModifier(std::set<std::string>(evse_ids.begin(), evse_ids.end()), p, start_s, end_s);
}

OutcomeCode OutcomeCode::from_bucket(int bucket) {
  if (bucket < 1 || bucket > 7) throw std::invalid_argument("outcome bucket out of range");
  return OutcomeCode{bucket <= 4 ? 3 : 4, bucket};
}

std::string OutcomeCode::label() const {
  return "(" + std::to_string(wire_type) + "," + std::to_string(bucket) + ")";
}

Json fuzz_record_to_json(const FuzzRecord& r) {
  return Json{{"seq", r.seq},
              {"action", std::string(action_name(r.action))},
              {"mutation", std::string(mutation_name(r.mutation))},
              {"sent", r.sent},
              {"outcome", r.outcome.label()},
              {"wire_type", r.outcome.wire_type},
              {"bucket", r.outcome.bucket},
              {"latency_s", r.latency_s},
              {"server_alive_after", r.server_alive_after},
              {"hint_bucket", r.hint_bucket},
              {"t_s", r.t_s}};
}

FuzzRecord fuzz_record_from_json(const Json& j) {
  FuzzRecord r;
  r.seq = j.at("seq").get<int>();
  const auto a = action_from_name(j.at("action").get<std::string>());
  if (!a) throw std::invalid_argument("unknown action in fuzz record");
  r.action = *a;
  const auto m = mutation_from_name(j.at("mutation").get<std::string>());
  if (!m) throw std::invalid_argument("unknown mutation in fuzz record");
  r.mutation = *m;
  r.sent = j.at("sent").get<std::string>();
  r.outcome = OutcomeCode::from_bucket(j.at("bucket").get<int>());
  if (r.outcome.wire_type != j.at("wire_type").get<int>()) {
    throw std::invalid_argument("fuzz record wire_type does not match bucket");
  }
  r.latency_s = j.at("latency_s").get<double>();
  r.server_alive_after = j.at("server_alive_after").get<bool>();
  r.hint_bucket = j.at("hint_bucket").get<int>();
  r.t_s = j.at("t_s").get<double>();
  return r;
}

OutcomeCode classify(std::string_view sent, const std::optional<OcppFrame>& response,
                     double latency_s, bool server_alive_after) {
  (void)sent;
  (void)latency_s;
  if (response && std::holds_alternative<Call>(*response)) {
    throw Unclassifiable("CSMS answered with a CALL");
  }
  if (!server_alive_after) return OutcomeCode::from_bucket(4);
  if (!response) return OutcomeCode::from_bucket(7);

  if (const auto* res = std::get_if<CallResult>(&*response)) {
    const Json& p = res->payload;
    const auto reason = string_at(p, {"statusInfo", "reasonCode"});
    if (reason == kJsonParseMarker || string_at(p, {"error"}) == kJsonParseMarker) {
      return OutcomeCode::from_bucket(3);
    }
    if (reason == kNotImplementedMarker) return OutcomeCode::from_bucket(2);
    auto status = string_at(p, {"status"});
    if (!status) status = string_at(p, {"idTokenInfo", "status"});
    if (status && *status != "Accepted") return OutcomeCode::from_bucket(2);
    return OutcomeCode::from_bucket(1);
  }

  const auto& err = std::get<CallError>(*response);
  if (err.error_details.is_object() && err.error_details.contains("unknownEntity")) {
    return OutcomeCode::from_bucket(6);
  }
  if (err.error_code == "PropertyConstraintViolation") return OutcomeCode::from_bucket(6);
  if (format_family().count(err.error_code)) return OutcomeCode::from_bucket(5);
  return OutcomeCode::from_bucket(7);
}

std::vector<FuzzSummaryRow> summarize_fuzz(std::span<const FuzzRecord> records) {
  std::map<OcppAction, FuzzSummaryRow> rows;
  std::map<OcppAction, std::array<std::size_t, 7>> counts;
  for (const FuzzRecord& r : records) {
    FuzzSummaryRow& row = rows[r.action];
    row.action = r.action;
    ++row.count;
    row.mean_latency_s += r.latency_s;
    ++counts[r.action][static_cast<std::size_t>(r.outcome.bucket - 1)];
  }
  std::vector<FuzzSummaryRow> out;
  for (auto& [action, row] : rows) {
    const double n = static_cast<double>(row.count);
    for (std::size_t b = 0; b < 7; ++b) row.pct[b] = 100.0 * static_cast<double>(counts[action][b]) / n;
    row.mean_latency_s /= n;
    out.push_back(row);
  }
  return out;
}

std::string fuzz_summary_csv(std::span<const FuzzSummaryRow> rows) {
  std::ostringstream out;
  out << "action,pct_3_1,pct_3_2,pct_3_3,pct_3_4,pct_4_5,pct_4_6,pct_4_7,mean_latency_ms\n";
  char buf[64];
  for (const FuzzSummaryRow& r : rows) {
    out << action_name(r.action);
    for (double p : r.pct) {
      std::snprintf(buf, sizeof buf, ",%.2f", p);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.3f\n", r.mean_latency_s * 1000.0);
    out << buf;
  }
  return out.str();
}

}  // namespace evsim
