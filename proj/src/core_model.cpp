// SPDX-License-Identifier: Apache-2.0
#include "evsim/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace evsim {

namespace {

// Walks a JSON object, tracking the element path for error messages and
// rejecting keys that were never read.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_.empty() ? "$" : path_, "expected an object");
  }

  std::string at(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) {
    seen_.insert(std::string(key));
    return j_.contains(key);
  }

  const Json& raw(std::string_view key) {
    if (!has(key)) throw SchemaError(at(key), "required field missing");
    return j_.at(std::string(key));
  }

  double number(std::string_view key) { return as_number(raw(key), at(key)); }

  double number_or(std::string_view key, double fallback) {
    return has(key) ? as_number(j_.at(std::string(key)), at(key)) : fallback;
  }

  std::optional<double> optional_number(std::string_view key) {
    if (!has(key)) return std::nullopt;
    return as_number(j_.at(std::string(key)), at(key));
  }

  std::string string(std::string_view key) { return as_string(raw(key), at(key)); }

  std::string string_or(std::string_view key, std::string fallback) {
    return has(key) ? as_string(j_.at(std::string(key)), at(key)) : fallback;
  }

  bool boolean_or(std::string_view key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(std::string(key));
    if (!v.is_boolean()) throw SchemaError(at(key), "expected a boolean");
    return v.get<bool>();
  }

  std::uint64_t unsigned_or(std::string_view key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(std::string(key));
    if (!v.is_number_unsigned()) throw SchemaError(at(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  const Json* optional_raw(std::string_view key) {
    if (!has(key)) return nullptr;
    return &j_.at(std::string(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw SchemaError(at(k), "unknown field");
    }
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected a number");
    return v.get<double>();
  }

  static std::string as_string(const Json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path, "expected a string");
    return v.get<std::string>();
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& reason) {
  if (!ok) throw SchemaError(path, reason);
}

const Json& require_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array");
  return v;
}

EvConfig parse_ev(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  EvConfig ev;
  ev.id = r.string("id");
  require(!ev.id.empty(), r.at("id"), "must be non-empty");
  ev.battery_capacity_kwh = r.number("battery_capacity_kwh");
  require(ev.battery_capacity_kwh > 0, r.at("battery_capacity_kwh"), "must be > 0");
  ev.initial_soc = r.number("initial_soc");
  require(ev.initial_soc >= 0 && ev.initial_soc <= 1, r.at("initial_soc"), "must be in [0, 1]");
  ev.max_charge_rate_kw = r.number("max_charge_rate_kw");
  require(ev.max_charge_rate_kw > 0, r.at("max_charge_rate_kw"), "must be > 0");
  ev.plug_in_time_s = r.number_or("plug_in_time_s", 0.0);
  require(ev.plug_in_time_s >= 0, r.at("plug_in_time_s"), "must be >= 0");
  ev.target_evse = r.string("target_evse");
  ev.interrupt_at_s = r.optional_number("interrupt_at_s");
  if (ev.interrupt_at_s) require(*ev.interrupt_at_s >= 0, r.at("interrupt_at_s"), "must be >= 0");
  r.finish();
  return ev;
}

EvseConfig parse_evse(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  EvseConfig e;
  e.id = r.string("id");
  require(!e.id.empty(), r.at("id"), "must be non-empty");
  e.max_power_kw = r.number("max_power_kw");
  require(e.max_power_kw > 0, r.at("max_power_kw"), "must be > 0");
  e.location = r.string_or("location", "");
  e.charge_status_timeout_s = r.number_or("charge_status_timeout_s", 2.0);
  require(e.charge_status_timeout_s > 0, r.at("charge_status_timeout_s"), "must be > 0");
  e.state_timeout_s = r.number_or("state_timeout_s", 2.0);
  require(e.state_timeout_s > 0, r.at("state_timeout_s"), "must be > 0");
  e.heartbeat_interval_s = r.number_or("heartbeat_interval_s", 1.0);
  require(e.heartbeat_interval_s > 0, r.at("heartbeat_interval_s"), "must be > 0");
  e.link_latency_s = r.number_or("link_latency_s", 0.005);
  require(e.link_latency_s >= 0, r.at("link_latency_s"), "must be >= 0");
  e.link_loss_prob = r.number_or("link_loss_prob", 0.0);
  require(e.link_loss_prob >= 0 && e.link_loss_prob <= 1, r.at("link_loss_prob"),
          "must be in [0, 1]");
  r.finish();
  return e;
}

CsmsPolicy parse_csms(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  CsmsPolicy p;
  p.require_boot_first = r.boolean_or("require_boot_first", p.require_boot_first);
  if (const Json* tokens = r.optional_raw("known_id_tokens")) {
    require_array(*tokens, r.at("known_id_tokens"));
    for (std::size_t i = 0; i < tokens->size(); ++i) {
      p.known_id_tokens.insert(ObjectReader::as_string(
          (*tokens)[i], r.at("known_id_tokens") + "[" + std::to_string(i) + "]"));
    }
  }
  p.allow_clear_cache = r.boolean_or("allow_clear_cache", p.allow_clear_cache);
  const std::string boot = r.string_or("boot_shutdown_policy", "ShutdownOnBoot");
  if (boot == "ShutdownOnBoot") {
    p.boot_shutdown_policy = BootPolicy::ShutdownOnBoot;
  } else if (boot == "AcceptBoot") {
    p.boot_shutdown_policy = BootPolicy::AcceptBoot;
  } else {
    throw SchemaError(r.at("boot_shutdown_policy"), "expected ShutdownOnBoot or AcceptBoot");
  }
  p.cert_latency_s = r.number_or("cert_latency_s", p.cert_latency_s);
  require(p.cert_latency_s >= 0, r.at("cert_latency_s"), "must be >= 0");
  p.strict_parsing = r.boolean_or("strict_parsing", p.strict_parsing);
  p.clear_cache_internal_error_rate =
      r.number_or("clear_cache_internal_error_rate", p.clear_cache_internal_error_rate);
  require(p.clear_cache_internal_error_rate >= 0 && p.clear_cache_internal_error_rate <= 1,
          r.at("clear_cache_internal_error_rate"), "must be in [0, 1]");
  r.finish();
  return p;
}

Json canonical_params(const AttackPlan& plan, std::uint64_t seed) {
  switch (plan.kind) {
    case AttackKind::BrokenWireL1:
      return Json::object();
    case AttackKind::BrokenWireL3: {
      const PowerDisruptionParams p = power_params(plan);
      return Json{{"reduction_factor", p.reduction_factor}, {"jitter", p.jitter}};
    }
    case AttackKind::Fuzzification: {
      const FuzzPlan f = fuzz_plan(plan, seed);
      Json actions = Json::array();
      for (OcppAction a : f.actions) actions.push_back(std::string(action_name(a)));
      Json modes = Json::array();
      for (MutationMode m : f.mutation_modes) modes.push_back(std::string(mutation_name(m)));
      return Json{{"strategy", f.strategy == FuzzStrategy::Random ? "random" : "state-based"},
                  {"repetitions", f.repetitions},
                  {"actions", actions},
                  {"mutation_modes", modes},
                  {"injection_points", f.injection_points},
                  {"seed", f.seed}};
    }
  }
  return Json::object();
}

AttackPlan parse_attack(const Json& j, const std::string& path, std::uint64_t seed) {
  ObjectReader r(j, path);
  AttackPlan plan;
  const std::string kind = r.string("kind");
  const auto k = attack_kind_from_name(kind);
  if (!k) throw SchemaError(r.at("kind"), "unknown attack kind '" + kind + "'");
  plan.kind = *k;
  plan.target_id = r.string("target_id");
  plan.start_s = r.number("start_s");
  require(plan.start_s >= 0, r.at("start_s"), "must be >= 0");
  plan.duration_s = r.optional_number("duration_s");
  if (plan.duration_s) require(*plan.duration_s > 0, r.at("duration_s"), "must be > 0");
  if (const Json* params = r.optional_raw("params")) {
    require(params->is_object(), r.at("params"), "expected an object");
    plan.params = *params;
  }
  r.finish();

  if (plan.kind == AttackKind::BrokenWireL3 && !plan.duration_s) {
    throw SchemaError(r.at("duration_s"), "required for broken-wire-l3");
  }
  if (plan.kind == AttackKind::Fuzzification && !plan.params.contains("strategy")) {
    throw SchemaError(r.at("params.strategy"), "required for fuzzification");
  }
  try {
    plan.params = canonical_params(plan, seed);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
  return plan;
}

Timing parse_timing(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Timing t;
  t.tick_s = r.number_or("tick_s", t.tick_s);
  require(t.tick_s > 0, r.at("tick_s"), "must be > 0");
  t.handshake_delay_s = r.number_or("handshake_delay_s", t.handshake_delay_s);
  require(t.handshake_delay_s >= 0, r.at("handshake_delay_s"), "must be >= 0");
  t.power_down_ramp_s = r.number_or("power_down_ramp_s", t.power_down_ramp_s);
  require(t.power_down_ramp_s >= 0, r.at("power_down_ramp_s"), "must be >= 0");
  t.power_sample_s = r.number_or("power_sample_s", t.power_sample_s);
  require(t.power_sample_s > 0, r.at("power_sample_s"), "must be > 0");
  r.finish();
  return t;
}

// Upper estimate of how long an EV keeps its EVSE busy, used for the
// plug-in overlap check.
double estimated_occupancy_s(const EvConfig& ev, const EvseConfig& evse, const Timing& t) {
  const double kw = std::min(ev.max_charge_rate_kw, evse.max_power_kw);
  const double charge_s = ev.battery_capacity_kwh * (1.0 - ev.initial_soc) / kw * 3600.0;
  const double handshake_s = 3 * (t.handshake_delay_s + 2 * evse.link_latency_s);
  double busy = handshake_s + charge_s + t.tick_s + t.power_down_ramp_s;
  if (ev.interrupt_at_s && *ev.interrupt_at_s >= ev.plug_in_time_s) {
    busy = std::min(busy, *ev.interrupt_at_s - ev.plug_in_time_s + t.power_down_ramp_s + t.tick_s);
  }
  return busy;
}

}  // namespace

std::string_view attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::BrokenWireL1: return "broken-wire-l1";
    case AttackKind::BrokenWireL3: return "broken-wire-l3";
    case AttackKind::Fuzzification: return "fuzzification";
  }
  return "?";
}

std::optional<AttackKind> attack_kind_from_name(std::string_view name) {
  for (AttackKind k : {AttackKind::BrokenWireL1, AttackKind::BrokenWireL3, AttackKind::Fuzzification}) {
    if (attack_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view mutation_name(MutationMode m) {
  switch (m) {
    case MutationMode::None: return "None";
    case MutationMode::DropRequired: return "DropRequired";
    case MutationMode::WrongType: return "WrongType";
    case MutationMode::EnumOutOfRange: return "EnumOutOfRange";
    case MutationMode::UnknownField: return "UnknownField";
    case MutationMode::TruncateJson: return "TruncateJson";
  }
  return "?";
}

std::optional<MutationMode> mutation_from_name(std::string_view name) {
  for (MutationMode m : {MutationMode::None, MutationMode::DropRequired, MutationMode::WrongType,
                         MutationMode::EnumOutOfRange, MutationMode::UnknownField,
                         MutationMode::TruncateJson}) {
    if (mutation_name(m) == name) return m;
  }
  return std::nullopt;
}

PowerDisruptionParams power_params(const AttackPlan& plan) {
  PowerDisruptionParams p;
  for (const auto& [k, v] : plan.params.items()) {
    if (k != "reduction_factor" && k != "jitter") {
      throw std::invalid_argument("params." + k + ": unknown field");
    }
    if (!v.is_number()) throw std::invalid_argument("params." + k + ": expected a number");
  }
  p.reduction_factor = plan.params.value("reduction_factor", p.reduction_factor);
  p.jitter = plan.params.value("jitter", p.jitter);
  if (!(p.reduction_factor > 0 && p.reduction_factor < 1)) {
    throw std::invalid_argument("params.reduction_factor: must be in (0, 1)");
  }
  if (!(p.jitter >= 0 && p.jitter <= 0.05)) {
    throw std::invalid_argument("params.jitter: must be in [0, 0.05]");
  }
  return p;
}

FuzzPlan fuzz_plan(const AttackPlan& plan, std::uint64_t default_seed) {
  FuzzPlan f;
  f.seed = default_seed;
  const Json& p = plan.params;
  static const std::set<std::string> kKeys = {"strategy",       "repetitions",      "actions",
                                              "mutation_modes", "injection_points", "seed"};
  for (const auto& [k, v] : p.items()) {
    if (!kKeys.count(k)) throw std::invalid_argument("params." + k + ": unknown field");
  }
  if (!p.contains("strategy") || !p["strategy"].is_string()) {
    throw std::invalid_argument("params.strategy: required string");
  }
  const std::string strategy = p["strategy"].get<std::string>();
  if (strategy == "random") {
    f.strategy = FuzzStrategy::Random;
  } else if (strategy == "state-based") {
    f.strategy = FuzzStrategy::StateBased;
  } else {
    throw std::invalid_argument("params.strategy: expected random or state-based");
  }
  if (p.contains("repetitions")) {
    if (!p["repetitions"].is_number_integer() || p["repetitions"].get<long long>() < 1) {
      throw std::invalid_argument("params.repetitions: must be an integer >= 1");
    }
    f.repetitions = p["repetitions"].get<int>();
  }
  if (p.contains("actions")) {
    if (!p["actions"].is_array() || p["actions"].empty()) {
      throw std::invalid_argument("params.actions: expected a non-empty array");
    }
    f.actions.clear();
    for (const Json& a : p["actions"]) {
      const auto act = a.is_string() ? action_from_name(a.get<std::string>()) : std::nullopt;
      if (!act) throw std::invalid_argument("params.actions: unknown action " + a.dump());
      if (std::find(f.actions.begin(), f.actions.end(), *act) == f.actions.end()) {
        f.actions.push_back(*act);
      }
    }
    std::sort(f.actions.begin(), f.actions.end());
  }
  if (p.contains("mutation_modes")) {
    if (!p["mutation_modes"].is_array() || p["mutation_modes"].empty()) {
      throw std::invalid_argument("params.mutation_modes: expected a non-empty array");
    }
    f.mutation_modes.clear();
    for (const Json& m : p["mutation_modes"]) {
      const auto mode = m.is_string() ? mutation_from_name(m.get<std::string>()) : std::nullopt;
      if (!mode) throw std::invalid_argument("params.mutation_modes: unknown mode " + m.dump());
      if (std::find(f.mutation_modes.begin(), f.mutation_modes.end(), *mode) ==
          f.mutation_modes.end()) {
        f.mutation_modes.push_back(*mode);
      }
    }
    std::sort(f.mutation_modes.begin(), f.mutation_modes.end());
  }
  if (p.contains("injection_points")) {
    if (!p["injection_points"].is_array()) {
      throw std::invalid_argument("params.injection_points: expected an array");
    }
    for (const Json& i : p["injection_points"]) {
      if (!i.is_number_integer() || i.get<long long>() < 0) {
        throw std::invalid_argument("params.injection_points: expected non-negative integers");
      }
      f.injection_points.push_back(i.get<int>());
    }
    std::sort(f.injection_points.begin(), f.injection_points.end());
    f.injection_points.erase(std::unique(f.injection_points.begin(), f.injection_points.end()),
                             f.injection_points.end());
  }
  if (p.contains("seed")) {
    if (!p["seed"].is_number_unsigned()) {
      throw std::invalid_argument("params.seed: expected a non-negative integer");
    }
    f.seed = p["seed"].get<std::uint64_t>();
  }
  return f;
}

Scenario parse_scenario(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw SyntaxError("", std::string("malformed scenario document: ") + e.what());
  }

  ObjectReader r(doc, "");
  Scenario s;
  s.seed = r.unsigned_or("seed", 0);

  const Json& evs = require_array(r.raw("evs"), "evs");
  for (std::size_t i = 0; i < evs.size(); ++i) {
    s.evs.push_back(parse_ev(evs[i], "evs[" + std::to_string(i) + "]"));
  }
  const Json& evses = require_array(r.raw("evses"), "evses");
  for (std::size_t i = 0; i < evses.size(); ++i) {
    s.evses.push_back(parse_evse(evses[i], "evses[" + std::to_string(i) + "]"));
  }
  if (const Json* csms = r.optional_raw("csms")) s.csms = parse_csms(*csms, "csms");
  if (const Json* attacks = r.optional_raw("attacks")) {
    require_array(*attacks, "attacks");
    for (std::size_t i = 0; i < attacks->size(); ++i) {
      s.attacks.push_back(parse_attack((*attacks)[i], "attacks[" + std::to_string(i) + "]", s.seed));
    }
  }
  s.schedule_end_s = r.number("schedule_end_s");
  require(s.schedule_end_s > 0, "schedule_end_s", "must be > 0");
  if (const Json* profile = r.optional_raw("baseline_load_profile")) {
    require_array(*profile, "baseline_load_profile");
    require(profile->size() == 24, "baseline_load_profile", "expected 24 hourly values");
    for (std::size_t i = 0; i < profile->size(); ++i) {
      const std::string path = "baseline_load_profile[" + std::to_string(i) + "]";
      const double v = ObjectReader::as_number((*profile)[i], path);
      require(v >= 0, path, "must be >= 0");
      s.baseline_load_profile.push_back(v);
    }
  }
  if (const Json* timing = r.optional_raw("timing")) s.timing = parse_timing(*timing, "timing");
  r.finish();
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SyntaxError("", "cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& s) {
  Json evs = Json::array();
  for (const EvConfig& ev : s.evs) {
    Json j = {{"id", ev.id},
              {"battery_capacity_kwh", ev.battery_capacity_kwh},
              {"initial_soc", ev.initial_soc},
              {"max_charge_rate_kw", ev.max_charge_rate_kw},
              {"plug_in_time_s", ev.plug_in_time_s},
              {"target_evse", ev.target_evse}};
    if (ev.interrupt_at_s) j["interrupt_at_s"] = *ev.interrupt_at_s;
    evs.push_back(std::move(j));
  }
  Json evses = Json::array();
  for (const EvseConfig& e : s.evses) {
    evses.push_back({{"id", e.id},
                     {"max_power_kw", e.max_power_kw},
                     {"location", e.location},
                     {"charge_status_timeout_s", e.charge_status_timeout_s},
                     {"state_timeout_s", e.state_timeout_s},
                     {"heartbeat_interval_s", e.heartbeat_interval_s},
                     {"link_latency_s", e.link_latency_s},
                     {"link_loss_prob", e.link_loss_prob}});
  }
  Json attacks = Json::array();
  for (const AttackPlan& a : s.attacks) {
    Json j = {{"kind", std::string(attack_kind_name(a.kind))},
              {"target_id", a.target_id},
              {"start_s", a.start_s},
              {"params", a.params}};
    if (a.duration_s) j["duration_s"] = *a.duration_s;
    attacks.push_back(std::move(j));
  }
  const CsmsPolicy& p = s.csms;
  Json csms = {{"require_boot_first", p.require_boot_first},
               {"known_id_tokens", p.known_id_tokens},
               {"allow_clear_cache", p.allow_clear_cache},
               {"boot_shutdown_policy", p.boot_shutdown_policy == BootPolicy::ShutdownOnBoot
                                            ? "ShutdownOnBoot"
                                            : "AcceptBoot"},
               {"cert_latency_s", p.cert_latency_s},
               {"strict_parsing", p.strict_parsing},
               {"clear_cache_internal_error_rate", p.clear_cache_internal_error_rate}};
  Json doc = {{"evs", evs},
              {"evses", evses},
              {"csms", csms},
              {"attacks", attacks},
              {"schedule_end_s", s.schedule_end_s},
              {"seed", s.seed},
              {"timing",
               {{"tick_s", s.timing.tick_s},
                {"handshake_delay_s", s.timing.handshake_delay_s},
                {"power_down_ramp_s", s.timing.power_down_ramp_s},
                {"power_sample_s", s.timing.power_sample_s}}}};
  if (!s.baseline_load_profile.empty()) doc["baseline_load_profile"] = s.baseline_load_profile;
  return doc.dump(2);
}

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  auto idx = [](const char* base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; };

  if (!(s.schedule_end_s > 0)) out.push_back({"schedule_end_s", "must be > 0"});
  if (!s.baseline_load_profile.empty() && s.baseline_load_profile.size() != 24) {
    out.push_back({"baseline_load_profile", "expected 24 hourly values"});
  }
  for (std::size_t i = 0; i < s.baseline_load_profile.size(); ++i) {
    if (!(s.baseline_load_profile[i] >= 0)) out.push_back({idx("baseline_load_profile", i), "must be >= 0"});
  }

  std::map<std::string, std::size_t> evse_index;
  for (std::size_t i = 0; i < s.evses.size(); ++i) {
    const EvseConfig& e = s.evses[i];
    if (!evse_index.emplace(e.id, i).second) out.push_back({idx("evses", i) + ".id", "duplicate EVSE id '" + e.id + "'"});
    if (!(e.max_power_kw > 0)) out.push_back({idx("evses", i) + ".max_power_kw", "must be > 0"});
    if (!(e.charge_status_timeout_s > 0)) {
      out.push_back({idx("evses", i) + ".charge_status_timeout_s", "must be > 0"});
    }
  }

  std::set<std::string> ev_ids;
  for (std::size_t i = 0; i < s.evs.size(); ++i) {
    const EvConfig& ev = s.evs[i];
    const std::string p = idx("evs", i);
    if (!ev_ids.insert(ev.id).second) out.push_back({p + ".id", "duplicate EV id '" + ev.id + "'"});
    if (!(ev.initial_soc >= 0 && ev.initial_soc <= 1)) out.push_back({p + ".initial_soc", "must be in [0, 1]"});
    if (!(ev.battery_capacity_kwh > 0)) out.push_back({p + ".battery_capacity_kwh", "must be > 0"});
    if (!(ev.max_charge_rate_kw > 0)) out.push_back({p + ".max_charge_rate_kw", "must be > 0"});
    if (!evse_index.count(ev.target_evse)) {
      out.push_back({p + ".target_evse", "unresolved reference to EVSE '" + ev.target_evse + "'"});
    }
  }

  // Occupancy: EVs sharing an EVSE must not have overlapping estimated stays.
  for (std::size_t i = 0; i < s.evs.size(); ++i) {
    for (std::size_t j = i + 1; j < s.evs.size(); ++j) {
      const EvConfig& a = s.evs[i];
      const EvConfig& b = s.evs[j];
      if (a.target_evse != b.target_evse) continue;
      const auto it = evse_index.find(a.target_evse);
      if (it == evse_index.end()) continue;
      const EvseConfig& evse = s.evses[it->second];
      const EvConfig& first = a.plug_in_time_s <= b.plug_in_time_s ? a : b;
      const EvConfig& second = a.plug_in_time_s <= b.plug_in_time_s ? b : a;
      if (second.plug_in_time_s < first.plug_in_time_s + estimated_occupancy_s(first, evse, s.timing)) {
        out.push_back({idx("evs", j) + ".plug_in_time_s",
                       "EVs '" + a.id + "' and '" + b.id + "' overlap on EVSE '" + a.target_evse + "'"});
      }
    }
  }

  for (std::size_t i = 0; i < s.attacks.size(); ++i) {
    const AttackPlan& a = s.attacks[i];
    const std::string p = idx("attacks", i);
    switch (a.kind) {
      case AttackKind::BrokenWireL1: {
        bool found = evse_index.count(a.target_id) > 0;
        for (const EvseConfig& e : s.evses) found = found || cable_link_id(e.id) == a.target_id;
        if (!found) out.push_back({p + ".target_id", "unresolved reference to link or EVSE '" + a.target_id + "'"});
        break;
      }
      case AttackKind::BrokenWireL3:
        if (a.target_id != kAllEvses && !evse_index.count(a.target_id)) {
          out.push_back({p + ".target_id", "unresolved reference to EVSE '" + a.target_id + "'"});
        }
        if (!a.duration_s) out.push_back({p + ".duration_s", "required for broken-wire-l3"});
        break;
      case AttackKind::Fuzzification:
        if (a.target_id != kCsmsId) {
          out.push_back({p + ".target_id", "unresolved reference to CSMS '" + a.target_id + "'"});
        }
        break;
    }
    try {
      if (a.kind == AttackKind::BrokenWireL3) power_params(a);
      if (a.kind == AttackKind::Fuzzification) fuzz_plan(a, s.seed);
    } catch (const std::invalid_argument& e) {
      out.push_back({p, e.what()});
    }
  }
  return out;
}

BatteryState battery_step(BatteryState b, double delivered_kw, double dt_s) {
  const double gained = delivered_kw * dt_s / (3600.0 * b.capacity_kwh);
  b.soc = std::clamp(b.soc + gained, 0.0, 1.0);
  return b;
}

double baseline_load(std::span<const double> profile, double t_s) {
  if (profile.empty()) return 0.0;
  const double day = 86400.0;
  double t = std::fmod(t_s, day);
  if (t < 0) t += day;
  const double hours = t / 3600.0;
  const auto h = static_cast<std::size_t>(std::floor(hours)) % profile.size();
  const double frac = hours - std::floor(hours);
  const double lo = profile[h];
  if (frac == 0.0) return lo;
  const double hi = profile[(h + 1) % profile.size()];
  return lo + (hi - lo) * frac;
}

std::array<double, 24> reference_daily_profile() {
  return {12.0, 10.0, 9.0,  9.0,  10.0, 13.0, 17.0, 21.0, 24.0, 26.0, 28.0, 30.0,
          31.0, 33.0, 35.0, 36.0, 37.0, 37.0, 36.0, 34.0, 31.0, 25.0, 19.0, 15.0};
}

std::string cable_link_id(std::string_view evse_id) { return std::string(evse_id) + "-cable"; }

const EvConfig* find_ev(const Scenario& s, std::string_view id) {
  for (const EvConfig& ev : s.evs) {
    if (ev.id == id) return &ev;
  }
  return nullptr;
}

const EvseConfig* find_evse(const Scenario& s, std::string_view id) {
  for (const EvseConfig& e : s.evses) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

}  // namespace evsim
