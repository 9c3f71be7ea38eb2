// SPDX-License-Identifier: Apache-2.0
// Schema-driven OCPP message generator and the two fuzz campaign drivers.
#include <algorithm>
#include <cstdio>

#include "evsim/attack.hpp"

namespace evsim {

namespace {

using Pointer = Json::json_pointer;

// Gap between consecutive campaign sends on the campaign clock.
constexpr double kSendGap_s = 0.01;

bool coin(Rng& rng) { return uniform01(rng) < 0.5; }

std::string random_text(Rng& rng, std::size_t max_len) {
  static constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  const std::size_t len = 1 + uniform_index(rng, std::min<std::size_t>(max_len, 16));
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += kAlphabet[uniform_index(rng, kAlphabet.size())];
  return s;
}

Json gen_value(const Json& schema, Rng& rng) {
  if (schema.contains("enum")) return schema["enum"][uniform_index(rng, schema["enum"].size())];
  if (schema.contains("examples")) {
    return schema["examples"][uniform_index(rng, schema["examples"].size())];
  }
  const std::string type = schema.value("type", "object");
  if (type == "string") {
    if (schema.value("format", "") == "date-time") {
      return virtual_timestamp(static_cast<double>(uniform_index(rng, 365 * 86400)));
    }
    return random_text(rng, schema.value("maxLength", std::size_t{16}));
  }
  if (type == "integer") return static_cast<int>(uniform_index(rng, 1000));
  if (type == "number") return uniform(rng, 0.0, 1000.0);
  if (type == "boolean") return coin(rng);
  if (type == "array") {
    Json arr = Json::array();
    const std::size_t n = 1 + uniform_index(rng, 3);
    for (std::size_t i = 0; i < n; ++i) arr.push_back(gen_value(schema.value("items", Json::object()), rng));
    return arr;
  }
  Json obj = Json::object();
  const Json props = schema.value("properties", Json::object());
  const Json required = schema.value("required", Json::array());
  for (const auto& [key, sub] : props.items()) {
    const bool req = std::find(required.begin(), required.end(), Json(key)) != required.end();
    if (req || coin(rng)) obj[key] = gen_value(sub, rng);
  }
  return obj;
}

struct Field {
  Pointer ptr;
  const Json* schema;
  bool required;
};

// Every field present in `value`, depth first.
void collect(const Json& schema, const Json& value, const Pointer& at, std::vector<Field>& out) {
  const auto props = schema.find("properties");
  if (!value.is_object() || props == schema.end()) return;
  const Json required = schema.value("required", Json::array());
  for (const auto& [key, sub] : props->items()) {
    if (!value.contains(key)) continue;
    const bool req = std::find(required.begin(), required.end(), Json(key)) != required.end();
    out.push_back(Field{at / key, &sub, req});
    collect(sub, value[key], at / key, out);
  }
}

Json wrong_type(const Json& v) {
  if (v.is_string()) return 12345;
  if (v.is_number()) return "not-a-number";
  if (v.is_boolean()) return "yes";
  if (v.is_array()) return "not-an-array";
  return 42;
}

std::string message_id(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "fz-%08x", static_cast<unsigned>(rng() & 0xffffffffu));
  return buf;
}

std::vector<Field> pick_fields(std::vector<Field> fields, bool (*keep)(const Field&)) {
  fields.erase(std::remove_if(fields.begin(), fields.end(), [&](const Field& f) { return !keep(f); }),
               fields.end());
  return fields;
}

FuzzRecord exchange(int seq, OcppAction action, MutationMode mode, CsmsState& csms,
                    const CsmsPolicy& policy, Rng& rng, double& clock) {
  if (!csms.alive) csms = csms_restart(std::move(csms));
  GeneratedMessage msg = gen_message(action, mode, rng);
  const CsmsReply reply =
      csms_receive(csms, policy, msg.bytes, SimTime{clock, static_cast<std::uint64_t>(seq)});
  FuzzRecord r;
  r.seq = seq;
  r.action = action;
  r.mutation = msg.applied;
  r.sent = std::move(msg.bytes);
  r.latency_s = reply.latency_s;
  r.server_alive_after = csms.alive;
  r.outcome = classify(r.sent, reply.response, reply.latency_s, r.server_alive_after);
  r.hint_bucket = reply.outcome_hint;
  r.t_s = clock;
  clock += reply.latency_s + kSendGap_s;
  return r;
}

}  // namespace

std::span<const std::string> fuzz_token_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> p;
    for (const Json& t : action_schema(OcppAction::AuthorizeReq)["properties"]["idToken"]
                             ["properties"]["idToken"]["examples"]) {
      p.push_back(t.get<std::string>());
    }
    return p;
  }();
  return pool;
}

GeneratedMessage gen_message(OcppAction action, MutationMode mode, Rng& rng) {
  const Json& schema = action_schema(action);
  const std::string id = message_id(rng);
  Json payload = gen_value(schema, rng);
  std::vector<Field> fields;
  collect(schema, payload, Pointer{}, fields);

  MutationMode applied = mode;
  auto mutate_one = [&](const std::vector<Field>& candidates, auto&& fn) {
    if (candidates.empty()) {
      applied = MutationMode::UnknownField;
      return;
    }
    fn(candidates[uniform_index(rng, candidates.size())]);
  };

  switch (mode) {
    case MutationMode::None:
    case MutationMode::TruncateJson:
      break;
    case MutationMode::DropRequired:
      mutate_one(pick_fields(fields, [](const Field& f) { return f.required; }), [&](const Field& f) {
        payload[f.ptr.parent_pointer()].erase(f.ptr.back());
      });
      break;
    case MutationMode::WrongType:
      mutate_one(fields, [&](const Field& f) { payload[f.ptr] = wrong_type(payload[f.ptr]); });
      break;
    case MutationMode::EnumOutOfRange:
      mutate_one(pick_fields(fields, [](const Field& f) { return f.schema->contains("enum"); }),
                 [&](const Field& f) { payload[f.ptr] = "NotA" + random_text(rng, 8); });
      break;
    case MutationMode::UnknownField:
      break;
  }
  if (applied == MutationMode::UnknownField) payload["fuzz" + random_text(rng, 6)] = "x";

  std::string bytes = encode_frame(Call{id, action, payload});
  if (mode == MutationMode::TruncateJson) {
    bytes.resize(1 + uniform_index(rng, bytes.size() - 1));
  }
  return GeneratedMessage{std::move(bytes), applied};
}

std::vector<FuzzRecord> run_random_fuzz(const FuzzPlan& plan, CsmsState& csms,
                                        const CsmsPolicy& policy, double start_s) {
  Rng rng(derive_seed(plan.seed, 1));
  std::vector<OcppAction> order;
  for (OcppAction a : plan.actions) order.insert(order.end(), static_cast<std::size_t>(plan.repetitions), a);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  std::vector<FuzzRecord> out;
  out.reserve(order.size());
  double clock = start_s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const MutationMode mode = plan.mutation_modes[uniform_index(rng, plan.mutation_modes.size())];
    out.push_back(exchange(static_cast<int>(i), order[i], mode, csms, policy, rng, clock));
  }
  return out;
}

std::vector<FuzzRecord> run_state_fuzz(const FuzzPlan& plan, CsmsState& csms,
                                       const CsmsPolicy& policy, double start_s) {
  Rng rng(derive_seed(plan.seed, 2));
  std::vector<OcppAction> sequence;
  for (ActionGroup g : kGroupOrder) {
    for (OcppAction a : group_members(g)) {
      if (std::find(plan.actions.begin(), plan.actions.end(), a) != plan.actions.end()) {
        sequence.push_back(a);
      }
    }
  }
  std::vector<MutationMode> faulty;
  for (MutationMode m : plan.mutation_modes) {
    if (m != MutationMode::None) faulty.push_back(m);
  }
  if (faulty.empty()) faulty.push_back(MutationMode::None);

  std::vector<FuzzRecord> out;
  out.reserve(sequence.size() * static_cast<std::size_t>(plan.repetitions));
  double clock = start_s;
  int seq = 0;
  for (int rep = 0; rep < plan.repetitions; ++rep) {
    for (std::size_t i = 0; i < sequence.size(); ++i) {
      const bool inject = std::binary_search(plan.injection_points.begin(),
                                             plan.injection_points.end(), static_cast<int>(i));
      const MutationMode mode = inject ? faulty[uniform_index(rng, faulty.size())] : MutationMode::None;
      out.push_back(exchange(seq++, sequence[i], mode, csms, policy, rng, clock));
    }
  }
  return out;
}

std::vector<FuzzRecord> run_fuzz(const FuzzPlan& plan, CsmsState& csms, const CsmsPolicy& policy,
                                 double start_s) {
  return plan.strategy == FuzzStrategy::Random ? run_random_fuzz(plan, csms, policy, start_s)
                                               : run_state_fuzz(plan, csms, policy, start_s);
}

}  // namespace evsim
