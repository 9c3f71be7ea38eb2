// SPDX-License-Identifier: Apache-2.0
#include "evsim/telemetry.hpp"

#include <array>
#include <fstream>
#include <sstream>

namespace evsim {

namespace {

constexpr std::array<std::pair<RecordKind, std::string_view>, 11> kKindNames = {{
    {RecordKind::ScenarioStart, "scenario-start"},
    {RecordKind::ScenarioEnd, "scenario-end"},
    {RecordKind::StateTransition, "state-transition"},
    {RecordKind::V2gMsg, "v2g-msg"},
    {RecordKind::OcppMsg, "ocpp-msg"},
    {RecordKind::Packet, "packet"},
    {RecordKind::AttackStart, "attack-start"},
    {RecordKind::AttackEnd, "attack-end"},
    {RecordKind::FuzzRecord, "fuzz-record"},
    {RecordKind::PowerSample, "power-sample"},
    {RecordKind::Error, "error"},
}};

bool matches(const TelemetryRecord& r, const Query& q) {
  if (q.time_range && (r.ts < q.time_range->first || r.ts > q.time_range->second)) return false;
  if (q.source && r.source != *q.source) return false;
  if (q.kind && r.kind != *q.kind) return false;
  if (q.session_id && r.session_id != q.session_id) return false;
  return true;
}

}  // namespace

std::string_view record_kind_name(RecordKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<RecordKind> record_kind_from_name(std::string_view name) {
  for (const auto& [kind, n] : kKindNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

std::string_view layer_name(Layer l) {
  switch (l) {
    case Layer::L1: return "L1";
    case Layer::L2: return "L2";
    case Layer::L3: return "L3";
    case Layer::L4: return "L4";
  }
  return "?";
}

std::optional<Layer> layer_from_name(std::string_view name) {
  for (Layer l : {Layer::L1, Layer::L2, Layer::L3, Layer::L4}) {
    if (layer_name(l) == name) return l;
  }
  return std::nullopt;
}

TelemetryRecord make_record(double ts, std::string source, RecordKind kind, Json payload) {
  TelemetryRecord r;
  r.ts = ts;
  r.source = std::move(source);
  r.kind = kind;
  r.payload = std::move(payload);
  return r;
}

std::uint64_t TelemetryStore::append(TelemetryRecord rec) {
  if (!records_.empty() && rec.ts < records_.back().ts) {
    throw OutOfOrder("telemetry timestamp regression: " + std::to_string(rec.ts) + " after " +
                     std::to_string(records_.back().ts));
  }
  rec.seq = records_.size();
  records_.push_back(std::move(rec));
  return records_.back().seq;
}

std::vector<TelemetryRecord> TelemetryStore::query(const Query& q) const {
  std::vector<TelemetryRecord> out;
  for (const TelemetryRecord& r : records_) {
    if (matches(r, q)) out.push_back(r);
  }
  return out;
}

Json record_to_json(const TelemetryRecord& r) {
  Json j = {{"ts", r.ts},
            {"seq", r.seq},
            {"source", r.source},
            {"kind", std::string(record_kind_name(r.kind))}};
  if (r.session_id) j["session_id"] = *r.session_id;
  if (r.layer) j["layer"] = std::string(layer_name(*r.layer));
  j["payload"] = r.payload;
  return j;
}

TelemetryRecord record_from_json(const Json& j) {
  static const std::array<std::string_view, 7> kKeys = {"ts",         "seq",   "source", "kind",
                                                        "session_id", "layer", "payload"};
  if (!j.is_object()) throw std::invalid_argument("record is not an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto key : kKeys) known = known || key == k;
    if (!known) throw std::invalid_argument("unknown key '" + k + "'");
  }
  TelemetryRecord r;
  if (!j.contains("ts") || !j["ts"].is_number()) throw std::invalid_argument("ts: expected a number");
  r.ts = j["ts"].get<double>();
  if (!j.contains("seq") || !j["seq"].is_number_unsigned()) {
    throw std::invalid_argument("seq: expected a non-negative integer");
  }
  r.seq = j["seq"].get<std::uint64_t>();
  if (!j.contains("source") || !j["source"].is_string()) {
    throw std::invalid_argument("source: expected a string");
  }
  r.source = j["source"].get<std::string>();
  if (!j.contains("kind") || !j["kind"].is_string()) throw std::invalid_argument("kind: expected a string");
  const auto kind = record_kind_from_name(j["kind"].get<std::string>());
  if (!kind) throw std::invalid_argument("kind: unknown '" + j["kind"].get<std::string>() + "'");
  r.kind = *kind;
  if (j.contains("session_id")) {
    if (!j["session_id"].is_string()) throw std::invalid_argument("session_id: expected a string");
    r.session_id = j["session_id"].get<std::string>();
  }
  if (j.contains("layer")) {
    const auto layer = j["layer"].is_string() ? layer_from_name(j["layer"].get<std::string>()) : std::nullopt;
    if (!layer) throw std::invalid_argument("layer: expected L1..L4");
    r.layer = *layer;
  }
  if (!j.contains("payload") || !j["payload"].is_object()) {
    throw std::invalid_argument("payload: expected an object");
  }
  r.payload = j["payload"];
  return r;
}

std::string to_jsonl(const TelemetryStore& store) {
  std::string out;
  for (const TelemetryRecord& r : store.records()) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

TelemetryStore parse_jsonl(std::string_view text) {
  TelemetryStore store;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    TelemetryRecord rec;
    try {
      rec = record_from_json(Json::parse(line));
    } catch (const Json::exception& e) {
      throw TelemetryFormatError(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw TelemetryFormatError(line_no, e.what());
    }
    if (rec.seq != store.size()) {
      throw TelemetryFormatError(line_no, "seq " + std::to_string(rec.seq) + " out of sequence");
    }
    try {
      store.append(std::move(rec));
    } catch (const OutOfOrder& e) {
      throw TelemetryFormatError(line_no, e.what());
    }
  }
  return store;
}

void export_jsonl(const TelemetryStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TelemetryIoError("cannot open '" + path.string() + "' for writing");
  out << to_jsonl(store);
  if (!out) throw TelemetryIoError("failed while writing '" + path.string() + "'");
}

TelemetryStore load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TelemetryIoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

}  // namespace evsim
