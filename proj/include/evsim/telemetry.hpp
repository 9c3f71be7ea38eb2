// SPDX-License-Identifier: Apache-2.0
// Append-only telemetry store with JSONL persistence.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace evsim {

using Json = nlohmann::json;

enum class RecordKind {
  ScenarioStart,
  ScenarioEnd,
  StateTransition,
  V2gMsg,
  OcppMsg,
  Packet,
  AttackStart,
  AttackEnd,
  FuzzRecord,
  PowerSample,
  Error,
};

std::string_view record_kind_name(RecordKind k);
std::optional<RecordKind> record_kind_from_name(std::string_view name);

enum class Layer { L1, L2, L3, L4 };

std::string_view layer_name(Layer l);
std::optional<Layer> layer_from_name(std::string_view name);

struct TelemetryRecord {
  double ts = 0.0;
  std::uint64_t seq = 0;  // assigned by the store
  std::string source;     // ev:<id> | evse:<id> | csms | attack | link:<id>
  RecordKind kind = RecordKind::Error;
  std::optional<std::string> session_id;
  std::optional<Layer> layer;
  Json payload = Json::object();

  bool operator==(const TelemetryRecord&) const = default;
};

TelemetryRecord make_record(double ts, std::string source, RecordKind kind, Json payload = Json::object());

struct Query {
  std::optional<std::pair<double, double>> time_range;  // inclusive
  std::optional<std::string> source;
  std::optional<RecordKind> kind;
  std::optional<std::string> session_id;
};

class OutOfOrder : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TelemetryIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TelemetryFormatError : public std::runtime_error {
 public:
  TelemetryFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TelemetryStore {
 public:
  /// Appends and returns the record's sequence position. Throws OutOfOrder
  /// on a timestamp regression.
  std::uint64_t append(TelemetryRecord rec);

  std::vector<TelemetryRecord> query(const Query& q) const;

  const std::vector<TelemetryRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool operator==(const TelemetryStore&) const = default;

 private:
  std::vector<TelemetryRecord> records_;
};

Json record_to_json(const TelemetryRecord& r);
TelemetryRecord record_from_json(const Json& j);  // throws std::invalid_argument

std::string to_jsonl(const TelemetryStore& store);
TelemetryStore parse_jsonl(std::string_view text);

void export_jsonl(const TelemetryStore& store, const std::filesystem::path& path);
TelemetryStore load_jsonl(const std::filesystem::path& path);

}  // namespace evsim
