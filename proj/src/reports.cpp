// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <sstream>

#include "evsim/runner.hpp"

namespace evsim {

RunResult result_from_store(TelemetryStore store) {
  RunResult r;
  for (const TelemetryRecord& rec : store.records()) {
    switch (rec.kind) {
      case RecordKind::Packet: {
        const Json& p = rec.payload;
        PacketCounters c;
        c.sent = p.value("sent", std::uint64_t{0});
        c.delivered = p.value("delivered", std::uint64_t{0});
        c.lost = p.value("lost", std::uint64_t{0});
        c.retransmitted = p.value("retransmitted", std::uint64_t{0});
        c.errored = p.value("errored", std::uint64_t{0});
        r.packet_logs[p.at("link").get<std::string>()].add(p.at("t").get<std::int64_t>(), c);
        break;
      }
      case RecordKind::FuzzRecord:
        if (!r.fuzz_records) r.fuzz_records.emplace();
        r.fuzz_records->push_back(fuzz_record_from_json(rec.payload));
        break;
      case RecordKind::ScenarioEnd:
        r.exit = rec.payload.value("exit", "Completed") == "Completed" ? RunExit::Completed
                                                                       : RunExit::Interrupted;
        break;
      default:
        break;
    }
  }
  r.store = std::move(store);
  return r;
}

std::string report_packets(const RunResult& result, std::string_view link_id) {
  const auto it = result.packet_logs.find(std::string(link_id));
  if (it == result.packet_logs.end()) throw UnknownLink("no packet log for link '" + std::string(link_id) + "'");
  std::int64_t to = it->second.buckets().empty() ? 0 : it->second.buckets().rbegin()->first + 1;
  for (const TelemetryRecord& rec : result.store.records()) {
    if (rec.kind == RecordKind::ScenarioStart && rec.payload.contains("schedule_end_s")) {
      to = std::max(to, static_cast<std::int64_t>(std::ceil(rec.payload["schedule_end_s"].get<double>())));
    }
  }
  return packet_series_csv(packet_series(it->second, 0, to));
}

std::vector<PowerRow> power_rows(const RunResult& result) {
  std::map<long, std::tuple<double, double, std::size_t>> hours;
  for (const TelemetryRecord& rec : result.store.records()) {
    if (rec.kind != RecordKind::PowerSample) continue;
    auto& [exp, del, n] = hours[static_cast<long>(std::floor(rec.ts / 3600.0))];
    exp += rec.payload.at("expected_mw").get<double>();
    del += rec.payload.at("delivered_mw").get<double>();
    ++n;
  }
  std::vector<PowerRow> rows;
  for (const auto& [hour, acc] : hours) {
    const auto& [exp, del, n] = acc;
    const double e = exp / static_cast<double>(n);
    const double d = del / static_cast<double>(n);
    rows.push_back(PowerRow{hour, e, d, e - d});
  }
  return rows;
}

std::string report_power(const RunResult& result) {
  std::ostringstream out;
  out << "hour,expected_mw,delivered_mw,deviation_mw\n";
  char buf[128];
  for (const PowerRow& r : power_rows(result)) {
    std::snprintf(buf, sizeof buf, "%ld,%.6f,%.6f,%.6f\n", r.hour, r.expected_mw, r.delivered_mw,
                  r.deviation_mw);
    out << buf;
  }
  return out.str();
}

std::string report_fuzz(const RunResult& result) {
  if (!result.fuzz_records) throw NoFuzzData("run contains no fuzz campaign");
  const auto rows = summarize_fuzz(*result.fuzz_records);
  return fuzz_summary_csv(rows);
}

}  // namespace evsim
