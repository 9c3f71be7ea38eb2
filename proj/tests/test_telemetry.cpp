// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "evsim/telemetry.hpp"

using namespace evsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "evsim_telemetry_test";
  fs::create_directories(dir);
  return dir / name;
}

TelemetryStore sample() {
  TelemetryStore s;
  s.append(make_record(0, "runner", RecordKind::ScenarioStart, Json{{"seed", 1}}));
  TelemetryRecord t = make_record(1.5, "evse:evse-1", RecordKind::StateTransition,
                                  Json{{"from", "Unmated"}, {"to", "Mated"}});
  t.session_id = "evse-1#1";
  s.append(t);
  TelemetryRecord a = make_record(18, "attack", RecordKind::AttackStart, Json{{"layers", "L1-L2"}});
  a.layer = Layer::L1;
  s.append(a);
  s.append(make_record(18, "link:evse-1-cable", RecordKind::Packet, Json{{"sent", 6}}));
  s.append(make_record(30, "runner", RecordKind::ScenarioEnd));
  return s;
}

}  // namespace

TEST_CASE("append assigns positions and rejects regressions") {
  TelemetryStore s;
  CHECK(s.append(make_record(1, "csms", RecordKind::OcppMsg)) == 0);
  CHECK(s.size() == 1);
  CHECK(s.append(make_record(1, "csms", RecordKind::OcppMsg)) == 1);
  CHECK_THROWS_AS(s.append(make_record(0.5, "csms", RecordKind::OcppMsg)), OutOfOrder);
  CHECK(s.size() == 2);
}

TEST_CASE("ten thousand appends keep their order") {
  TelemetryStore s;
  for (int i = 0; i < 10000; ++i) s.append(make_record(i * 0.1, "csms", RecordKind::OcppMsg, Json{{"i", i}}));
  const auto all = s.query(Query{});
  REQUIRE(all.size() == 10000);
  for (int i = 0; i < 10000; ++i) CHECK(all[static_cast<std::size_t>(i)].payload["i"] == i);
}

TEST_CASE("query filters") {
  const TelemetryStore s = sample();
  CHECK(s.query(Query{}).size() == s.size());

  Query atk;
  atk.kind = RecordKind::AttackStart;
  const auto hits = s.query(atk);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].ts == 18.0);

  Query disjoint;
  disjoint.time_range = {{100.0, 200.0}};
  CHECK(s.query(disjoint).empty());

  Query combo;
  combo.time_range = {{1.0, 18.0}};
  combo.source = "link:evse-1-cable";
  CHECK(s.query(combo).size() == 1);

  Query sess;
  sess.session_id = "evse-1#1";
  CHECK(s.query(sess).size() == 1);
}

TEST_CASE("JSONL round trip keeps optional fields") {
  const TelemetryStore s = sample();
  const fs::path p = scratch("round.jsonl");
  export_jsonl(s, p);
  const TelemetryStore back = load_jsonl(p);
  CHECK(back == s);
  CHECK(to_jsonl(back) == to_jsonl(s));

  const std::string text = to_jsonl(s);
  CHECK(text.find("null") == std::string::npos);
  const Json first = Json::parse(text.substr(0, text.find('\n')));
  CHECK(!first.contains("session_id"));
  CHECK(!first.contains("layer"));
  for (const char* key : {"ts", "seq", "source", "kind", "payload"}) CHECK(first.contains(key));
}

TEST_CASE("truncated line is a format error naming the line") {
  const TelemetryStore s = sample();
  std::string text = to_jsonl(s);
  const auto third = text.find('\n', text.find('\n') + 1);
  text.resize(third + 10);
  const fs::path p = scratch("broken.jsonl");
  std::ofstream(p, std::ios::binary) << text;
  try {
    load_jsonl(p);
    FAIL("expected a format error");
  } catch (const TelemetryFormatError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_jsonl("{\"ts\":0,\"seq\":0,\"source\":\"x\",\"kind\":\"nonsense\",\"payload\":{}}\n"),
                  TelemetryFormatError);
}

TEST_CASE("empty store exports an empty file") {
  const fs::path p = scratch("empty.jsonl");
  export_jsonl(TelemetryStore{}, p);
  CHECK(fs::file_size(p) == 0);
  CHECK(load_jsonl(p).empty());
  CHECK_THROWS_AS(load_jsonl(scratch("missing/none.jsonl")), TelemetryIoError);
}

TEST_CASE("kind and layer vocabularies round trip") {
  for (int k = 0; k <= static_cast<int>(RecordKind::Error); ++k) {
    const auto kind = static_cast<RecordKind>(k);
    CHECK(record_kind_from_name(record_kind_name(kind)) == kind);
  }
  for (Layer l : {Layer::L1, Layer::L2, Layer::L3, Layer::L4}) CHECK(layer_from_name(layer_name(l)) == l);
  CHECK(!record_kind_from_name("bogus"));
}
