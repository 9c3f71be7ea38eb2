// SPDX-License-Identifier: Apache-2.0
// Deterministic discrete-event loop driving sessions, links, attacks and the
// reference CSMS, plus the CSV reports derived from a run.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evsim/attack.hpp"
#include "evsim/charging_fsm.hpp"
#include "evsim/core_model.hpp"
#include "evsim/driver.hpp"
#include "evsim/sim_net.hpp"
#include "evsim/telemetry.hpp"

namespace evsim {

struct RunOptions {
  DriverKind driver = DriverKind::Linked;
  // Sleep so virtual time tracks wall time; never changes event order.
  bool realtime = false;
};

enum class RunExit { Completed, Interrupted };

struct RunResult {
  TelemetryStore store;
  std::map<std::string, PacketLog> packet_logs;
  std::optional<std::vector<FuzzRecord>> fuzz_records;
  RunExit exit = RunExit::Completed;
};

class ScenarioInvalid : public std::runtime_error {
 public:
  explicit ScenarioInvalid(std::vector<Violation> v);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class InternalInvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnknownLink : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoFuzzData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunResult run(const Scenario& scenario, const RunOptions& options = {});

/// Rebuilds packet logs and fuzz records from a persisted telemetry store.
RunResult result_from_store(TelemetryStore store);

std::string report_packets(const RunResult& result, std::string_view link_id);

struct PowerRow {
  long hour = 0;
  double expected_mw = 0.0;
  double delivered_mw = 0.0;
  double deviation_mw = 0.0;
};

std::vector<PowerRow> power_rows(const RunResult& result);
std::string report_power(const RunResult& result);

std::string report_fuzz(const RunResult& result);

}  // namespace evsim
