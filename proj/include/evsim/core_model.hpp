// SPDX-License-Identifier: Apache-2.0
// Scenario configuration, validation, and the battery / grid-load primitives.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evsim/attack_plan.hpp"
#include "evsim/ocpp.hpp"
#include "evsim/sim_time.hpp"

namespace evsim {

struct EvConfig {
  std::string id;
  double battery_capacity_kwh = 0.0;
  double initial_soc = 0.0;
  double max_charge_rate_kw = 0.0;
  double plug_in_time_s = 0.0;
  std::string target_evse;
  // Virtual time at which the driver stops charging, if ever.
  std::optional<double> interrupt_at_s;

  bool operator==(const EvConfig&) const = default;
};

struct EvseConfig {
  std::string id;
  double max_power_kw = 0.0;
  std::string location;
  double charge_status_timeout_s = 2.0;
  // Response window for the handshake and power-down phases.
  double state_timeout_s = 2.0;
  double heartbeat_interval_s = 1.0;
  double link_latency_s = 0.005;
  double link_loss_prob = 0.0;

  bool operator==(const EvseConfig&) const = default;
};

struct Timing {
  double tick_s = 1.0;
  double handshake_delay_s = 0.2;
  double power_down_ramp_s = 5.0;
  double power_sample_s = 60.0;

  bool operator==(const Timing&) const = default;
};

struct Scenario {
  std::vector<EvConfig> evs;
  std::vector<EvseConfig> evses;
  CsmsPolicy csms;
  std::vector<AttackPlan> attacks;
  double schedule_end_s = 0.0;
  std::uint64_t seed = 0;
  // 24 hourly MW values; empty when the scenario models no grid load.
  std::vector<double> baseline_load_profile;
  Timing timing;

  bool operator==(const Scenario&) const = default;
};

struct BatteryState {
  double soc = 0.0;
  double capacity_kwh = 0.0;
};

/// Base of the scenario parse errors; `path` names the offending element,
/// e.g. "evs[0].initial_soc".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class SyntaxError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

class SchemaError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

struct Violation {
  std::string path;
  std::string reason;
  bool operator==(const Violation&) const = default;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);

/// Canonical JSON form: every field present, defaults written out.
std::string serialize_scenario(const Scenario& s);

std::vector<Violation> validate_scenario(const Scenario& s);

BatteryState battery_step(BatteryState b, double delivered_kw, double dt_s);

/// Piecewise-linear interpolation between hourly points, wrapping at 24 h.
double baseline_load(std::span<const double> profile, double t_s);

/// Daily load curve used by the shipped L3 scenario: evening peak with the
/// 12:00-20:00 band inside [30, 40] MW.
std::array<double, 24> reference_daily_profile();

/// Identifier of the simulated charging cable between an EVSE and its EV.
std::string cable_link_id(std::string_view evse_id);

const EvConfig* find_ev(const Scenario& s, std::string_view id);
const EvseConfig* find_evse(const Scenario& s, std::string_view id);

}  // namespace evsim
